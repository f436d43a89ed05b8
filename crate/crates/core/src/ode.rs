//! Problem and solution representations shared by the steppers and the
//! deferred-correction driver.
//!
//! A split problem is a family of operators `f_1, ..., f_Λ` whose sum is the
//! right-hand side of `u' = f(t, u)`. Every operator can be evaluated and,
//! for implicit sub-steps, inverted in the sense of solving
//! `x - γ f_ν(t, x) = rhs`. The default inversion is a Newton iteration; PDE
//! operators override it with banded line solves.

use std::fmt::Debug;
use std::ops::Neg;

use num_complex::Complex64;
use num_traits::NumAssign;

use crate::error::{Error, Result};
use crate::steppers::newton::{self, NewtonConfig};

/// Field the state vectors live in. Implemented for `f64` and `Complex64`.
pub trait Scalar: NumAssign + Copy + Neg<Output = Self> + Send + Sync + Debug + 'static {
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Max-norm; NaN if any entry is NaN.
pub fn max_norm<T: Scalar>(v: &[T]) -> f64 {
    let mut m = 0.0f64;
    for x in v {
        let a = x.modulus();
        if a.is_nan() {
            return f64::NAN;
        }
        m = m.max(a);
    }
    m
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// The operator family of a split initial value problem.
///
/// Operator indices are zero-based in code (`0..num_operators()`).
pub trait SplitRhs<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn num_operators(&self) -> usize;

    /// Writes `f_op(t, u)` into `out`. Callers guarantee `op` and slice
    /// lengths are valid; use [`eval_split_rhs`] for the checked variant.
    fn eval(&self, op: usize, t: f64, u: &[T], out: &mut [T]) -> Result<()>;

    /// Exact Jacobian of `f_op` at `(t, u)`, when available.
    fn jacobian(&self, _op: usize, _t: f64, _u: &[T]) -> Option<DenseMatrix<T>> {
        None
    }

    /// Solves `x - gamma * f_op(t, x) = rhs`. On entry `x` holds the initial
    /// guess.
    fn solve_implicit(&self, op: usize, t: f64, gamma: f64, rhs: &[T], x: &mut [T], cfg: &NewtonConfig) -> Result<()> {
        newton::solve_stage(self, op, t, gamma, rhs, x, cfg).map(|_| ())
    }

    fn eval_total(&self, t: f64, u: &[T], out: &mut [T]) -> Result<()> {
        let mut tmp = vec![T::zero(); self.dim()];
        out.iter_mut().for_each(|o| *o = T::zero());
        for op in 0..self.num_operators() {
            self.eval(op, t, u, &mut tmp)?;
            for (o, v) in out.iter_mut().zip(&tmp) {
                *o += *v;
            }
        }
        Ok(())
    }
}

/// Checked evaluation of a single operator.
pub fn eval_split_rhs<T: Scalar, R: SplitRhs<T> + ?Sized>(rhs: &R, op: usize, t: f64, u: &[T]) -> Result<Vec<T>> {
    if op >= rhs.num_operators() {
        return Err(Error::OperatorIndex { index: op, count: rhs.num_operators() });
    }
    if u.len() != rhs.dim() {
        return Err(Error::Dimension { expected: rhs.dim(), got: u.len() });
    }
    let mut out = vec![T::zero(); u.len()];
    rhs.eval(op, t, u, &mut out)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { op, t });
    }
    Ok(out)
}

/// An initial value problem `u' = Σ f_ν(t, u)`, `u(t0) = u0`, on `[t0, t_end]`.
pub struct SplitIvp<'a, T: Scalar> {
    pub rhs: &'a dyn SplitRhs<T>,
    pub initial_state: Vec<T>,
    pub t0: f64,
    pub t_end: f64,
}

impl<'a, T: Scalar> SplitIvp<'a, T> {
    pub fn new(rhs: &'a dyn SplitRhs<T>, initial_state: Vec<T>, t0: f64, t_end: f64) -> Result<Self> {
        if rhs.num_operators() == 0 {
            return Err(Error::usage("a split problem needs at least one operator"));
        }
        if !(t_end > t0) {
            return Err(Error::usage(format!("empty time span [{t0}, {t_end}]")));
        }
        if initial_state.len() != rhs.dim() {
            return Err(Error::Dimension { expected: rhs.dim(), got: initial_state.len() });
        }
        Ok(SplitIvp { rhs, initial_state, t0, t_end })
    }
}

/// Discrete solution: states at strictly increasing node times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<f64>,
    pub states: Vec<Vec<T>>,
}

impl<T: Clone> Trajectory<T> {
    pub fn new() -> Self {
        Trajectory { times: Vec::new(), states: Vec::new() }
    }

    pub fn push(&mut self, t: f64, state: Vec<T>) {
        debug_assert!(self.times.last().map_or(true, |&last| t > last));
        self.times.push(t);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&Vec<T>> {
        self.states.last()
    }
}

impl<T: Clone> Default for Trajectory<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Small dense row-major matrix, used for Newton Jacobians of ODE problems.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[&[T]]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend_from_slice(r);
        }
        DenseMatrix { n, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            y[i] = row.iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        }
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let (p, pmax) =
                (k..n).map(|i| (i, a[i * n + k].modulus())).fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 || !pmax.is_finite() {
                return Err(Error::Singular { column: k });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                x.swap(k, p);
            }
            let piv = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / piv;
                if l == T::zero() {
                    continue;
                }
                for j in k..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= l * akj;
                }
                let xk = x[k];
                x[i] -= l * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..n {
                s -= a[k * n + j] * x[j];
            }
            x[k] = s / a[k * n + k];
        }
        Ok(x)
    }
}

type OpFn<T> = Box<dyn Fn(f64, &[T], &mut [T]) + Send + Sync>;
type JacFn<T> = Box<dyn Fn(f64, &[T]) -> DenseMatrix<T> + Send + Sync>;

/// A split right-hand side assembled from closures.
pub struct FnSplitRhs<T: Scalar> {
    dim: usize,
    ops: Vec<OpFn<T>>,
    jacobians: Vec<Option<JacFn<T>>>,
}

impl<T: Scalar> FnSplitRhs<T> {
    pub fn new(dim: usize) -> Self {
        FnSplitRhs { dim, ops: Vec::new(), jacobians: Vec::new() }
    }

    pub fn with_operator(mut self, f: impl Fn(f64, &[T], &mut [T]) + Send + Sync + 'static) -> Self {
        self.ops.push(Box::new(f));
        self.jacobians.push(None);
        self
    }

    pub fn with_jacobian_operator(
        mut self,
        f: impl Fn(f64, &[T], &mut [T]) + Send + Sync + 'static,
        jac: impl Fn(f64, &[T]) -> DenseMatrix<T> + Send + Sync + 'static,
    ) -> Self {
        self.ops.push(Box::new(f));
        self.jacobians.push(Some(Box::new(jac)));
        self
    }
}

impl<T: Scalar> SplitRhs<T> for FnSplitRhs<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_operators(&self) -> usize {
        self.ops.len()
    }

    fn eval(&self, op: usize, t: f64, u: &[T], out: &mut [T]) -> Result<()> {
        (self.ops[op])(t, u, out);
        Ok(())
    }

    fn jacobian(&self, op: usize, t: f64, u: &[T]) -> Option<DenseMatrix<T>> {
        self.jacobians[op].as_ref().map(|j| j(t, u))
    }
}

/// Linear autonomous split problem `u' = Σ A_ν u`. Implicit sub-steps are
/// solved directly, so the scalar case doubles as the stability test
/// problem.
#[derive(Debug, Clone)]
pub struct LinearSplit<T: Scalar> {
    pub operators: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> LinearSplit<T> {
    pub fn scalar(lambdas: &[T]) -> Self {
        LinearSplit { operators: lambdas.iter().map(|&l| DenseMatrix { n: 1, data: vec![l] }).collect() }
    }

    pub fn new(operators: Vec<DenseMatrix<T>>) -> Self {
        let n = operators.first().map_or(0, |m| m.n);
        assert!(operators.iter().all(|m| m.n == n), "operators must share a dimension");
        LinearSplit { operators }
    }
}

impl<T: Scalar> SplitRhs<T> for LinearSplit<T> {
    fn dim(&self) -> usize {
        self.operators[0].n
    }

    fn num_operators(&self) -> usize {
        self.operators.len()
    }

    fn eval(&self, op: usize, _t: f64, u: &[T], out: &mut [T]) -> Result<()> {
        self.operators[op].matvec(u, out);
        Ok(())
    }

    fn jacobian(&self, op: usize, _t: f64, _u: &[T]) -> Option<DenseMatrix<T>> {
        Some(self.operators[op].clone())
    }

    fn solve_implicit(&self, op: usize, _t: f64, gamma: f64, rhs: &[T], x: &mut [T], _cfg: &NewtonConfig) -> Result<()> {
        let a = &self.operators[op];
        let g = T::from_real(gamma);
        if a.n == 1 {
            let denom = T::one() - g * a.data[0];
            if denom == T::zero() {
                return Err(Error::Pole { op });
            }
            x[0] = rhs[0] / denom;
            return Ok(());
        }
        let mut m = DenseMatrix::identity(a.n);
        for (mij, &aij) in m.data.iter_mut().zip(&a.data) {
            *mij -= g * aij;
        }
        let sol = m.solve(rhs)?;
        x.copy_from_slice(&sol);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_pair(l1: f64, l2: f64) -> LinearSplit<f64> {
        LinearSplit::scalar(&[l1, l2])
    }

    #[test]
    fn linear_scalar_operator_value() {
        let p = scalar_pair(-1.0, -1.0);
        let v = eval_split_rhs(&p, 0, 0.3, &[1.0]).unwrap();
        assert_eq!(v, vec![-1.0]);
    }

    #[test]
    fn zero_operator_gives_zero() {
        let p = FnSplitRhs::<f64>::new(3).with_operator(|_, _, out| out.fill(0.0));
        let v = eval_split_rhs(&p, 0, 1.0, &[1.0, -2.0, 5.0]).unwrap();
        assert_eq!(v, vec![0.0; 3]);
    }

    #[test]
    fn operator_index_out_of_range() {
        let p = scalar_pair(-1.0, -1.0);
        let err = eval_split_rhs(&p, 2, 0.0, &[1.0]).unwrap_err();
        assert!(matches!(err, Error::OperatorIndex { index: 2, count: 2 }));
    }

    #[test]
    fn non_finite_output_is_reported() {
        let p = FnSplitRhs::<f64>::new(1).with_operator(|_, u, out| out[0] = 1.0 / u[0]);
        let err = eval_split_rhs(&p, 0, 0.5, &[0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { op: 0, t } if t == 0.5));
    }

    #[test]
    fn ivp_rejects_empty_span() {
        let p = scalar_pair(-1.0, -1.0);
        assert!(SplitIvp::new(&p, vec![1.0], 0.0, 0.0).is_err());
        assert!(SplitIvp::new(&p, vec![1.0, 2.0], 0.0, 1.0).is_err());
        assert!(SplitIvp::new(&p, vec![1.0], 0.0, 1.0).is_ok());
    }

    #[test]
    fn dense_solve_with_pivoting() {
        let a = DenseMatrix::from_rows(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        let x = [1.0, -2.0, 0.5];
        let mut b = [0.0; 3];
        a.matvec(&x, &mut b);
        let sol = a.solve(&b).unwrap();
        for (s, e) in sol.iter().zip(&x) {
            assert!((s - e).abs() < 1e-14);
        }
        let sing = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(sing.solve(&[1.0, 1.0]), Err(Error::Singular { .. })));
    }

    #[test]
    fn scalar_pole_detected() {
        let p = LinearSplit::scalar(&[Complex64::new(2.0, 0.0)]);
        let mut x = [Complex64::new(0.0, 0.0)];
        let err = p.solve_implicit(0, 0.0, 0.5, &[Complex64::new(1.0, 0.0)], &mut x, &NewtonConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Pole { op: 0 }));
    }
}
