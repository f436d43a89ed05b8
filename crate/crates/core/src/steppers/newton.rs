use crate::error::{Error, Result};
use crate::ode::{max_norm, DenseMatrix, Scalar, SplitRhs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    /// Use the problem's Jacobian when it supplies one, otherwise fall back
    /// to finite differences.
    Exact,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iters: usize,
    pub jacobian_mode: JacobianMode,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { abs_tol: 1e-12, rel_tol: 1e-12, max_iters: 50, jacobian_mode: JacobianMode::Exact }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::usage("Newton tolerances must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::usage("Newton needs at least one iteration"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Residual max-norms, starting with the residual at the initial guess.
    pub residual_history: Vec<f64>,
}

/// Forward-difference Jacobian of `residual` at `x`, step `√ε·(1+|x_i|)`.
pub fn fd_jacobian<T: Scalar>(residual: &dyn Fn(&[T], &mut [T]) -> Result<()>, x: &[T], r0: &[T]) -> Result<DenseMatrix<T>> {
    let n = x.len();
    let mut jac = DenseMatrix::zeros(n);
    let mut xp = x.to_vec();
    let mut rp = vec![T::zero(); n];
    let sqrt_eps = f64::EPSILON.sqrt();
    for j in 0..n {
        let h = sqrt_eps * (1.0 + x[j].modulus());
        xp[j] = x[j] + T::from_real(h);
        residual(&xp, &mut rp)?;
        let inv_h = T::from_real(1.0 / h);
        for i in 0..n {
            jac.set(i, j, (rp[i] - r0[i]) * inv_h);
        }
        xp[j] = x[j];
    }
    Ok(jac)
}

/// Newton iteration for `residual(x) = 0`.
///
/// Converged when `‖r(x)‖∞ ≤ abs_tol + rel_tol·‖r(guess)‖∞`, or when the
/// update drops to the rounding level of `x`.
pub fn newton_solve<T: Scalar>(
    residual: &dyn Fn(&[T], &mut [T]) -> Result<()>,
    jacobian: Option<&dyn Fn(&[T]) -> DenseMatrix<T>>,
    guess: &[T],
    cfg: &NewtonConfig,
) -> Result<(Vec<T>, NewtonReport)> {
    cfg.validate()?;
    let n = guess.len();
    let mut x = guess.to_vec();
    let mut r = vec![T::zero(); n];
    residual(&x, &mut r)?;
    let r0 = max_norm(&r);
    let mut history = vec![r0];
    if !r0.is_finite() {
        return Err(Error::NewtonDivergence { iterations: 0, residual: r0, last: real_parts(&x) });
    }
    if r0 == 0.0 || r0 <= cfg.abs_tol {
        return Ok((x, NewtonReport { iterations: 0, residual_history: history }));
    }
    let target = cfg.abs_tol + cfg.rel_tol * r0;
    for it in 1..=cfg.max_iters {
        let jac = match (cfg.jacobian_mode, jacobian) {
            (JacobianMode::Exact, Some(j)) => j(&x),
            _ => fd_jacobian(residual, &x, &r)?,
        };
        let neg_r: Vec<T> = r.iter().map(|&v| -v).collect();
        let dx = jac.solve(&neg_r)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += *d;
        }
        residual(&x, &mut r)?;
        let rn = max_norm(&r);
        history.push(rn);
        if !rn.is_finite() {
            break;
        }
        let stalled = max_norm(&dx) <= 4.0 * f64::EPSILON * max_norm(&x);
        if rn <= target || stalled {
            return Ok((x, NewtonReport { iterations: it, residual_history: history }));
        }
    }
    Err(Error::NewtonDivergence { iterations: history.len() - 1, residual: *history.last().unwrap(), last: real_parts(&x) })
}

fn real_parts<T: Scalar>(x: &[T]) -> Vec<f64> {
    x.iter().map(|v| v.modulus()).collect()
}

/// Solves the implicit sub-step `x - γ f_op(t, x) = b` in place, with `x`
/// holding the initial guess.
pub fn solve_stage<T: Scalar, R: SplitRhs<T> + ?Sized>(
    rhs: &R,
    op: usize,
    t: f64,
    gamma: f64,
    b: &[T],
    x: &mut [T],
    cfg: &NewtonConfig,
) -> Result<NewtonReport> {
    let n = b.len();
    let g = T::from_real(gamma);
    let residual = |y: &[T], out: &mut [T]| -> Result<()> {
        rhs.eval(op, t, y, out)?;
        for i in 0..n {
            out[i] = y[i] - g * out[i] - b[i];
        }
        Ok(())
    };
    let exact_jac = |y: &[T]| -> DenseMatrix<T> {
        let mut m = rhs.jacobian(op, t, y).expect("checked availability");
        for (k, v) in m.data.iter_mut().enumerate() {
            *v = -g * *v;
            if k / n == k % n {
                *v += T::one();
            }
        }
        m
    };
    let has_jac = cfg.jacobian_mode == JacobianMode::Exact && rhs.jacobian(op, t, x).is_some();
    let jac: Option<&dyn Fn(&[T]) -> DenseMatrix<T>> = if has_jac { Some(&exact_jac) } else { None };
    let (sol, report) = newton_solve(&residual, jac, x, cfg).map_err(|e| Error::Stage { op, t, source: Box::new(e) })?;
    x.copy_from_slice(&sol);
    Ok(report)
}
