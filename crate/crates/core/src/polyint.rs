//! Lagrange interpolation, quadrature and differentiation on uniform nodes.
//!
//! Weights are derived once per `M` in exact rational arithmetic and stored
//! as `f64`. They are expressed in the unit coordinate `s = (t - t0)/h`, which
//! makes them independent of `t0` and `h`.

use std::sync::OnceLock;

use num::{BigInt, BigRational, One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::ode::Scalar;

/// Largest supported number of sub-intervals.
pub const MAX_M: usize = 16;

/// `M + 1` uniformly spaced nodes `t_m = t0 + m h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformNodeSet {
    pub t0: f64,
    pub h: f64,
    pub m: usize,
}

impl UniformNodeSet {
    pub fn new(t0: f64, h: f64, m: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() || !t0.is_finite() {
            return Err(Error::usage(format!("node spacing must be positive and finite, got {h}")));
        }
        if m == 0 || m > MAX_M {
            return Err(Error::usage(format!("number of sub-intervals must be in 1..={MAX_M}, got {m}")));
        }
        Ok(UniformNodeSet { t0, h, m })
    }

    /// Nodes spanning `[t0, t0 + big_h]` with `m` sub-intervals.
    pub fn over(t0: f64, big_h: f64, m: usize) -> Result<Self> {
        Self::new(t0, big_h / m as f64, m)
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.m).map(|j| self.node(j)).collect()
    }

    pub fn end(&self) -> f64 {
        self.node(self.m)
    }

    /// Unit coordinate of `t`.
    #[inline]
    pub fn unit(&self, t: f64) -> f64 {
        (t - self.t0) / self.h
    }

    /// Values of all cardinal functions at `t`, in product form.
    pub fn cardinals(&self, t: f64) -> Vec<f64> {
        cardinals_unit(self.m, self.unit(t))
    }

    /// Time derivatives of all cardinal functions at `t`.
    pub fn cardinal_derivatives(&self, t: f64) -> Vec<f64> {
        let m = self.m;
        let s = self.unit(t);
        (0..=m)
            .map(|n| {
                let mut total = 0.0;
                for l in (0..=m).filter(|&l| l != n) {
                    let mut v = 1.0 / (n as f64 - l as f64);
                    for k in (0..=m).filter(|&k| k != n && k != l) {
                        v *= (s - k as f64) / (n as f64 - k as f64);
                    }
                    total += v;
                }
                total / self.h
            })
            .collect()
    }
}

fn cardinals_unit(m: usize, s: f64) -> Vec<f64> {
    // exact hit on a node: avoid 0/0-like cancellation in the products
    let r = s.round();
    if (s - r).abs() == 0.0 && r >= 0.0 && r <= m as f64 {
        let mut c = vec![0.0; m + 1];
        c[r as usize] = 1.0;
        return c;
    }
    (0..=m)
        .map(|n| {
            let mut v = 1.0;
            for k in 0..=m {
                if k != n {
                    v *= (s - k as f64) / (n as f64 - k as f64);
                }
            }
            v
        })
        .collect()
}

/// Exact unit-spacing tables for one `M`.
#[derive(Debug)]
struct UnitTables {
    /// `cum[k][n] = ∫_0^k c_n(s) ds`
    cum: Vec<Vec<f64>>,
    /// `gamma[m][n] = cum[m+1][n] / (m+1)`
    gamma: Vec<Vec<f64>>,
    /// `deriv[s-1][j][n] = c_n^{(s)}(j)`
    deriv: Vec<Vec<Vec<f64>>>,
}

fn tables(m: usize) -> &'static UnitTables {
    static CACHE: [OnceLock<UnitTables>; MAX_M + 1] = [const { OnceLock::new() }; MAX_M + 1];
    CACHE[m].get_or_init(|| build_tables(m))
}

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("rational weight fits in f64")
}

/// Monomial coefficients of each cardinal polynomial, lowest degree first.
fn cardinal_coefficients(m: usize) -> Vec<Vec<BigRational>> {
    (0..=m)
        .map(|n| {
            let mut poly = vec![BigRational::one()];
            let mut denom = BigRational::one();
            for k in 0..=m {
                if k == n {
                    continue;
                }
                // multiply by (s - k)
                let mut next = vec![BigRational::zero(); poly.len() + 1];
                for (p, c) in poly.iter().enumerate() {
                    next[p + 1] += c;
                    next[p] -= c * rat(k as i64);
                }
                poly = next;
                denom *= rat(n as i64 - k as i64);
            }
            poly.into_iter().map(|c| c / &denom).collect()
        })
        .collect()
}

fn build_tables(m: usize) -> UnitTables {
    let coef = cardinal_coefficients(m);
    let cum: Vec<Vec<f64>> = (0..=m)
        .map(|k| {
            coef.iter()
                .map(|poly| {
                    let kk = rat(k as i64);
                    let mut pow = kk.clone();
                    let mut acc = BigRational::zero();
                    for (p, c) in poly.iter().enumerate() {
                        acc += c * &pow / rat(p as i64 + 1);
                        pow *= &kk;
                    }
                    acc
                })
                .map(|r| to_f64(&r))
                .collect()
        })
        .collect();
    // gamma rows directly from the rationals to keep them correctly rounded
    let gamma = (0..m)
        .map(|row| {
            let k = row + 1;
            coef.iter()
                .map(|poly| {
                    let kk = rat(k as i64);
                    let mut pow = kk.clone();
                    let mut acc = BigRational::zero();
                    for (p, c) in poly.iter().enumerate() {
                        acc += c * &pow / rat(p as i64 + 1);
                        pow *= &kk;
                    }
                    to_f64(&(acc / kk))
                })
                .collect()
        })
        .collect();
    let deriv = (1..=m)
        .map(|s| {
            (0..=m)
                .map(|j| {
                    coef.iter()
                        .map(|poly| {
                            let mut acc = BigRational::zero();
                            for (p, c) in poly.iter().enumerate().skip(s) {
                                let falling: i64 = ((p - s + 1)..=p).map(|v| v as i64).product();
                                let pow = num::pow(rat(j as i64), p - s);
                                acc += c * rat(falling) * pow;
                            }
                            to_f64(&acc)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    UnitTables { cum, gamma, deriv }
}

fn check_values<T>(nodes: &UniformNodeSet, values: &[Vec<T>]) -> Result<usize> {
    if values.len() != nodes.m + 1 {
        return Err(Error::usage(format!("expected {} node values, got {}", nodes.m + 1, values.len())));
    }
    let dim = values[0].len();
    if values.iter().any(|v| v.len() != dim) {
        return Err(Error::usage("node values have inconsistent lengths"));
    }
    Ok(dim)
}

/// `Σ_n w_n values[n]`
pub fn weighted_sum<T: Scalar>(weights: &[f64], values: &[Vec<T>]) -> Vec<T> {
    let dim = values.first().map_or(0, |v| v.len());
    let mut out = vec![T::zero(); dim];
    for (w, v) in weights.iter().zip(values) {
        if *w != 0.0 {
            let w = T::from_real(*w);
            for (o, x) in out.iter_mut().zip(v) {
                *o += w * *x;
            }
        }
    }
    out
}

/// Value of the degree-`M` interpolant of `values` at `t`. Evaluation is
/// allowed up to one sub-interval outside the node span.
pub fn lagrange_eval<T: Scalar>(nodes: &UniformNodeSet, values: &[Vec<T>], t: f64) -> Result<Vec<T>> {
    check_values(nodes, values)?;
    let s = nodes.unit(t);
    if !(s >= -1.0 - 1e-12 && s <= nodes.m as f64 + 1.0 + 1e-12) {
        return Err(Error::usage(format!("interpolation point {t} too far outside the node span")));
    }
    if s < -1e-12 || s > nodes.m as f64 + 1e-12 {
        log::debug!("extrapolating interpolant to t = {t}");
    }
    Ok(weighted_sum(&nodes.cardinals(t), values))
}

/// Time derivative of the interpolant of `values` at `t`.
pub fn lagrange_derivative<T: Scalar>(nodes: &UniformNodeSet, values: &[Vec<T>], t: f64) -> Result<Vec<T>> {
    check_values(nodes, values)?;
    Ok(weighted_sum(&nodes.cardinal_derivatives(t), values))
}

/// Quadrature weights `γ_{m,j}` for `∫_{t0}^{t_{m+1}}`, normalized by the
/// interval length `t_{m+1} - t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationMatrix {
    pub gamma: Vec<Vec<f64>>,
}

impl IntegrationMatrix {
    /// `∫_{t0}^{t_{row+1}}` of the interpolant of `values`.
    pub fn integrate<T: Scalar>(&self, nodes: &UniformNodeSet, row: usize, values: &[Vec<T>]) -> Vec<T> {
        let len = (row + 1) as f64 * nodes.h;
        let w: Vec<f64> = self.gamma[row].iter().map(|g| g * len).collect();
        weighted_sum(&w, values)
    }
}

pub fn integration_matrix(nodes: &UniformNodeSet) -> IntegrationMatrix {
    IntegrationMatrix { gamma: tables(nodes.m).gamma.clone() }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Weights `w_n` such that `∫_{t0}^{t_upper} L(t) dt = Σ_n w_n ψ_n`.
pub fn partial_weights(nodes: &UniformNodeSet, t_upper: f64) -> Result<Vec<f64>> {
    let m = nodes.m;
    let s = nodes.unit(t_upper);
    let tol = 1e-12 * m as f64;
    if !(s >= -tol && s <= m as f64 + tol) {
        return Err(Error::usage(format!("upper limit {t_upper} outside [{}, {}]", nodes.t0, nodes.end())));
    }
    let s = s.clamp(0.0, m as f64);
    let tab = tables(m);
    let k = s.floor() as usize;
    let frac = s - k as f64;
    let mut w: Vec<f64> = tab.cum[k.min(m)].iter().map(|c| c * nodes.h).collect();
    if frac > 1e-14 && k < m {
        let (gx, gw) = gauss_legendre(m / 2 + 1);
        for (x, wq) in gx.iter().zip(&gw) {
            let sq = k as f64 + 0.5 * frac * (x + 1.0);
            let c = cardinals_unit(m, sq);
            for (wn, cn) in w.iter_mut().zip(&c) {
                *wn += 0.5 * frac * wq * cn * nodes.h;
            }
        }
    }
    Ok(w)
}

/// Exact integral of the interpolant of `values` from `t0` to `t_upper`.
pub fn partial_integral<T: Scalar>(nodes: &UniformNodeSet, values: &[Vec<T>], t_upper: f64) -> Result<Vec<T>> {
    check_values(nodes, values)?;
    Ok(weighted_sum(&partial_weights(nodes, t_upper)?, values))
}

/// `D[j][n] = c_n^{(s)}(t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentiationMatrix {
    pub order: usize,
    pub d: Vec<Vec<f64>>,
}

impl DifferentiationMatrix {
    pub fn apply<T: Scalar>(&self, values: &[Vec<T>]) -> Vec<Vec<T>> {
        self.d.iter().map(|row| weighted_sum(row, values)).collect()
    }
}

pub fn differentiation_matrix(nodes: &UniformNodeSet, s: usize) -> Result<DifferentiationMatrix> {
    if s == 0 || s > nodes.m {
        return Err(Error::usage(format!("derivative order must be in 1..={}, got {s}", nodes.m)));
    }
    let scale = nodes.h.powi(-(s as i32));
    let d = tables(nodes.m).deriv[s - 1].iter().map(|row| row.iter().map(|v| v * scale).collect()).collect();
    Ok(DifferentiationMatrix { order: s, d })
}

/// `Σ_{s=0}^{S} max_j ‖(D_s ψ)_j‖_∞`, with `D_0` the identity.
pub fn sobolev_norm<T: Scalar>(nodes: &UniformNodeSet, values: &[Vec<T>], order: usize) -> Result<f64> {
    check_values(nodes, values)?;
    if order > nodes.m {
        return Err(Error::usage(format!("Sobolev order {order} exceeds M = {}", nodes.m)));
    }
    let max_over = |vals: &[Vec<T>]| vals.iter().flatten().fold(0.0f64, |a, v| a.max(v.modulus()));
    let mut total = max_over(values);
    for s in 1..=order {
        total += max_over(&differentiation_matrix(nodes, s)?.apply(values));
    }
    Ok(total)
}
