//! One-step splitting integrators.
//!
//! All three schemes are sequences of implicit sub-steps on single
//! operators, so each only needs [`SplitRhs::solve_implicit`]:
//!
//! * Lie-Trotter: backward Euler on `f_1`, then `f_2`, ... over the full step.
//! * Strang: trapezoidal half-steps in the palindromic order
//!   `f_1, f_2, (f_3 full step), f_2, f_1`.
//! * ADI (Peaceman-Rachford): two half-steps, each implicit in one operator
//!   and explicit in the other.

pub mod newton;
pub mod tableau;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ode::{Scalar, SplitRhs};
use newton::NewtonConfig;
pub use tableau::{ark_step, ButcherTableauArk, OperatorCoefficients};

fn check_step<T: Scalar>(rhs: &dyn SplitRhs<T>, dt: f64, u: &[T]) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::usage(format!("step size must be positive, got {dt}")));
    }
    if u.len() != rhs.dim() {
        return Err(Error::Dimension { expected: rhs.dim(), got: u.len() });
    }
    Ok(())
}

fn backward_euler<T: Scalar>(rhs: &dyn SplitRhs<T>, op: usize, t1: f64, dt: f64, x0: &[T], newton: &NewtonConfig) -> Result<Vec<T>> {
    let mut x = x0.to_vec();
    rhs.solve_implicit(op, t1, dt, x0, &mut x, newton)?;
    Ok(x)
}

/// Trapezoidal rule for `u' = f_op(t, u)` from `t0` to `t1`.
fn trapezoid<T: Scalar>(rhs: &dyn SplitRhs<T>, op: usize, t0: f64, t1: f64, x0: &[T], newton: &NewtonConfig) -> Result<Vec<T>> {
    let half = 0.5 * (t1 - t0);
    let mut b = vec![T::zero(); x0.len()];
    rhs.eval(op, t0, x0, &mut b)?;
    let w = T::from_real(half);
    for (bi, &xi) in b.iter_mut().zip(x0) {
        *bi = xi + w * *bi;
    }
    let mut x = x0.to_vec();
    rhs.solve_implicit(op, t1, half, &b, &mut x, newton)?;
    Ok(x)
}

/// Lie-Trotter step with backward Euler sub-steps in operator index order.
pub fn lie_trotter_step<T: Scalar>(rhs: &dyn SplitRhs<T>, t: f64, dt: f64, u: &[T], newton: &NewtonConfig) -> Result<Vec<T>> {
    let order: Vec<usize> = (0..rhs.num_operators()).collect();
    lie_trotter_step_ordered(rhs, t, dt, u, &order, newton)
}

/// Lie-Trotter step with a caller-chosen operator sequence.
pub fn lie_trotter_step_ordered<T: Scalar>(
    rhs: &dyn SplitRhs<T>,
    t: f64,
    dt: f64,
    u: &[T],
    order: &[usize],
    newton: &NewtonConfig,
) -> Result<Vec<T>> {
    check_step(rhs, dt, u)?;
    let mut x = u.to_vec();
    for &op in order {
        if op >= rhs.num_operators() {
            return Err(Error::OperatorIndex { index: op, count: rhs.num_operators() });
        }
        x = backward_euler(rhs, op, t + dt, dt, &x, newton)?;
    }
    Ok(x)
}

/// Strang step for two or three operators with trapezoidal sub-steps.
///
/// Sub-step time windows: `f_1` on `[t, t+dt/2]`, `f_2` on `[t+dt/2, t+dt]`,
/// `f_3` on `[t, t+dt]`, `f_2` on `[t, t+dt/2]`, `f_1` on `[t+dt/2, t+dt]`.
pub fn strang_step<T: Scalar>(rhs: &dyn SplitRhs<T>, t: f64, dt: f64, u: &[T], newton: &NewtonConfig) -> Result<Vec<T>> {
    check_step(rhs, dt, u)?;
    let lam = rhs.num_operators();
    if !(2..=3).contains(&lam) {
        return Err(Error::Unsupported(format!("Strang splitting needs 2 or 3 operators, got {lam}")));
    }
    let mid = t + 0.5 * dt;
    let end = t + dt;
    let mut x = trapezoid(rhs, 0, t, mid, u, newton)?;
    x = trapezoid(rhs, 1, mid, end, &x, newton)?;
    if lam == 3 {
        x = trapezoid(rhs, 2, t, end, &x, newton)?;
    }
    x = trapezoid(rhs, 1, t, mid, &x, newton)?;
    trapezoid(rhs, 0, mid, end, &x, newton)
}

/// Peaceman-Rachford ADI step for two operators.
pub fn adi_step<T: Scalar>(rhs: &dyn SplitRhs<T>, t: f64, dt: f64, u: &[T], newton: &NewtonConfig) -> Result<Vec<T>> {
    check_step(rhs, dt, u)?;
    let lam = rhs.num_operators();
    if lam != 2 {
        return Err(Error::Unsupported(format!("ADI splitting needs exactly 2 operators, got {lam}")));
    }
    let n = u.len();
    let half = 0.5 * dt;
    let w = T::from_real(half);
    let mid = t + half;

    let mut f = vec![T::zero(); n];
    rhs.eval(1, t, u, &mut f)?;
    let b: Vec<T> = u.iter().zip(&f).map(|(&ui, &fi)| ui + w * fi).collect();
    let mut stage = u.to_vec();
    rhs.solve_implicit(0, mid, half, &b, &mut stage, newton)?;

    rhs.eval(0, mid, &stage, &mut f)?;
    let b: Vec<T> = stage.iter().zip(&f).map(|(&si, &fi)| si + w * fi).collect();
    let mut out = stage.clone();
    rhs.solve_implicit(1, t + dt, half, &b, &mut out, newton)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    LieTrotter,
    Strang,
    Adi,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::LieTrotter, Scheme::Strang, Scheme::Adi];

    pub fn order(self) -> usize {
        match self {
            Scheme::LieTrotter => 1,
            Scheme::Strang | Scheme::Adi => 2,
        }
    }

    pub fn step<T: Scalar>(self, rhs: &dyn SplitRhs<T>, t: f64, dt: f64, u: &[T], newton: &NewtonConfig) -> Result<Vec<T>> {
        match self {
            Scheme::LieTrotter => lie_trotter_step(rhs, t, dt, u, newton),
            Scheme::Strang => strang_step(rhs, t, dt, u, newton),
            Scheme::Adi => adi_step(rhs, t, dt, u, newton),
        }
    }

    /// The equivalent ARK tableau for a problem with `num_operators` operators.
    pub fn tableau(self, num_operators: usize) -> Result<ButcherTableauArk> {
        match (self, num_operators) {
            (Scheme::LieTrotter, n) if n >= 1 => Ok(ButcherTableauArk::lie_trotter(n)),
            (Scheme::Strang, 2) => Ok(ButcherTableauArk::strang2()),
            (Scheme::Strang, 3) => Ok(ButcherTableauArk::strang3()),
            (Scheme::Adi, 2) => Ok(ButcherTableauArk::adi()),
            (s, n) => Err(Error::Unsupported(format!("{s} has no tableau for {n} operators"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::LieTrotter => "lie-trotter",
            Scheme::Strang => "strang",
            Scheme::Adi => "adi",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lie-trotter" | "lie_trotter" | "lie" => Ok(Scheme::LieTrotter),
            "strang" => Ok(Scheme::Strang),
            "adi" => Ok(Scheme::Adi),
            other => Err(Error::usage(format!("unknown scheme '{other}'"))),
        }
    }
}

/// A one-step method usable as IDC predictor or corrector.
pub trait Stepper<T: Scalar>: Sync {
    fn order(&self) -> usize;
    fn step(&self, rhs: &dyn SplitRhs<T>, t: f64, dt: f64, u: &[T]) -> Result<Vec<T>>;
}

#[derive(Debug, Clone, Copy)]
pub struct SchemeStepper {
    pub scheme: Scheme,
    pub newton: NewtonConfig,
}

impl SchemeStepper {
    pub fn new(scheme: Scheme) -> Self {
        SchemeStepper { scheme, newton: NewtonConfig::default() }
    }
}

impl<T: Scalar> Stepper<T> for SchemeStepper {
    fn order(&self) -> usize {
        self.scheme.order()
    }

    fn step(&self, rhs: &dyn SplitRhs<T>, t: f64, dt: f64, u: &[T]) -> Result<Vec<T>> {
        self.scheme.step(rhs, t, dt, u, &self.newton)
    }
}

#[derive(Debug, Clone)]
pub struct ArkStepper {
    pub tableau: ButcherTableauArk,
    pub order: usize,
    pub newton: NewtonConfig,
}

impl<T: Scalar> Stepper<T> for ArkStepper {
    fn order(&self) -> usize {
        self.order
    }

    fn step(&self, rhs: &dyn SplitRhs<T>, t: f64, dt: f64, u: &[T]) -> Result<Vec<T>> {
        check_step(rhs, dt, u)?;
        ark_step(&self.tableau, rhs, t, dt, u, &self.newton)
    }
}
