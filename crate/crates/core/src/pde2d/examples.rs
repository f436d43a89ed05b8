//! Problems used in the numerical experiments.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::grid::{Boundary, Grid2D};
use super::problem::{Problem, Reaction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemId {
    Example1,
    Example2,
    Example3,
    Fhn,
    Schnakenberg,
}

impl ProblemId {
    pub const ALL: [ProblemId; 5] =
        [ProblemId::Example1, ProblemId::Example2, ProblemId::Example3, ProblemId::Fhn, ProblemId::Schnakenberg];

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Example1 => "example1",
            ProblemId::Example2 => "example2",
            ProblemId::Example3 => "example3",
            ProblemId::Fhn => "fhn",
            ProblemId::Schnakenberg => "schnakenberg",
        }
    }

    pub fn build(self, n: usize) -> Result<Problem> {
        match self {
            ProblemId::Example1 => example1(n),
            ProblemId::Example2 => example2(n),
            ProblemId::Example3 => example3(n),
            ProblemId::Fhn => fhn(n, FhnParams::default()),
            ProblemId::Schnakenberg => schnakenberg(n, SchnakenbergParams::default()),
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        ProblemId::ALL.into_iter().find(|p| p.name() == k).ok_or_else(|| Error::usage(format!("unknown problem '{s}'")))
    }
}

/// `a = 1` on `[-1, 1]²`, exact solution `(1 - y) e^{t + x}`.
pub fn example1(n: usize) -> Result<Problem> {
    let exact = |x: f64, y: f64, t: f64| (1.0 - y) * (t + x).exp();
    Ok(Problem {
        name: "example1".into(),
        grid: Grid2D::square(-1.0, 1.0, n, Boundary::Dirichlet)?,
        diffusion: vec![1.0],
        coefficient: None,
        boundary_data: Some(Arc::new(move |_, x, y, t| exact(x, y, t))),
        reaction: None,
        initial: Arc::new(move |_, x, y| exact(x, y, 0.0)),
        exact: Some(Arc::new(move |_, x, y, t| exact(x, y, t))),
        t0: 0.0,
    })
}

/// Variable coefficient `a = 2 + 0.5 sin(π(4x + y))`, periodic on `[-1, 1]²`.
pub fn example2(n: usize) -> Result<Problem> {
    Ok(Problem {
        name: "example2".into(),
        grid: Grid2D::square(-1.0, 1.0, n, Boundary::Periodic)?,
        diffusion: vec![1.0],
        coefficient: Some(Arc::new(|x, y| {
            let arg = PI * (4.0 * x + y);
            (2.0 + 0.5 * arg.sin(), 2.0 * PI * arg.cos(), 0.5 * PI * arg.cos())
        })),
        boundary_data: None,
        reaction: None,
        initial: Arc::new(|_, x, y| (2.0 * PI * (x + y)).sin()),
        exact: None,
        t0: 0.0,
    })
}

/// Forcing of the nonlinear heat equation with solution
/// `e^{-t} cos(πx) cos(πy)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForcedQuadratic;

impl Reaction for ForcedQuadratic {
    fn components(&self) -> usize {
        1
    }

    fn eval(&self, t: f64, x: f64, y: f64, u: &[f64], out: &mut [f64]) {
        let cc = (PI * x).cos() * (PI * y).cos();
        let e = (-t).exp();
        out[0] = -u[0] * u[0] + e * e * cc * cc + (2.0 * PI * PI - 1.0) * e * cc;
    }

    fn jacobian(&self, _: f64, _: f64, _: f64, u: &[f64], jac: &mut [f64]) {
        jac[0] = -2.0 * u[0];
    }
}

pub fn example3(n: usize) -> Result<Problem> {
    let exact = |x: f64, y: f64, t: f64| (-t).exp() * (PI * x).cos() * (PI * y).cos();
    Ok(Problem {
        name: "example3".into(),
        grid: Grid2D::square(-1.0, 1.0, n, Boundary::Dirichlet)?,
        diffusion: vec![1.0],
        coefficient: None,
        boundary_data: Some(Arc::new(move |_, x, y, t| exact(x, y, t))),
        reaction: Some(Arc::new(ForcedQuadratic)),
        initial: Arc::new(move |_, x, y| exact(x, y, 0.0)),
        exact: Some(Arc::new(move |_, x, y, t| exact(x, y, t))),
        t0: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhnParams {
    pub d_u: f64,
    pub d_v: f64,
    pub a: f64,
    pub c: f64,
    pub d: f64,
    pub delta: f64,
}

impl Default for FhnParams {
    fn default() -> Self {
        FhnParams { d_u: 1.0, d_v: 0.0, a: 0.1, c: 1.0, d: 0.5, delta: 0.005 }
    }
}

impl Reaction for FhnParams {
    fn components(&self) -> usize {
        2
    }

    fn eval(&self, _: f64, _: f64, _: f64, s: &[f64], out: &mut [f64]) {
        let (u, v) = (s[0], s[1]);
        out[0] = (self.c * u * (1.0 - u) * (u - self.a) - v) / self.delta;
        out[1] = u - self.d * v;
    }

    fn jacobian(&self, _: f64, _: f64, _: f64, s: &[f64], jac: &mut [f64]) {
        let u = s[0];
        let dh = self.c * ((1.0 - u) * (u - self.a) - u * (u - self.a) + u * (1.0 - u));
        jac[0] = dh / self.delta;
        jac[1] = -1.0 / self.delta;
        jac[2] = 1.0;
        jac[3] = -self.d;
    }
}

pub fn fhn_initial(x: f64, y: f64) -> (f64, f64) {
    let u = if x < 0.0 || y > 5.0 {
        0.0
    } else {
        let s = |c: f64| 1.0 / (1.0 + (4.0 * (x.abs() - c)).exp()).powi(2);
        s(5.0) - s(1.0)
    };
    let v = if x < 1.0 && y > -10.0 { 0.15 } else { 0.0 };
    (u, v)
}

/// FitzHugh-Nagumo on `[-20, 20]²`, periodic.
pub fn fhn(n: usize, p: FhnParams) -> Result<Problem> {
    Ok(Problem {
        name: "fhn".into(),
        grid: Grid2D::square(-20.0, 20.0, n, Boundary::Periodic)?,
        diffusion: vec![p.d_u, p.d_v],
        coefficient: None,
        boundary_data: None,
        reaction: Some(Arc::new(p)),
        initial: Arc::new(|c, x, y| {
            let (u, v) = fhn_initial(x, y);
            if c == 0 {
                u
            } else {
                v
            }
        }),
        exact: None,
        t0: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchnakenbergParams {
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Default for SchnakenbergParams {
    fn default() -> Self {
        SchnakenbergParams { kappa: 100.0, a: 0.1305, b: 0.7695, d1: 0.05, d2: 1.0 }
    }
}

impl Reaction for SchnakenbergParams {
    fn components(&self) -> usize {
        2
    }

    fn eval(&self, _: f64, _: f64, _: f64, s: &[f64], out: &mut [f64]) {
        let (ca, ci) = (s[0], s[1]);
        let q = ca * ca * ci;
        out[0] = self.kappa * (self.a - ca + q);
        out[1] = self.kappa * (self.b - q);
    }

    fn jacobian(&self, _: f64, _: f64, _: f64, s: &[f64], jac: &mut [f64]) {
        let (ca, ci) = (s[0], s[1]);
        let k = self.kappa;
        jac[0] = k * (-1.0 + 2.0 * ca * ci);
        jac[1] = k * ca * ca;
        jac[2] = -2.0 * k * ca * ci;
        jac[3] = -k * ca * ca;
    }
}

/// Schnakenberg activator-inhibitor model on `[0, 1]²`, periodic.
pub fn schnakenberg(n: usize, p: SchnakenbergParams) -> Result<Problem> {
    Ok(Problem {
        name: "schnakenberg".into(),
        grid: Grid2D::square(0.0, 1.0, n, Boundary::Periodic)?,
        diffusion: vec![p.d1, p.d2],
        coefficient: None,
        boundary_data: None,
        reaction: Some(Arc::new(p)),
        initial: Arc::new(move |c, x, y| {
            if c == 0 {
                let r2 = (x - 1.0 / 3.0).powi(2) + (y - 0.5).powi(2);
                p.a + p.b + 1e-3 * (-100.0 * r2).exp()
            } else {
                p.b / (p.a + p.b).powi(2)
            }
        }),
        exact: None,
        t0: 0.0,
    })
}
