use std::fmt;
use std::sync::Arc;

use super::grid::{Boundary, Grid2D};
use crate::error::{Error, Result};

/// Pointwise source `s(t, x, y, u)` acting on the local state of all
/// components at one node.
pub trait Reaction: Send + Sync {
    fn components(&self) -> usize;

    fn eval(&self, t: f64, x: f64, y: f64, u: &[f64], out: &mut [f64]);

    /// Row-major `∂s/∂u`, `components()²` entries.
    fn jacobian(&self, t: f64, x: f64, y: f64, u: &[f64], jac: &mut [f64]);
}

pub type Field2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// `(component, x, y, t) -> value`.
pub type ComponentField = Arc<dyn Fn(usize, f64, f64, f64) -> f64 + Send + Sync>;
/// `(x, y) -> (a, a_x, a_y)`.
pub type Coefficient = Arc<dyn Fn(f64, f64) -> (f64, f64, f64) + Send + Sync>;

/// `u_t = D_c ∇·(a ∇u) + s(t, u)` on a rectangle.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub grid: Grid2D,
    /// One diffusion constant per component.
    pub diffusion: Vec<f64>,
    /// `None` means `a ≡ 1`.
    pub coefficient: Option<Coefficient>,
    /// Wall data `g`, required on Dirichlet grids.
    pub boundary_data: Option<ComponentField>,
    pub reaction: Option<Arc<dyn Reaction>>,
    /// `(component, x, y) -> u_c(x, y, t0)`.
    pub initial: Arc<dyn Fn(usize, f64, f64) -> f64 + Send + Sync>,
    pub exact: Option<ComponentField>,
    pub t0: f64,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("grid", &self.grid)
            .field("diffusion", &self.diffusion)
            .field("variable_coefficient", &self.coefficient.is_some())
            .field("reaction", &self.reaction.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl Problem {
    pub fn components(&self) -> usize {
        self.diffusion.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.diffusion.is_empty() {
            return Err(Error::usage("problem has no components"));
        }
        if self.diffusion.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::usage(format!("diffusion constants must be finite and non-negative: {:?}", self.diffusion)));
        }
        if let Some(r) = &self.reaction {
            if r.components() != self.components() {
                return Err(Error::Dimension { expected: self.components(), got: r.components() });
            }
        }
        if self.grid.boundary == Boundary::Dirichlet && self.boundary_data.is_none() {
            return Err(Error::usage("Dirichlet grid without boundary data"));
        }
        Ok(())
    }

    /// Initial state, component-major then y-outer.
    pub fn initial_state(&self) -> Vec<f64> {
        (0..self.components()).flat_map(|c| self.grid.sample(|x, y| (self.initial)(c, x, y))).collect()
    }

    pub fn exact_state(&self, t: f64) -> Option<Vec<f64>> {
        let e = self.exact.as_ref()?;
        Some((0..self.components()).flat_map(|c| self.grid.sample(|x, y| e(c, x, y, t))).collect())
    }
}

/// `a`, `a_x`, `a_y` sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub a: Vec<f64>,
    pub a_x: Vec<f64>,
    pub a_y: Vec<f64>,
    pub uniform: bool,
}

impl CoefficientField {
    pub fn new(grid: &Grid2D, coefficient: Option<&Coefficient>) -> Result<Self> {
        let n = grid.len();
        let Some(c) = coefficient else {
            return Ok(CoefficientField { a: vec![1.0; n], a_x: vec![0.0; n], a_y: vec![0.0; n], uniform: true });
        };
        let mut f = CoefficientField { a: Vec::with_capacity(n), a_x: Vec::with_capacity(n), a_y: Vec::with_capacity(n), uniform: false };
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (a, ax, ay) = c(grid.x(i), grid.y(j));
                if !(a > 0.0) {
                    return Err(Error::usage(format!("a = {a} at ({}, {}) is not positive", grid.x(i), grid.y(j))));
                }
                f.a.push(a);
                f.a_x.push(ax);
                f.a_y.push(ay);
            }
        }
        Ok(f)
    }
}
