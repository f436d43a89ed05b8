//! Factored ADI for the linear problem, and the unfactored Crank-Nicolson
//! step it approximates.

use super::banded::BandedMatrix;
use super::grid::{Axis, Boundary};
use super::system::SemiDiscreteSystem;
use crate::error::{Error, Result};
use crate::ode::SplitRhs;
use crate::steppers::Stepper;

fn check_linear(sys: &SemiDiscreteSystem) -> Result<()> {
    if sys.num_operators() != 2 {
        return Err(Error::Unsupported("ADI applies to problems without a source term".into()));
    }
    Ok(())
}

/// One Peaceman-Rachford step with the wall data split between the sweeps:
///
/// `(I - J1) Ỹ = (I + J2) Y + dt/2 (b1(t+dt) + b2(t))`
/// `(I - J2) Y' = (I + J1) Ỹ + dt/2 (b1(t) + b2(t+dt))`
pub fn adi_pde_step(sys: &SemiDiscreteSystem, t: f64, dt: f64, u: &[f64]) -> Result<Vec<f64>> {
    check_linear(sys)?;
    let n = sys.dim();
    if u.len() != n {
        return Err(Error::Dimension { expected: n, got: u.len() });
    }
    if !(dt > 0.0) {
        return Err(Error::usage(format!("step size must be positive, got {dt}")));
    }
    let h = 0.5 * dt;
    let dirichlet = sys.grid().boundary == Boundary::Dirichlet;
    let walls = |op: usize, s: f64| -> Result<Vec<f64>> {
        if dirichlet {
            sys.boundary_vector(op, s)
        } else {
            Ok(vec![0.0; n])
        }
    };
    let (b1n, b1p) = (walls(0, t)?, walls(0, t + dt)?);
    let (b2n, b2p) = (walls(1, t)?, walls(1, t + dt)?);

    let mut l = vec![0.0; n];
    sys.apply_interior(1, t, u, &mut l)?;
    let rhs: Vec<f64> = (0..n).map(|k| u[k] + h * l[k] + h * (b1p[k] + b2n[k])).collect();
    let mut half = vec![0.0; n];
    sys.solve_interior(0, h, &rhs, &mut half)?;

    sys.apply_interior(0, t, &half, &mut l)?;
    let rhs: Vec<f64> = (0..n).map(|k| half[k] + h * l[k] + h * (b1n[k] + b2p[k])).collect();
    let mut out = vec![0.0; n];
    sys.solve_interior(1, h, &rhs, &mut out)?;
    Ok(out)
}

/// `(I - J1 - J2) Y' = (I + J1 + J2) Y + dt/2 (b(t) + b(t+dt))`, solved as one
/// banded system over the whole grid. Dirichlet grids only.
pub fn crank_nicolson_unfactored(sys: &SemiDiscreteSystem, t: f64, dt: f64, u: &[f64]) -> Result<Vec<f64>> {
    check_linear(sys)?;
    let grid = sys.grid();
    if grid.boundary != Boundary::Dirichlet {
        return Err(Error::Unsupported("unfactored Crank-Nicolson needs a Dirichlet grid".into()));
    }
    let (nx, ny, np) = (grid.nx, grid.ny, grid.len());
    let n = sys.dim();
    if u.len() != n {
        return Err(Error::Dimension { expected: n, got: u.len() });
    }
    let h = 0.5 * dt;
    let mut lu = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    sys.apply_interior(0, t, u, &mut lu)?;
    sys.apply_interior(1, t, u, &mut tmp)?;
    let mut b = vec![0.0; n];
    for op in 0..2 {
        for s in [t, t + dt] {
            for (bk, v) in b.iter_mut().zip(sys.boundary_vector(op, s)?) {
                *bk += h * v;
            }
        }
    }
    let mut rhs: Vec<f64> = (0..n).map(|k| u[k] + h * (lu[k] + tmp[k]) + b[k]).collect();

    let (xl, xu) = (0..ny).map(|j| sys.line(Axis::X, j).bandwidths()).fold((0, 0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let (yl, yu) = (0..nx).map(|i| sys.line(Axis::Y, i).bandwidths()).fold((0, 0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let kl = xl.max(yl * nx);
    let ku = xu.max(yu * nx);
    for (c, &d) in sys.problem().diffusion.iter().enumerate() {
        let mut m = BandedMatrix::zeros(np, kl, ku);
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                m.add(k, k, 1.0);
                for &(col, w) in &sys.line(Axis::X, j).rows[i].cols {
                    m.add(k, j * nx + col, -h * d * w);
                }
                for &(col, w) in &sys.line(Axis::Y, i).rows[j].cols {
                    m.add(k, col * nx + i, -h * d * w);
                }
            }
        }
        m.factor()?.solve_in_place(&mut rhs[c * np..(c + 1) * np]);
    }
    Ok(rhs)
}

/// [`adi_pde_step`] as a [`Stepper`], bound to one system. The `rhs`
/// argument of [`Stepper::step`] must be that system.
pub struct BoundarySplitAdi<'a> {
    pub system: &'a SemiDiscreteSystem,
}

impl<'a> BoundarySplitAdi<'a> {
    pub fn new(system: &'a SemiDiscreteSystem) -> Result<Self> {
        check_linear(system)?;
        Ok(BoundarySplitAdi { system })
    }
}

impl Stepper<f64> for BoundarySplitAdi<'_> {
    fn order(&self) -> usize {
        2
    }

    fn step(&self, rhs: &dyn SplitRhs<f64>, t: f64, dt: f64, u: &[f64]) -> Result<Vec<f64>> {
        if rhs.dim() != self.system.dim() || rhs.num_operators() != 2 {
            return Err(Error::usage("boundary-split ADI called with a different system"));
        }
        adi_pde_step(self.system, t, dt, u)
    }
}
