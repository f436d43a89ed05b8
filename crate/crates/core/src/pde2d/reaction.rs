//! Implicit sub-steps for pointwise sources: independent small Newton solves.

use rayon::prelude::*;

use super::grid::Grid2D;
use super::problem::Reaction;
use crate::error::{Error, Result};
use crate::steppers::newton::NewtonConfig;

/// Largest local system handled at a node.
pub const MAX_LOCAL: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReactionScheme {
    BackwardEuler,
    Trapezoid,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Gaussian elimination with partial pivoting on an `n x n` row-major block.
fn dense_solve(n: usize, a: &mut [f64; MAX_LOCAL * MAX_LOCAL], b: &mut [f64; MAX_LOCAL]) -> Result<()> {
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs())).unwrap();
        if a[p * n + k] == 0.0 || !a[p * n + k].is_finite() {
            return Err(Error::Singular { column: k });
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let l = a[i * n + k] / a[k * n + k];
            for j in k..n {
                a[i * n + j] -= l * a[k * n + j];
            }
            b[i] -= l * b[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k * n + j] * b[j]).sum();
        b[k] = (b[k] - s) / a[k * n + k];
    }
    Ok(())
}

/// Solves `z - gamma * s(t, x, y, z) = rhs` at one node; `z` holds the guess.
pub fn solve_local(
    reaction: &dyn Reaction,
    t: f64,
    x: f64,
    y: f64,
    gamma: f64,
    rhs: &[f64],
    z: &mut [f64],
    cfg: &NewtonConfig,
) -> Result<usize> {
    let n = reaction.components();
    if n > MAX_LOCAL {
        return Err(Error::Unsupported(format!("{n} local components, at most {MAX_LOCAL} supported")));
    }
    let mut s = [0.0; MAX_LOCAL];
    let mut r = [0.0; MAX_LOCAL];
    let mut jac = [0.0; MAX_LOCAL * MAX_LOCAL];
    let residual = |z: &[f64], s: &mut [f64; MAX_LOCAL], r: &mut [f64; MAX_LOCAL]| {
        reaction.eval(t, x, y, z, &mut s[..n]);
        for c in 0..n {
            r[c] = z[c] - gamma * s[c] - rhs[c];
        }
        max_abs(&r[..n])
    };
    let r0 = residual(z, &mut s, &mut r);
    if !r0.is_finite() {
        return Err(Error::NewtonDivergence { iterations: 0, residual: r0, last: z.to_vec() });
    }
    if r0 <= cfg.abs_tol {
        return Ok(0);
    }
    let target = cfg.abs_tol + cfg.rel_tol * r0;
    let mut rn = r0;
    for it in 1..=cfg.max_iters {
        reaction.jacobian(t, x, y, z, &mut jac[..n * n]);
        let mut m = [0.0; MAX_LOCAL * MAX_LOCAL];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = -gamma * jac[i * n + j] + if i == j { 1.0 } else { 0.0 };
            }
        }
        let mut d = [0.0; MAX_LOCAL];
        for c in 0..n {
            d[c] = -r[c];
        }
        dense_solve(n, &mut m, &mut d)?;
        for c in 0..n {
            z[c] += d[c];
        }
        rn = residual(z, &mut s, &mut r);
        if !rn.is_finite() {
            break;
        }
        let stalled = max_abs(&d[..n]) <= 4.0 * f64::EPSILON * max_abs(z);
        if rn <= target || stalled {
            return Ok(it);
        }
    }
    Err(Error::NewtonDivergence { iterations: cfg.max_iters, residual: rn, last: z.to_vec() })
}

/// Solves `x - gamma * s(t, x) = rhs` at every node of a component-major
/// field. `x` holds the initial guess on entry.
pub fn solve_field(
    grid: &Grid2D,
    reaction: &dyn Reaction,
    t: f64,
    gamma: f64,
    rhs: &[f64],
    x: &mut [f64],
    cfg: &NewtonConfig,
) -> Result<()> {
    let nc = reaction.components();
    let np = grid.len();
    if rhs.len() != nc * np || x.len() != nc * np {
        return Err(Error::Dimension { expected: nc * np, got: rhs.len().min(x.len()) });
    }
    let xr: &[f64] = x;
    let results: Vec<Result<[f64; MAX_LOCAL]>> = (0..np)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % grid.nx, k / grid.nx);
            let mut b = [0.0; MAX_LOCAL];
            let mut z = [0.0; MAX_LOCAL];
            for c in 0..nc.min(MAX_LOCAL) {
                b[c] = rhs[c * np + k];
                z[c] = xr[c * np + k];
            }
            let (px, py) = (grid.x(i), grid.y(j));
            solve_local(reaction, t, px, py, gamma, &b[..nc.min(MAX_LOCAL)], &mut z[..nc.min(MAX_LOCAL)], cfg)
                .map(|_| z)
                .map_err(|e| Error::NodeSolve { x: px, y: py, source: Box::new(e) })
        })
        .collect();
    for (k, r) in results.into_iter().enumerate() {
        let z = r?;
        for c in 0..nc {
            x[c * np + k] = z[c];
        }
    }
    Ok(())
}

/// Evaluates the source at every node of a component-major field.
pub fn eval_field(grid: &Grid2D, reaction: &dyn Reaction, t: f64, u: &[f64], out: &mut [f64]) {
    let nc = reaction.components().min(MAX_LOCAL);
    let np = grid.len();
    let vals: Vec<[f64; MAX_LOCAL]> = (0..np)
        .into_par_iter()
        .map(|k| {
            let mut z = [0.0; MAX_LOCAL];
            let mut s = [0.0; MAX_LOCAL];
            for c in 0..nc {
                z[c] = u[c * np + k];
            }
            reaction.eval(t, grid.x(k % grid.nx), grid.y(k / grid.nx), &z[..nc], &mut s[..nc]);
            s
        })
        .collect();
    for (k, s) in vals.iter().enumerate() {
        for c in 0..nc {
            out[c * np + k] = s[c];
        }
    }
}

/// One implicit step of `u' = s(t, u)` from `t` to `t + dt`, node by node.
pub fn pointwise_reaction_solve(
    grid: &Grid2D,
    reaction: &dyn Reaction,
    t: f64,
    dt: f64,
    u: &[f64],
    scheme: ReactionScheme,
    cfg: &NewtonConfig,
) -> Result<Vec<f64>> {
    let mut x = u.to_vec();
    match scheme {
        ReactionScheme::BackwardEuler => solve_field(grid, reaction, t + dt, dt, u, &mut x, cfg)?,
        ReactionScheme::Trapezoid => {
            let mut s = vec![0.0; u.len()];
            eval_field(grid, reaction, t, u, &mut s);
            let b: Vec<f64> = u.iter().zip(&s).map(|(a, f)| a + 0.5 * dt * f).collect();
            solve_field(grid, reaction, t + dt, 0.5 * dt, &b, &mut x, cfg)?;
        }
    }
    Ok(x)
}
