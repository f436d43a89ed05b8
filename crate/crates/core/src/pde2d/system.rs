//! Method-of-lines reduction to a split ODE system.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::grid::{Axis, Boundary, Grid2D};
use super::problem::{CoefficientField, Problem};
use super::reaction;
use super::stencil::{build_stencil, LineFactor, LineOperator};
use crate::error::{Error, Result};
use crate::ode::SplitRhs;
use crate::steppers::newton::NewtonConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    Prediction,
    /// Corrections solve for an error with homogeneous wall data.
    Correction,
}

const CACHE_LIMIT: usize = 32;

/// Operators: `0` = x-terms, `1` = y-terms, `2` = source (when present).
pub struct SemiDiscreteSystem {
    problem: Problem,
    order: usize,
    coefficients: CoefficientField,
    /// One entry per line, or a single shared entry for constant `a`.
    x_lines: Vec<LineOperator>,
    y_lines: Vec<LineOperator>,
    cache: Mutex<HashMap<(Axis, u64), Arc<Vec<LineFactor>>>>,
}

impl std::fmt::Debug for SemiDiscreteSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SemiDiscreteSystem").field("problem", &self.problem).field("order", &self.order).finish()
    }
}

fn axis_of(op: usize) -> Option<Axis> {
    match op {
        0 => Some(Axis::X),
        1 => Some(Axis::Y),
        _ => None,
    }
}

impl SemiDiscreteSystem {
    pub fn new(problem: Problem, order: usize) -> Result<Self> {
        problem.validate()?;
        let grid = &problem.grid;
        let coefficients = CoefficientField::new(grid, problem.coefficient.as_ref())?;
        let ax = build_stencil(grid, Axis::X, 2, order)?;
        let bx = build_stencil(grid, Axis::X, 1, order)?;
        let ay = build_stencil(grid, Axis::Y, 2, order)?;
        let by = build_stencil(grid, Axis::Y, 1, order)?;
        let (nx, ny) = (grid.nx, grid.ny);
        let (x_lines, y_lines) = if coefficients.uniform {
            (vec![ax.line], vec![ay.line])
        } else {
            let c = &coefficients;
            let xl = (0..ny)
                .map(|j| {
                    let r = j * nx..(j + 1) * nx;
                    LineOperator::combine(&[(&ax.line, &c.a[r.clone()]), (&bx.line, &c.a_x[r])])
                })
                .collect();
            let yl = (0..nx)
                .map(|i| {
                    let a: Vec<f64> = (0..ny).map(|j| c.a[j * nx + i]).collect();
                    let ay_: Vec<f64> = (0..ny).map(|j| c.a_y[j * nx + i]).collect();
                    LineOperator::combine(&[(&ay.line, &a), (&by.line, &ay_)])
                })
                .collect();
            (xl, yl)
        };
        Ok(SemiDiscreteSystem { problem, order, coefficients, x_lines, y_lines, cache: Mutex::new(HashMap::new()) })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn grid(&self) -> &Grid2D {
        &self.problem.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &CoefficientField {
        &self.coefficients
    }

    pub fn components(&self) -> usize {
        self.problem.components()
    }

    fn lines(&self, axis: Axis) -> &[LineOperator] {
        match axis {
            Axis::X => &self.x_lines,
            Axis::Y => &self.y_lines,
        }
    }

    /// Operator of line `k` along `axis`, without the diffusion constant.
    pub fn line(&self, axis: Axis, k: usize) -> &LineOperator {
        let l = self.lines(axis);
        if l.len() == 1 {
            &l[0]
        } else {
            &l[k]
        }
    }

    fn check_op(&self, op: usize) -> Result<()> {
        let n = self.num_operators();
        if op >= n {
            return Err(Error::OperatorIndex { index: op, count: n });
        }
        Ok(())
    }

    /// Interior part of `f_op`: stencils without wall data, or the source.
    pub fn apply_interior(&self, op: usize, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_op(op)?;
        let grid = self.grid();
        let (nx, np) = (grid.nx, grid.len());
        let Some(axis) = axis_of(op) else {
            let r = self.problem.reaction.as_ref().expect("checked operator index");
            reaction::eval_field(grid, r.as_ref(), t, u, out);
            return Ok(());
        };
        for (c, &d) in self.problem.diffusion.iter().enumerate() {
            let src = &u[c * np..(c + 1) * np];
            let dst = &mut out[c * np..(c + 1) * np];
            if d == 0.0 {
                dst.fill(0.0);
                continue;
            }
            match axis {
                Axis::X => dst.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
                    self.line(Axis::X, j).apply(&src[j * nx..(j + 1) * nx], row);
                    row.iter_mut().for_each(|v| *v *= d);
                }),
                Axis::Y => dst.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
                    for (i, o) in row.iter_mut().enumerate() {
                        let r = &self.line(Axis::Y, i).rows[j];
                        let s: f64 = r.cols.iter().map(|&(k, w)| w * src[k * nx + i]).sum();
                        *o = d * s;
                    }
                }),
            }
        }
        Ok(())
    }

    /// Known wall terms of `f_op` at time `t`, scaled by the diffusion
    /// constants. Zero for periodic grids and for the source.
    pub fn boundary_vector(&self, op: usize, t: f64) -> Result<Vec<f64>> {
        self.check_op(op)?;
        let grid = self.grid();
        let (nx, ny, np) = (grid.nx, grid.ny, grid.len());
        let mut out = vec![0.0; np * self.components()];
        let (Some(axis), Boundary::Dirichlet) = (axis_of(op), grid.boundary) else {
            return Ok(out);
        };
        let g = self.problem.boundary_data.as_ref().expect("validated");
        for (c, &d) in self.problem.diffusion.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let dst = &mut out[c * np..(c + 1) * np];
            match axis {
                Axis::X => {
                    let mut tmp = vec![0.0; nx];
                    for j in 0..ny {
                        let y = grid.y(j);
                        self.line(Axis::X, j).wall_terms(g(c, grid.x_lo, y, t), g(c, grid.x_hi, y, t), &mut tmp);
                        for (o, v) in dst[j * nx..(j + 1) * nx].iter_mut().zip(&tmp) {
                            *o = d * v;
                        }
                    }
                }
                Axis::Y => {
                    let mut tmp = vec![0.0; ny];
                    for i in 0..nx {
                        let x = grid.x(i);
                        self.line(Axis::Y, i).wall_terms(g(c, x, grid.y_lo, t), g(c, x, grid.y_hi, t), &mut tmp);
                        for (j, v) in tmp.iter().enumerate() {
                            dst[j * nx + i] = d * v;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Wall terms as seen by a prediction or a correction sweep.
    pub fn boundary_contribution(&self, op: usize, t: f64, mode: BoundaryMode) -> Result<Vec<f64>> {
        match mode {
            BoundaryMode::Prediction => self.boundary_vector(op, t),
            BoundaryMode::Correction => {
                self.check_op(op)?;
                Ok(vec![0.0; self.dim()])
            }
        }
    }

    /// `J_op = dt/2 * L_op` per line, with the diffusion constant of
    /// `component` folded in.
    pub fn assemble_j(&self, op: usize, component: usize, dt: f64) -> Result<Vec<LineOperator>> {
        self.check_op(op)?;
        let axis = axis_of(op).ok_or_else(|| Error::usage("the source operator has no line form"))?;
        let d = *self.problem.diffusion.get(component).ok_or(Error::Dimension { expected: self.components(), got: component })?;
        let s = 0.5 * dt * d;
        let n = self.grid().n(axis);
        Ok(self.lines(axis).iter().map(|l| LineOperator::combine(&[(l, &vec![s; n])])).collect())
    }

    fn factors(&self, axis: Axis, gamma: f64) -> Result<Arc<Vec<LineFactor>>> {
        let key = (axis, gamma.to_bits());
        if let Some(f) = self.cache.lock().unwrap().get(&key) {
            return Ok(f.clone());
        }
        let results: Vec<Result<LineFactor>> = self.lines(axis).par_iter().map(|l| l.factor_shifted(gamma)).collect();
        let mut fs = Vec::with_capacity(results.len());
        for (k, r) in results.into_iter().enumerate() {
            fs.push(r.map_err(|e| Error::LineSolve { line: k, source: Box::new(e) })?);
        }
        let fs = Arc::new(fs);
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, fs.clone());
        Ok(fs)
    }

    /// Solves `(I - gamma * D_c L_op) x = rhs` line by line, interior only.
    pub fn solve_interior(&self, op: usize, gamma: f64, rhs: &[f64], x: &mut [f64]) -> Result<()> {
        self.check_op(op)?;
        let axis = axis_of(op).ok_or_else(|| Error::usage("the source operator has no line form"))?;
        let grid = self.grid();
        let (nx, ny, np) = (grid.nx, grid.ny, grid.len());
        x.copy_from_slice(rhs);
        for (c, &d) in self.problem.diffusion.iter().enumerate() {
            if d == 0.0 || gamma == 0.0 {
                continue;
            }
            let factors = self.factors(axis, gamma * d)?;
            let pick = |k: usize| if factors.len() == 1 { &factors[0] } else { &factors[k] };
            let slab = &mut x[c * np..(c + 1) * np];
            let solved: Vec<Result<()>> = match axis {
                Axis::X => slab.par_chunks_mut(nx).enumerate().map(|(j, line)| pick(j).solve_in_place(line)).collect(),
                Axis::Y => {
                    let mut buf = vec![0.0; np];
                    for j in 0..ny {
                        for i in 0..nx {
                            buf[i * ny + j] = slab[j * nx + i];
                        }
                    }
                    let r = buf.par_chunks_mut(ny).enumerate().map(|(i, line)| pick(i).solve_in_place(line)).collect();
                    for j in 0..ny {
                        for i in 0..nx {
                            slab[j * nx + i] = buf[i * ny + j];
                        }
                    }
                    r
                }
            };
            for (k, r) in solved.into_iter().enumerate() {
                r.map_err(|e| Error::LineSolve { line: k, source: Box::new(e) })?;
            }
        }
        Ok(())
    }
}

impl SplitRhs<f64> for SemiDiscreteSystem {
    fn dim(&self) -> usize {
        self.grid().len() * self.components()
    }

    fn num_operators(&self) -> usize {
        if self.problem.reaction.is_some() {
            3
        } else {
            2
        }
    }

    fn eval(&self, op: usize, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.apply_interior(op, t, u, out)?;
        if op < 2 && self.grid().boundary == Boundary::Dirichlet {
            let b = self.boundary_vector(op, t)?;
            for (o, v) in out.iter_mut().zip(&b) {
                *o += v;
            }
        }
        Ok(())
    }

    fn solve_implicit(&self, op: usize, t: f64, gamma: f64, rhs: &[f64], x: &mut [f64], cfg: &NewtonConfig) -> Result<()> {
        self.check_op(op)?;
        if op == 2 {
            let r = self.problem.reaction.as_ref().expect("checked operator index");
            return reaction::solve_field(self.grid(), r.as_ref(), t, gamma, rhs, x, cfg);
        }
        if self.grid().boundary == Boundary::Dirichlet {
            let b = self.boundary_vector(op, t)?;
            let shifted: Vec<f64> = rhs.iter().zip(&b).map(|(r, v)| r + gamma * v).collect();
            self.solve_interior(op, gamma, &shifted, x)
        } else {
            self.solve_interior(op, gamma, rhs, x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde2d::examples;
    use crate::pde2d::problem::Problem;
    use std::sync::Arc;

    fn manufactured(n: usize, order: usize) -> SemiDiscreteSystem {
        let grid = Grid2D::square(-1.0, 1.0, n, Boundary::Dirichlet).unwrap();
        let exact = |x: f64, y: f64, t: f64| (1.0 - y) * (t + x).exp();
        let problem = Problem {
            name: "manufactured".into(),
            grid,
            diffusion: vec![1.0],
            coefficient: None,
            boundary_data: Some(Arc::new(move |_, x, y, t| exact(x, y, t))),
            reaction: None,
            initial: Arc::new(move |_, x, y| exact(x, y, 0.0)),
            exact: Some(Arc::new(move |_, x, y, t| exact(x, y, t))),
            t0: 0.0,
        };
        SemiDiscreteSystem::new(problem, order).unwrap()
    }

    fn residual(sys: &SemiDiscreteSystem, t: f64) -> f64 {
        let u = sys.problem().exact_state(t).unwrap();
        let mut f = vec![0.0; u.len()];
        sys.eval_total(t, &u, &mut f).unwrap();
        // u_t = u for this solution
        f.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn semi_discrete_residual_order_six() {
        let ns = [15usize, 31, 63];
        let e: Vec<f64> = ns.iter().map(|&n| residual(&manufactured(n, 6), 0.3)).collect();
        for k in 1..e.len() {
            let s = (e[k - 1] / e[k]).ln() / (((ns[k] + 1) as f64) / ((ns[k - 1] + 1) as f64)).ln();
            assert!((s - 6.0).abs() < 0.4, "slope {s}, errors {e:?}");
        }
    }

    #[test]
    fn correction_mode_is_homogeneous() {
        let sys = manufactured(10, 4);
        let b = sys.boundary_contribution(0, 0.7, BoundaryMode::Correction).unwrap();
        assert!(b.iter().all(|&v| v == 0.0));
        let p = sys.boundary_contribution(1, 0.7, BoundaryMode::Prediction).unwrap();
        assert!(p.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn prediction_wall_value_on_top_edge_is_zero() {
        let p = examples::example1(12).unwrap();
        let g = p.boundary_data.as_ref().unwrap();
        assert_eq!(g(0, 0.3, 1.0, 0.0), 0.0);
    }

    #[test]
    fn periodic_modes_agree() {
        let sys = SemiDiscreteSystem::new(examples::example2(16).unwrap(), 6).unwrap();
        for op in 0..2 {
            let p = sys.boundary_contribution(op, 0.1, BoundaryMode::Prediction).unwrap();
            let c = sys.boundary_contribution(op, 0.1, BoundaryMode::Correction).unwrap();
            assert_eq!(p, c);
        }
    }

    #[test]
    fn assemble_j_scales_rows() {
        let sys = manufactured(12, 2);
        let j = sys.assemble_j(0, 0, 0.1).unwrap();
        let a = sys.line(Axis::X, 0);
        for (r, s) in j[0].rows.iter().zip(&a.rows) {
            for (p, q) in r.cols.iter().zip(&s.cols) {
                assert!((p.1 - 0.05 * q.1).abs() < 1e-12);
            }
        }
        let z = sys.assemble_j(1, 0, 0.0).unwrap();
        assert!(z[0].rows.iter().all(|r| r.cols.iter().all(|c| c.1 == 0.0)));
    }

    #[test]
    fn manufactured_laplacian_from_j() {
        let sys = manufactured(31, 6);
        let dt = 0.01;
        let u = sys.problem().exact_state(0.0).unwrap();
        let mut f0 = vec![0.0; u.len()];
        let mut f1 = vec![0.0; u.len()];
        sys.eval(0, 0.0, &u, &mut f0).unwrap();
        sys.eval(1, 0.0, &u, &mut f1).unwrap();
        let jx = sys.assemble_j(0, 0, dt).unwrap();
        let nx = sys.grid().nx;
        let mut row = vec![0.0; nx];
        jx[0].apply(&u[5 * nx..6 * nx], &mut row);
        let b = sys.boundary_vector(0, 0.0).unwrap();
        for i in 0..nx {
            let v = 2.0 / dt * row[i] + b[5 * nx + i];
            assert!((v - f0[5 * nx + i]).abs() < 1e-9);
        }
        let err = f0.iter().zip(&f1).zip(&u).map(|((a, b), c)| (a + b - c).abs()).fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn implicit_solve_inverts_operator() {
        for sys in [manufactured(14, 6), SemiDiscreteSystem::new(examples::example2(14).unwrap(), 6).unwrap()] {
            let n = sys.dim();
            let x: Vec<f64> = (0..n).map(|k| (0.37 * k as f64).sin()).collect();
            for op in 0..2 {
                let mut f = vec![0.0; n];
                sys.eval(op, 0.2, &x, &mut f).unwrap();
                let gamma = 0.004;
                let rhs: Vec<f64> = x.iter().zip(&f).map(|(a, b)| a - gamma * b).collect();
                let mut y = vec![0.0; n];
                sys.solve_implicit(op, 0.2, gamma, &rhs, &mut y, &NewtonConfig::default()).unwrap();
                let err = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-11, "op {op}: {err}");
            }
        }
    }

    #[test]
    fn line_order_does_not_matter() {
        let sys = SemiDiscreteSystem::new(examples::example2(20).unwrap(), 6).unwrap();
        let n = sys.dim();
        let rhs: Vec<f64> = (0..n).map(|k| (0.11 * k as f64).cos()).collect();
        let mut a = vec![0.0; n];
        sys.solve_interior(1, 0.01, &rhs, &mut a).unwrap();
        // solve each y-line separately, in reverse order
        let g = sys.grid();
        let fs = sys.factors(Axis::Y, 0.01).unwrap();
        let mut b = rhs.clone();
        for i in (0..g.nx).rev() {
            let mut line: Vec<f64> = (0..g.ny).map(|j| b[j * g.nx + i]).collect();
            fs[i].solve_in_place(&mut line).unwrap();
            for j in 0..g.ny {
                b[j * g.nx + i] = line[j];
            }
        }
        assert_eq!(a, b);
    }
}
