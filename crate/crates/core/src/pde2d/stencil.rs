//! Finite-difference stencils on a single grid line.

use super::banded::{BandedLu, BandedMatrix, CyclicBanded, CyclicLu};
use super::grid::{Axis, Grid2D};
use crate::error::{Error, Result};

/// Fornberg's recursion: weights `c[k][j]` such that
/// `f^{(k)}(z) ≈ Σ_j c[k][j] f(x_j)` for `k = 0..=m`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// One row of a line operator. `cols` index unknowns on the line; the wall
/// weights multiply the known values just outside it (Dirichlet only).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StencilRow {
    pub cols: Vec<(usize, f64)>,
    pub wall_left: f64,
    pub wall_right: f64,
}

impl StencilRow {
    #[inline]
    pub fn dot(&self, u: &[f64]) -> f64 {
        self.cols.iter().map(|&(j, c)| c * u[j]).sum()
    }

    fn add_scaled(&mut self, other: &StencilRow, s: f64) {
        if s == 0.0 {
            return;
        }
        for &(j, c) in &other.cols {
            match self.cols.iter_mut().find(|e| e.0 == j) {
                Some(e) => e.1 += s * c,
                None => self.cols.push((j, s * c)),
            }
        }
        self.cols.sort_by_key(|e| e.0);
        self.wall_left += s * other.wall_left;
        self.wall_right += s * other.wall_right;
    }
}

/// Line operator: a banded (or cyclic-banded) matrix plus wall weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LineOperator {
    pub n: usize,
    pub periodic: bool,
    pub rows: Vec<StencilRow>,
}

#[derive(Debug, Clone)]
pub enum LineFactor {
    Banded(BandedLu),
    Cyclic(CyclicLu),
}

impl LineFactor {
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        match self {
            LineFactor::Banded(lu) => {
                lu.solve_in_place(b);
                Ok(())
            }
            LineFactor::Cyclic(lu) => lu.solve_in_place(b),
        }
    }
}

impl LineOperator {
    pub fn zeros(n: usize, periodic: bool) -> Self {
        LineOperator { n, periodic, rows: vec![StencilRow::default(); n] }
    }

    /// Interior part `L u`, without wall terms.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.dot(u);
        }
    }

    /// Wall contribution `wl * left + wr * right` per row.
    pub fn wall_terms(&self, left: f64, right: f64, out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.wall_left * left + row.wall_right * right;
        }
    }

    /// `Σ_k s_k * op_k`, row by row.
    pub fn combine(parts: &[(&LineOperator, &[f64])]) -> Self {
        let first = parts[0].0;
        let mut out = LineOperator::zeros(first.n, first.periodic);
        for (op, scale) in parts {
            for (i, row) in op.rows.iter().enumerate() {
                out.rows[i].add_scaled(row, scale[i]);
            }
        }
        out
    }

    /// Signed distance from the diagonal, wrapping on periodic lines.
    fn offset(&self, i: usize, j: usize) -> i64 {
        let d = j as i64 - i as i64;
        if !self.periodic {
            return d;
        }
        let n = self.n as i64;
        let d = d.rem_euclid(n);
        if d > n / 2 {
            d - n
        } else {
            d
        }
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0usize, 0usize);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, _) in &row.cols {
                let d = self.offset(i, j);
                if d < 0 {
                    kl = kl.max((-d) as usize);
                } else {
                    ku = ku.max(d as usize);
                }
            }
        }
        (kl, ku)
    }

    /// Factors `I - gamma * L`.
    pub fn factor_shifted(&self, gamma: f64) -> Result<LineFactor> {
        let (kl, ku) = self.bandwidths();
        if self.periodic {
            let mut m = CyclicBanded::new(self.n, kl, ku);
            for (i, row) in self.rows.iter().enumerate() {
                m.add(i, i, 1.0);
                for &(j, c) in &row.cols {
                    m.add(i, j, -gamma * c);
                }
            }
            Ok(LineFactor::Cyclic(m.factor()?))
        } else {
            let mut m = BandedMatrix::zeros(self.n, kl, ku);
            for (i, row) in self.rows.iter().enumerate() {
                m.add(i, i, 1.0);
                for &(j, c) in &row.cols {
                    m.add(i, j, -gamma * c);
                }
            }
            Ok(LineFactor::Banded(m.factor()?))
        }
    }
}

/// Derivative stencil of a given order on one axis of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilOperator {
    pub axis: Axis,
    pub derivative: usize,
    pub order: usize,
    pub h: f64,
    pub line: LineOperator,
}

impl StencilOperator {
    pub fn new(n: usize, h: f64, periodic: bool, derivative: usize, order: usize) -> Result<Self> {
        Self::on_axis(Axis::X, n, h, periodic, derivative, order)
    }

    fn on_axis(axis: Axis, n: usize, h: f64, periodic: bool, derivative: usize, order: usize) -> Result<Self> {
        if !matches!(order, 2 | 4 | 6) {
            return Err(Error::usage(format!("stencil order must be 2, 4 or 6, got {order}")));
        }
        if !matches!(derivative, 1 | 2) {
            return Err(Error::usage(format!("derivative must be 1 or 2, got {derivative}")));
        }
        let p = order / 2;
        let min_n = if periodic { 2 * p + 1 } else { order + 2 };
        if n < min_n {
            return Err(Error::usage(format!("{n} nodes per line, order-{order} stencils need at least {min_n}")));
        }
        let scale = h.powi(derivative as i32);
        let centered: Vec<f64> = (-(p as i64)..=p as i64).map(|o| o as f64).collect();
        let cw = fornberg_weights(0.0, &centered, derivative);
        let cw = &cw[derivative];

        let mut line = LineOperator::zeros(n, periodic);
        let ni = n as i64;
        for (i, row) in line.rows.iter_mut().enumerate() {
            let ii = i as i64;
            if periodic {
                for (k, o) in (-(p as i64)..=p as i64).enumerate() {
                    let j = (ii + o).rem_euclid(ni) as usize;
                    row.cols.push((j, cw[k] / scale));
                }
                row.cols.sort_by_key(|e| e.0);
                continue;
            }
            // positions -1 and n are the walls
            let lo = ii - p as i64;
            let hi = ii + p as i64;
            let window: Vec<i64> = if lo >= -1 && hi <= ni {
                (lo..=hi).collect()
            } else {
                let width = if derivative == 2 { order + 2 } else { order + 1 } as i64;
                if lo < -1 {
                    (-1..-1 + width).collect()
                } else {
                    (ni - width + 1..=ni).collect()
                }
            };
            let xs: Vec<f64> = window.iter().map(|&k| (k - ii) as f64).collect();
            let w = fornberg_weights(0.0, &xs, derivative);
            for (&k, &c) in window.iter().zip(&w[derivative]) {
                let c = c / scale;
                if k == -1 {
                    row.wall_left += c;
                } else if k == ni {
                    row.wall_right += c;
                } else {
                    row.cols.push((k as usize, c));
                }
            }
        }
        Ok(StencilOperator { axis, derivative, order, h, line })
    }
}

/// Stencil along `axis` of `grid`.
pub fn build_stencil(grid: &Grid2D, axis: Axis, derivative: usize, order: usize) -> Result<StencilOperator> {
    StencilOperator::on_axis(axis, grid.n(axis), grid.h(axis), grid.is_periodic(), derivative, order)
}
