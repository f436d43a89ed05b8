use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Wall values are known and supplied by the problem.
    Dirichlet,
    Periodic,
}

/// Tensor grid of unknowns. Dirichlet grids exclude the walls; periodic
/// grids include the low end of each axis and exclude the high end.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub boundary: Boundary,
}

impl Grid2D {
    pub fn new(x: [f64; 2], y: [f64; 2], nx: usize, ny: usize, boundary: Boundary) -> Result<Self> {
        if !(x[1] > x[0]) || !(y[1] > y[0]) {
            return Err(Error::usage(format!("empty domain {x:?} x {y:?}")));
        }
        if nx < 3 || ny < 3 {
            return Err(Error::usage(format!("grid {nx} x {ny} is too small")));
        }
        let div = |n: usize| match boundary {
            Boundary::Dirichlet => (n + 1) as f64,
            Boundary::Periodic => n as f64,
        };
        Ok(Grid2D {
            x_lo: x[0],
            x_hi: x[1],
            y_lo: y[0],
            y_hi: y[1],
            nx,
            ny,
            dx: (x[1] - x[0]) / div(nx),
            dy: (y[1] - y[0]) / div(ny),
            boundary,
        })
    }

    pub fn square(lo: f64, hi: f64, n: usize, boundary: Boundary) -> Result<Self> {
        Self::new([lo, hi], [lo, hi], n, n, boundary)
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn offset(&self) -> f64 {
        match self.boundary {
            Boundary::Dirichlet => 1.0,
            Boundary::Periodic => 0.0,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + (i as f64 + self.offset()) * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_lo + (j as f64 + self.offset()) * self.dy
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn n(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
        }
    }

    pub fn h(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.dx,
            Axis::Y => self.dy,
        }
    }

    /// Coordinates along `axis` of the nodes of that axis.
    pub fn coords(&self, axis: Axis) -> Vec<f64> {
        match axis {
            Axis::X => (0..self.nx).map(|i| self.x(i)).collect(),
            Axis::Y => (0..self.ny).map(|j| self.y(j)).collect(),
        }
    }

    /// Samples `f(x, y)` in storage order.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            let y = self.y(j);
            for i in 0..self.nx {
                out.push(f(self.x(i), y));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_spacing_excludes_walls() {
        let g = Grid2D::square(-1.0, 1.0, 45, Boundary::Dirichlet).unwrap();
        assert!((g.dx - 2.0 / 46.0).abs() < 1e-15);
        assert!((g.x(0) - (-1.0 + g.dx)).abs() < 1e-15);
        assert!((g.x(44) - (1.0 - g.dx)).abs() < 1e-14);
    }

    #[test]
    fn periodic_spacing_includes_low_end() {
        let g = Grid2D::new([0.0, 1.0], [-20.0, 20.0], 10, 200, Boundary::Periodic).unwrap();
        assert_eq!(g.dx, 0.1);
        assert_eq!(g.dy, 0.2);
        assert_eq!(g.x(0), 0.0);
        assert_eq!(g.y(0), -20.0);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Grid2D::square(1.0, 1.0, 10, Boundary::Periodic).is_err());
        assert!(Grid2D::square(0.0, 1.0, 2, Boundary::Periodic).is_err());
    }

    #[test]
    fn sample_is_y_outer() {
        let g = Grid2D::new([0.0, 3.0], [0.0, 4.0], 3, 4, Boundary::Periodic).unwrap();
        let v = g.sample(|x, y| 10.0 * y + x);
        assert_eq!(v[g.index(2, 1)], 12.0);
    }
}
