//! Banded LU with partial pivoting, plus a cyclic variant for periodic lines.

use crate::error::{Error, Result};
use crate::ode::DenseMatrix;

/// Square banded matrix. Row `i` keeps columns `i - kl ..= i + ku + kl`; the
/// extra `kl` columns hold fill-in from row interchanges.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl, "({i}, {j}) outside storage");
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Panics outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band kl={} ku={}", self.kl, self.ku);
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band kl={} ku={}", self.kl, self.ku);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            y[i] = (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum();
        }
    }

    /// LU factorization with partial pivoting, in the style of LAPACK `gbtrf`.
    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular { column: k });
            }
            piv[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(BandedLu { lu: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandedMatrix,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn n(&self) -> usize {
        self.lu.n
    }

    /// Overwrites `b` with the solution.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.lu;
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= a.data[a.idx(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                s -= a.data[a.idx(k, j)] * b[j];
            }
            b[k] = s / a.data[a.idx(k, k)];
        }
    }
}

/// Banded matrix with extra entries in the corners, as produced by periodic
/// stencils. Solved by the Sherman-Morrison-Woodbury formula on top of the
/// banded factorization.
#[derive(Debug, Clone)]
pub struct CyclicBanded {
    pub band: BandedMatrix,
    /// Entries outside the band: `(row, col, value)`.
    pub corners: Vec<(usize, usize, f64)>,
}

impl CyclicBanded {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        CyclicBanded { band: BandedMatrix::zeros(n, kl, ku), corners: Vec::new() }
    }

    /// Adds `v` at `(i, j)`, routing it to the band or the corner list.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if self.band.in_band(i, j) {
            self.band.add(i, j, v);
        } else if let Some(e) = self.corners.iter_mut().find(|e| e.0 == i && e.1 == j) {
            e.2 += v;
        } else {
            self.corners.push((i, j, v));
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        self.band.matvec(x, y);
        for &(i, j, v) in &self.corners {
            y[i] += v * x[j];
        }
    }

    pub fn factor(self) -> Result<CyclicLu> {
        let n = self.band.n;
        let lu = self.band.factor()?;
        let mut rows: Vec<usize> = self.corners.iter().map(|e| e.0).collect();
        rows.sort_unstable();
        rows.dedup();
        let r = rows.len();
        // Z = B^{-1} U, with U the unit columns of the corner rows
        let z: Vec<Vec<f64>> = rows
            .iter()
            .map(|&row| {
                let mut col = vec![0.0; n];
                col[row] = 1.0;
                lu.solve_in_place(&mut col);
                col
            })
            .collect();
        // V^T row k holds the corner entries of row `rows[k]`
        let vt: Vec<Vec<(usize, f64)>> =
            rows.iter().map(|&row| self.corners.iter().filter(|e| e.0 == row).map(|e| (e.1, e.2)).collect()).collect();
        let mut cap = DenseMatrix::<f64>::identity(r);
        for k in 0..r {
            for l in 0..r {
                let s: f64 = vt[k].iter().map(|&(j, v)| v * z[l][j]).sum();
                cap.data[k * r + l] += s;
            }
        }
        Ok(CyclicLu { lu, z, vt, cap })
    }
}

#[derive(Debug, Clone)]
pub struct CyclicLu {
    lu: BandedLu,
    z: Vec<Vec<f64>>,
    vt: Vec<Vec<(usize, f64)>>,
    cap: DenseMatrix<f64>,
}

impl CyclicLu {
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        self.lu.solve_in_place(b);
        if self.z.is_empty() {
            return Ok(());
        }
        let vy: Vec<f64> = self.vt.iter().map(|row| row.iter().map(|&(j, v)| v * b[j]).sum()).collect();
        let w = self.cap.solve(&vy)?;
        for (zk, wk) in self.z.iter().zip(&w) {
            for (bi, zi) in b.iter_mut().zip(zk) {
                *bi -= wk * zi;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residual(a: &dyn Fn(&[f64], &mut [f64]), x: &[f64], b: &[f64]) -> f64 {
        let mut y = vec![0.0; b.len()];
        a(x, &mut y);
        y.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn tridiagonal_known_solution() {
        let n = 5;
        let mut m = BandedMatrix::zeros(n, 1, 1);
        for i in 0..n {
            m.set(i, i, 2.0);
            if i > 0 {
                m.set(i, i - 1, -1.0);
            }
            if i + 1 < n {
                m.set(i, i + 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let mut b = vec![0.0; n];
        m.matvec(&x, &mut b);
        let lu = m.factor().unwrap();
        lu.solve_in_place(&mut b);
        for (p, q) in b.iter().zip(&x) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn pivoting_needed() {
        // zero on the diagonal forces a row interchange
        let mut m = BandedMatrix::zeros(3, 1, 1);
        m.set(0, 0, 0.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 0.0);
        m.set(1, 2, 1.0);
        m.set(2, 1, 1.0);
        m.set(2, 2, 1.0);
        let mut b = vec![2.0, 4.0, 5.0];
        let orig = m.clone();
        m.factor().unwrap().solve_in_place(&mut b);
        assert!(residual(&|x, y| orig.matvec(x, y), &b, &[2.0, 4.0, 5.0]) < 1e-14);
    }

    #[test]
    fn singular_detected() {
        let m = BandedMatrix::zeros(3, 1, 1);
        assert!(matches!(m.factor(), Err(Error::Singular { column: 0 })));
    }

    #[test]
    fn cyclic_matches_dense() {
        let n = 9;
        let mut c = CyclicBanded::new(n, 2, 2);
        let mut dense = DenseMatrix::<f64>::zeros(n);
        for i in 0..n {
            for (o, v) in [(-2i64, -0.1), (-1, -1.0), (0, 4.5), (1, -1.2), (2, 0.2)] {
                let j = (i as i64 + o).rem_euclid(n as i64) as usize;
                c.add(i, j, v);
                dense.data[i * n + j] += v;
            }
        }
        assert_eq!(c.corners.len(), 6);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let expect = dense.solve(&b).unwrap();
        let mut x = b.clone();
        c.factor().unwrap().solve_in_place(&mut x).unwrap();
        for (p, q) in x.iter().zip(&expect) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn banded_residual_small(
            n in 8usize..40,
            kl in 0usize..=6,
            ku in 0usize..=6,
            seed in proptest::collection::vec(-1.0f64..1.0, 600),
        ) {
            let mut m = BandedMatrix::zeros(n, kl, ku);
            let mut k = 0;
            for i in 0..n {
                let lo = i.saturating_sub(kl);
                let hi = (i + ku).min(n - 1);
                for j in lo..=hi {
                    let v = seed[k % seed.len()] + if i == j { (kl + ku + 2) as f64 } else { 0.0 };
                    m.set(i, j, v);
                    k += 1;
                }
            }
            let b: Vec<f64> = (0..n).map(|i| seed[(7 * i + 3) % seed.len()]).collect();
            let bnorm = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let orig = m.clone();
            let mut x = b.clone();
            m.factor().unwrap().solve_in_place(&mut x);
            prop_assert!(residual(&|x, y| orig.matvec(x, y), &x, &b) <= 1e-11 * bnorm.max(1e-300));
        }

        #[test]
        fn cyclic_residual_small(n in 13usize..50, p in 1usize..=3, shift in 0.5f64..3.0) {
            let mut c = CyclicBanded::new(n, p, p);
            for i in 0..n {
                for o in -(p as i64)..=(p as i64) {
                    let j = (i as i64 + o).rem_euclid(n as i64) as usize;
                    let v = if o == 0 { 2.0 * p as f64 + shift } else { -1.0 + 0.1 * o as f64 + 0.01 * i as f64 };
                    c.add(i, j, v);
                }
            }
            let b: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
            let orig = c.clone();
            let mut x = b.clone();
            c.factor().unwrap().solve_in_place(&mut x).unwrap();
            prop_assert!(residual(&|x, y| orig.matvec(x, y), &x, &b) <= 1e-11);
        }
    }
}
