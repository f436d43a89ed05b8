//! Linear stability of IDC splitting schemes on `u' = λu` split as
//! `λ/2 + λ/2`, one macro step of length 1 from `u(0) = 1`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::fmt_float;
use crate::idc::{default_m, idc_macro_step, IdcConfig, ResidualMode};
use crate::ode::LinearSplit;
use crate::steppers::{Scheme, SchemeStepper, Stepper};

/// Amplification factor `υ(1)` of one IDC macro step.
pub fn amplification(lambda: Complex64, scheme: Scheme, corrections: usize, m: usize, mode: ResidualMode) -> Result<Complex64> {
    let half = lambda * 0.5;
    let problem = LinearSplit::scalar(&[half, half]);
    let cfg = IdcConfig::new(scheme, corrections).with_m(m).with_residual_mode(mode);
    cfg.validate()?;
    let stepper = SchemeStepper { scheme, newton: cfg.newton };
    let correctors: [&dyn Stepper<Complex64>; 1] = [&stepper];
    let level = idc_macro_step(&problem, 0.0, 1.0, &[Complex64::new(1.0, 0.0)], &cfg, &stepper, &correctors)?;
    let v = level.last()[0];
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Pole { op: 0 });
    }
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct StabilityScan {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub n_re: usize,
    pub n_im: usize,
    pub scheme: Scheme,
    pub corrections: usize,
    pub m: usize,
    pub residual_mode: ResidualMode,
    /// `|amp|` at `(re_i, im_j)`, stored at `j * n_re + i`; poles are `inf`.
    pub amp: Vec<f64>,
}

impl StabilityScan {
    pub fn new(scheme: Scheme, corrections: usize) -> Self {
        StabilityScan {
            re_range: (-20.0, 4.0),
            im_range: (-12.0, 12.0),
            n_re: 601,
            n_im: 601,
            scheme,
            corrections,
            m: default_m(scheme, corrections),
            residual_mode: ResidualMode::Oversampled(13),
            amp: Vec::new(),
        }
    }

    pub fn re(&self, i: usize) -> f64 {
        lerp(self.re_range, i, self.n_re)
    }

    pub fn im(&self, j: usize) -> f64 {
        lerp(self.im_range, j, self.n_im)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.amp[j * self.n_re + i]
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_re < 2 || self.n_im < 2 {
            return Err(Error::usage("scan resolution must be at least 2 in each direction"));
        }
        if !(self.re_range.1 > self.re_range.0 && self.im_range.1 > self.im_range.0) {
            return Err(Error::usage("scan ranges must be non-empty"));
        }
        Ok(())
    }
}

fn lerp(range: (f64, f64), i: usize, n: usize) -> f64 {
    range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
}

/// Fills `amp` over the grid. Pole cells get `inf`.
pub fn scan_region(mut scan: StabilityScan) -> Result<StabilityScan> {
    scan.validate()?;
    let s = &scan;
    let amp: Result<Vec<f64>> = (0..s.n_re * s.n_im)
        .into_par_iter()
        .map(|k| {
            let lambda = Complex64::new(s.re(k % s.n_re), s.im(k / s.n_re));
            match amplification(lambda, s.scheme, s.corrections, s.m, s.residual_mode) {
                Ok(v) => Ok(v.norm()),
                Err(e) if matches!(e.root(), Error::Pole { .. } | Error::Singular { .. }) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        })
        .collect();
    scan.amp = amp?;
    Ok(scan)
}

/// One straight piece of the `|amp| = 1` level set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

/// Marching squares on `|amp| - 1`, interpolating linearly along cell edges.
/// Cells touching a NaN are skipped; `inf` counts as unstable.
pub fn unit_contour(scan: &StabilityScan) -> Vec<Segment> {
    let level = |i: usize, j: usize| {
        let v = scan.at(i, j);
        if v.is_infinite() {
            1e300
        } else {
            v - 1.0
        }
    };
    let mut segs = Vec::new();
    for j in 0..scan.n_im - 1 {
        for i in 0..scan.n_re - 1 {
            // corners counter-clockwise from bottom-left
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v: Vec<f64> = c.iter().map(|&(a, b)| level(a, b)).collect();
            if v.iter().any(|x| x.is_nan()) {
                continue;
            }
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (p, q) = (e, (e + 1) % 4);
                if (v[p] < 0.0) != (v[q] < 0.0) {
                    let r = v[p] / (v[p] - v[q]);
                    let r = if r.is_finite() { r.clamp(0.0, 1.0) } else { 0.5 };
                    let (x0, y0) = (scan.re(c[p].0), scan.im(c[p].1));
                    let (x1, y1) = (scan.re(c[q].0), scan.im(c[q].1));
                    pts.push((x0 + r * (x1 - x0), y0 + r * (y1 - y0)));
                }
            }
            match pts.len() {
                2 => segs.push(Segment { a: pts[0], b: pts[1] }),
                4 => {
                    // saddle: pair by the sign of the cell centre
                    let centre = v.iter().sum::<f64>() / 4.0;
                    if (centre < 0.0) == (v[0] < 0.0) {
                        segs.push(Segment { a: pts[0], b: pts[3] });
                        segs.push(Segment { a: pts[1], b: pts[2] });
                    } else {
                        segs.push(Segment { a: pts[0], b: pts[1] });
                        segs.push(Segment { a: pts[2], b: pts[3] });
                    }
                }
                _ => {}
            }
        }
    }
    segs
}

/// Largest `λ* < 0` with `|amp(λ*)| > 1`, searching `[-1e6, -1e-2]`
/// logarithmically from the origin outwards, then bisecting to `rel_tol`.
/// `None` if the whole negative real axis sampled is stable.
pub fn real_axis_boundary(scheme: Scheme, corrections: usize, m: usize, mode: ResidualMode, rel_tol: f64) -> Result<Option<f64>> {
    let unstable = |x: f64| -> Result<bool> { Ok(amplification(Complex64::new(x, 0.0), scheme, corrections, m, mode)?.norm() > 1.0) };
    let samples = 800;
    let (lo_exp, hi_exp) = (-2.0f64, 6.0f64);
    let mut prev = -(10f64.powf(lo_exp));
    if unstable(prev)? {
        return Ok(Some(prev));
    }
    for k in 1..=samples {
        let x = -(10f64.powf(lo_exp + (hi_exp - lo_exp) * k as f64 / samples as f64));
        if unstable(x)? {
            let (mut stable, mut bad) = (prev, x);
            while (bad - stable).abs() > rel_tol * stable.abs() {
                let mid = 0.5 * (stable + bad);
                if unstable(mid)? {
                    bad = mid;
                } else {
                    stable = mid;
                }
            }
            return Ok(Some(bad));
        }
        prev = x;
    }
    Ok(None)
}

/// `re,im,abs_amp`, im outer, re inner.
pub fn write_field_csv<W: Write>(scan: &StabilityScan, mut w: W) -> std::io::Result<()> {
    writeln!(w, "re,im,abs_amp")?;
    for j in 0..scan.n_im {
        for i in 0..scan.n_re {
            writeln!(w, "{},{},{}", fmt_float(scan.re(i)), fmt_float(scan.im(j)), fmt_float(scan.at(i, j)))?;
        }
    }
    Ok(())
}

/// `re,im,segment_id`, two rows per segment.
pub fn write_contour_csv<W: Write>(segments: &[Segment], mut w: W) -> std::io::Result<()> {
    writeln!(w, "re,im,segment_id")?;
    for (k, s) in segments.iter().enumerate() {
        writeln!(w, "{},{},{k}", fmt_float(s.a.0), fmt_float(s.a.1))?;
        writeln!(w, "{},{},{k}", fmt_float(s.b.0), fmt_float(s.b.1))?;
    }
    Ok(())
}
