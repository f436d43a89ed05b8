//! Amplification-factor maps and their `|amp| = 1` contours.

use std::io::Write;
use std::path::Path;

use idcos::format::fmt_float;
use idcos::stability::{real_axis_boundary, scan_region, unit_contour, write_contour_csv, write_field_csv, StabilityScan};

use crate::config::Plan;
use crate::error::Result;
use crate::output::Artifacts;

#[derive(Debug, Clone, PartialEq)]
pub struct RealAxisRow {
    pub correction: usize,
    pub m: usize,
    /// Stable-to-unstable crossing on the negative real axis, if any.
    pub lambda_star: Option<f64>,
}

pub fn scan_for(plan: &Plan, correction: usize, m: usize) -> StabilityScan {
    let s = &plan.config.stability;
    let mut scan = StabilityScan::new(plan.scheme, correction);
    scan.re_range = (s.re[0], s.re[1]);
    scan.im_range = (s.im[0], s.im[1]);
    scan.n_re = s.resolution[0];
    scan.n_im = s.resolution[1];
    scan.m = m;
    scan.residual_mode = plan.residual_mode;
    scan
}

pub fn real_axis_rows(plan: &Plan) -> Result<Vec<RealAxisRow>> {
    plan.corrections
        .iter()
        .zip(&plan.m)
        .map(|(&c, &m)| {
            let lambda_star = real_axis_boundary(plan.scheme, c, m, plan.residual_mode, 1e-10)?;
            Ok(RealAxisRow { correction: c, m, lambda_star })
        })
        .collect()
}

pub fn write_real_axis_csv<W: Write>(rows: &[RealAxisRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "correction,M,lambda_star")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.correction, r.m, r.lambda_star.map(fmt_float).unwrap_or_default())?;
    }
    Ok(())
}

/// Writes `stability_c<k>.csv` and `contour_c<k>.csv` per correction level
/// and `real_axis.csv`.
pub fn run_stability(plan: &Plan, dir: &Path, artifacts: &mut Artifacts) -> Result<Vec<RealAxisRow>> {
    for (&c, &m) in plan.corrections.iter().zip(&plan.m) {
        let scan = scan_region(scan_for(plan, c, m))?;
        let segments = unit_contour(&scan);
        artifacts.write(dir, &format!("stability_c{c}.csv"), |w| write_field_csv(&scan, w))?;
        artifacts.write(dir, &format!("contour_c{c}.csv"), |w| write_contour_csv(&segments, w))?;
        let poles = scan.amp.iter().filter(|a| a.is_infinite()).count();
        if poles > 0 {
            log::warn!("c_s={c}: {poles} pole cells written as inf");
        }
    }
    let rows = real_axis_rows(plan)?;
    artifacts.write(dir, "real_axis.csv", |w| write_real_axis_csv(&rows, w))?;
    Ok(rows)
}
