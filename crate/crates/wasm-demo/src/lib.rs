//! Browser bindings over the split Dahlquist problem `u' = λ₁u + λ₂u`.
//!
//! The plain functions are what the tests exercise; the `#[wasm_bindgen]`
//! wrappers only convert errors.

use idcos::idc::{default_m, idc_solve, IdcConfig, ResidualMode};
use idcos::stability::{amplification, real_axis_boundary, scan_region, unit_contour, StabilityScan};
use idcos::{LinearSplit, Scheme, SplitIvp};
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

const SCAN_MODE: ResidualMode = ResidualMode::Oversampled(13);

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Solver(#[from] idcos::Error),
    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, DemoError>;

fn setup(scheme: &str, corrections: usize, m: usize) -> Result<(Scheme, usize)> {
    let scheme: Scheme = scheme.parse()?;
    Ok((scheme, if m == 0 { default_m(scheme, corrections) } else { m }))
}

/// `|amp|` on a grid (im outer, re inner) and the `|amp| = 1` contour as
/// flattened segments `[ax, ay, bx, by, ...]`.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct StabilityField {
    amp: Vec<f64>,
    contour: Vec<f64>,
}

#[wasm_bindgen]
impl StabilityField {
    #[wasm_bindgen(getter)]
    pub fn amp(&self) -> Vec<f64> {
        self.amp.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn contour(&self) -> Vec<f64> {
        self.contour.clone()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn field(
    scheme: &str,
    corrections: usize,
    m: usize,
    re: (f64, f64),
    im: (f64, f64),
    n_re: usize,
    n_im: usize,
) -> Result<StabilityField> {
    let (scheme, m) = setup(scheme, corrections, m)?;
    if n_re * n_im > 400_000 {
        return Err(DemoError::Input(format!("{n_re} x {n_im} is too many cells")));
    }
    let mut scan = StabilityScan::new(scheme, corrections);
    scan.re_range = re;
    scan.im_range = im;
    scan.n_re = n_re;
    scan.n_im = n_im;
    scan.m = m;
    scan.residual_mode = SCAN_MODE;
    let scan = scan_region(scan)?;
    let contour = unit_contour(&scan).iter().flat_map(|s| [s.a.0, s.a.1, s.b.0, s.b.1]).collect();
    Ok(StabilityField { amp: scan.amp, contour })
}

/// `[re(amp), im(amp), |amp|, λ*]` at `λ = re + i im`; `λ*` is the real-axis
/// stability boundary or `NaN` when none is found.
pub fn point(scheme: &str, corrections: usize, m: usize, re: f64, im: f64) -> Result<[f64; 4]> {
    let (scheme, m) = setup(scheme, corrections, m)?;
    let a = amplification(Complex64::new(re, im), scheme, corrections, m, SCAN_MODE)?;
    let star = real_axis_boundary(scheme, corrections, m, SCAN_MODE, 1e-8)?.unwrap_or(f64::NAN);
    Ok([a.re, a.im, a.norm(), star])
}

/// Final-time errors for `n0, 2 n0, ...` macro steps, flattened as
/// `[n, error, order, ...]` with `NaN` order on the first row.
#[allow(clippy::too_many_arguments)]
pub fn order_study(
    scheme: &str,
    corrections: usize,
    m: usize,
    lambda1: f64,
    lambda2: f64,
    t_end: f64,
    n0: usize,
    levels: usize,
) -> Result<Vec<f64>> {
    let (scheme, m) = setup(scheme, corrections, m)?;
    if n0 == 0 || levels == 0 || levels > 12 {
        return Err(DemoError::Input("need n0 >= 1 and 1..=12 levels".into()));
    }
    let problem = LinearSplit::scalar(&[lambda1, lambda2]);
    let ivp = SplitIvp::new(&problem, vec![1.0], 0.0, t_end)?;
    let cfg = IdcConfig::new(scheme, corrections).with_m(m);
    let exact = ((lambda1 + lambda2) * t_end).exp();
    let mut out = Vec::with_capacity(3 * levels);
    let mut prev: Option<f64> = None;
    for k in 0..levels {
        let n = n0 << k;
        let err = (idc_solve(&ivp, n, &cfg)?.last().map(|u| u[0]).unwrap_or(f64::NAN) - exact).abs();
        out.extend([n as f64, err, prev.map_or(f64::NAN, |p| (p / err).log2())]);
        prev = Some(err);
    }
    Ok(out)
}

fn js(e: DemoError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = stabilityField)]
#[allow(clippy::too_many_arguments)]
pub fn stability_field_js(
    scheme: &str,
    corrections: usize,
    m: usize,
    re0: f64,
    re1: f64,
    im0: f64,
    im1: f64,
    n_re: usize,
    n_im: usize,
) -> std::result::Result<StabilityField, JsError> {
    field(scheme, corrections, m, (re0, re1), (im0, im1), n_re, n_im).map_err(js)
}

#[wasm_bindgen(js_name = amplificationAt)]
pub fn amplification_at_js(scheme: &str, corrections: usize, m: usize, re: f64, im: f64) -> std::result::Result<Vec<f64>, JsError> {
    point(scheme, corrections, m, re, im).map(|p| p.to_vec()).map_err(js)
}

#[wasm_bindgen(js_name = orderStudy)]
#[allow(clippy::too_many_arguments)]
pub fn order_study_js(
    scheme: &str,
    corrections: usize,
    m: usize,
    lambda1: f64,
    lambda2: f64,
    t_end: f64,
    n0: usize,
    levels: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    order_study(scheme, corrections, m, lambda1, lambda2, t_end, n0, levels).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_has_one_value_per_cell() {
        let f = field("strang", 1, 0, (-20.0, 4.0), (-12.0, 12.0), 13, 9).unwrap();
        assert_eq!(f.amp.len(), 13 * 9);
        assert_eq!(f.contour.len() % 4, 0);
        assert!(!f.contour.is_empty());
    }

    #[test]
    fn origin_is_neutral() {
        let p = point("lie", 2, 0, 0.0, 0.0).unwrap();
        assert!((p[2] - 1.0).abs() < 1e-13);
        assert!(p[3].is_nan());
    }

    #[test]
    fn strang_boundary_matches_core() {
        let p = point("strang", 1, 6, -1.0, 0.0).unwrap();
        let core = real_axis_boundary(Scheme::Strang, 1, 6, SCAN_MODE, 1e-8).unwrap().unwrap();
        assert!((p[3] - core).abs() <= 1e-6 * core.abs());
    }

    #[test]
    fn order_study_recovers_fourth_order() {
        let rows = order_study("strang", 1, 6, -0.5, -0.5, 1.0, 2, 4).unwrap();
        assert_eq!(rows.len(), 12);
        assert!(rows[2].is_nan());
        assert!((rows[11] - 4.0).abs() < 0.3, "{rows:?}");
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(matches!(point("euler", 0, 0, -1.0, 0.0), Err(DemoError::Solver(_))));
        assert!(matches!(order_study("lie", 0, 0, -1.0, 0.0, 1.0, 0, 3), Err(DemoError::Input(_))));
        assert!(field("lie", 0, 0, (-1.0, 1.0), (-1.0, 1.0), 1000, 1000).is_err());
    }
}
