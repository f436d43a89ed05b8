//! Builds the semi-discrete system for a plan and marches it with IDC.

use idcos::idc::idc_march_with;
use idcos::pde2d::{BoundarySplitAdi, SemiDiscreteSystem};
use idcos::steppers::{SchemeStepper, Stepper};
use idcos::{Scheme, SplitIvp, SplitRhs};

use crate::config::{AdiBoundary, Plan};
use crate::error::Result;

pub fn build_system(plan: &Plan) -> Result<SemiDiscreteSystem> {
    let problem = plan.problem.build(plan.config.grid)?;
    Ok(SemiDiscreteSystem::new(problem, plan.config.order_space)?)
}

/// Runs `n_macro` IDC steps over `[t0, t_end]` and returns the final
/// state. `observer` sees `(step, t, state)` after each macro step.
pub fn march(
    plan: &Plan,
    sys: &SemiDiscreteSystem,
    corrections: usize,
    m: usize,
    n_macro: usize,
    observer: &mut dyn FnMut(usize, f64, &[f64]) -> Result<()>,
) -> Result<Vec<f64>> {
    let cfg = plan.idc_config(corrections, m);
    let corrector = SchemeStepper { scheme: plan.scheme, newton: cfg.newton };
    let split = match (plan.scheme, plan.adi_boundary) {
        (Scheme::Adi, AdiBoundary::Split) if sys.num_operators() == 2 => Some(BoundarySplitAdi::new(sys)?),
        _ => None,
    };
    let predictor: &dyn Stepper<f64> = match &split {
        Some(s) => s,
        None => &corrector,
    };
    let t0 = sys.problem().t0;
    let ivp = SplitIvp::new(sys, sys.problem().initial_state(), t0, t0 + plan.config.t_end)?;
    let mut inner_err = None;
    let out = idc_march_with(&ivp, n_macro, &cfg, predictor, &[&corrector], &mut |n, t, u| {
        observer(n, t, u).map_err(|e| {
            inner_err = Some(e);
            idcos::Error::usage("observer stopped the run")
        })
    });
    match (out, inner_err) {
        (_, Some(e)) => Err(e),
        (r, None) => Ok(r?),
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, |m: f64, d| if m.is_nan() || d.is_nan() { f64::NAN } else { m.max(d) })
}
