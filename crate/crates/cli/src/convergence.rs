//! Error-versus-step-count tables.

use std::collections::BTreeMap;
use std::io::Write;

use idcos::format::fmt_float;
use idcos::pde2d::SemiDiscreteSystem;

use crate::config::{ErrorMetric, Plan};
use crate::driver::{build_system, march, max_abs_diff};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub correction: usize,
    pub nt: usize,
    pub error: f64,
    /// `log(e_prev / e) / log(nt / nt_prev)` against the previous row of the
    /// same correction level.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct ConvergenceReport {
    pub rows: Vec<Row>,
    pub failed: usize,
}

impl ConvergenceReport {
    pub fn level(&self, correction: usize) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.correction == correction)
    }

    /// Order between the last two rows of a level.
    pub fn finest_order(&self, correction: usize) -> Option<f64> {
        self.level(correction).last().and_then(|r| r.order)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "correction,Nt,error,order")?;
        for r in &self.rows {
            let order = r.order.map(fmt_float).unwrap_or_default();
            writeln!(w, "{},{},{},{}", r.correction, r.nt, fmt_float(r.error), order)?;
        }
        Ok(())
    }
}

pub fn order_between(n0: usize, e0: f64, n1: usize, e1: f64) -> Option<f64> {
    let o = (e0 / e1).ln() / (n1 as f64 / n0 as f64).ln();
    o.is_finite().then_some(o)
}

fn final_state(plan: &Plan, sys: &SemiDiscreteSystem, correction: usize, m: usize, nt: usize) -> Result<Vec<f64>> {
    march(plan, sys, correction, m, nt, &mut |_, _, _| Ok(()))
}

pub fn run_convergence(plan: &Plan) -> Result<ConvergenceReport> {
    let sys = build_system(plan)?;
    let t_end = sys.problem().t0 + plan.config.t_end;
    let exact = sys.problem().exact_state(t_end);
    let mut report = ConvergenceReport::default();
    for (&c, &m) in plan.corrections.iter().zip(&plan.m) {
        let mut cache: BTreeMap<usize, Option<Vec<f64>>> = BTreeMap::new();
        let mut solve = |nt: usize| -> Option<Vec<f64>> {
            cache
                .entry(nt)
                .or_insert_with(|| {
                    let start = std::time::Instant::now();
                    let r = final_state(plan, &sys, c, m, nt);
                    log::info!("c_s={c} M={m} Nt={nt}: {:.2}s", start.elapsed().as_secs_f64());
                    match r {
                        Ok(u) => Some(u),
                        Err(e) => {
                            log::warn!("c_s={c} Nt={nt} failed: {e}");
                            None
                        }
                    }
                })
                .clone()
        };
        let mut prev: Option<(usize, f64)> = None;
        for &nt in &plan.config.nt {
            let error = match plan.error {
                ErrorMetric::Exact => {
                    let ex = exact.as_ref().expect("exact metric requires an exact solution");
                    solve(nt).map(|u| max_abs_diff(&u, ex))
                }
                ErrorMetric::Refinement => match (solve(nt / 2), solve(nt)) {
                    (Some(a), Some(b)) => Some(max_abs_diff(&a, &b)),
                    _ => None,
                },
            };
            let error = match error {
                Some(e) => e,
                None => {
                    report.failed += 1;
                    f64::NAN
                }
            };
            let order = prev.and_then(|(n0, e0)| order_between(n0, e0, nt, error));
            report.rows.push(Row { correction: c, nt, error, order });
            prev = Some((nt, error));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Kind, RunConfig};
    use std::path::Path;

    #[test]
    fn order_formula() {
        assert!((order_between(10, 1e-2, 20, 2.5e-3).unwrap() - 2.0).abs() < 1e-12);
        assert!(order_between(10, 0.0, 20, 0.0).is_none());
        assert!(order_between(10, f64::NAN, 20, 1.0).is_none());
    }

    #[test]
    fn csv_layout() {
        let report = ConvergenceReport {
            rows: vec![Row { correction: 0, nt: 10, error: 0.5, order: None }, Row { correction: 0, nt: 20, error: f64::NAN, order: None }],
            failed: 1,
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "correction,Nt,error,order\n0,10,0.5,\n0,20,nan,\n");
    }

    #[test]
    fn coarse_lie_trotter_study() {
        let cfg = RunConfig::from_toml("grid = 9\ncorrections = [0, 1]\nnt = [4, 8, 16]\nt_end = 0.1", Path::new("t")).unwrap();
        let plan = Plan::new(Kind::Convergence, cfg).unwrap();
        let r = run_convergence(&plan).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert_eq!(r.failed, 0);
        assert!(r.rows.iter().all(|row| row.error > 0.0 && row.error < 1e-2));
        assert!(r.level(1).last().unwrap().error < r.level(0).last().unwrap().error);
        assert!((r.finest_order(0).unwrap() - 1.0).abs() < 0.2);
    }

    #[test]
    fn refinement_metric_reuses_runs() {
        let cfg = RunConfig::from_toml("problem = 'example2'\ngrid = 10\nscheme = 'strang'\nnt = [4, 8, 16]\nt_end = 0.01", Path::new("t"))
            .unwrap();
        let plan = Plan::new(Kind::Convergence, cfg).unwrap();
        let r = run_convergence(&plan).unwrap();
        let e: Vec<f64> = r.rows.iter().map(|row| row.error).collect();
        assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
        assert!((r.finest_order(0).unwrap() - 2.0).abs() < 0.3, "{r:?}");
    }
}
