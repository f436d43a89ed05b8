//! Long reaction-diffusion runs with field snapshots.

use std::path::Path;

use idcos::pde2d::{snapshot_filename, write_snapshot, Grid2D};

use crate::config::Plan;
use crate::driver::{build_system, march};
use crate::error::{CliError, Result};
use crate::output::{Artifacts, SnapshotStat};

/// Per-component `(min, max)` of a component-major field.
pub fn field_range(grid: &Grid2D, state: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let np = grid.len();
    state.chunks(np).map(|c| c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))).unzip()
}

fn check_finite(grid: &Grid2D, t: f64, state: &[f64]) -> Result<()> {
    match state.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(k) => {
            let (component, node) = (k / grid.len(), k % grid.len());
            Err(CliError::NonFinite { t, x: grid.x(node % grid.nx), y: grid.y(node / grid.nx), component })
        }
    }
}

/// Marches the plan's single correction level to `t_end`, calling `sink`
/// with `(t, state)` at every snapshot time, including `0` when listed.
pub fn simulate(plan: &Plan, sink: &mut dyn FnMut(&Grid2D, f64, &[f64]) -> Result<()>) -> Result<Vec<f64>> {
    let sys = build_system(plan)?;
    let grid = sys.grid().clone();
    let steps = plan.macro_steps()?;
    let mut wanted: Vec<(usize, f64)> =
        plan.config.simulate.snapshots.iter().map(|&t| plan.snapshot_step(t).map(|k| (k, t))).collect::<Result<_>>()?;
    wanted.sort_by(|a, b| a.0.cmp(&b.0));
    wanted.dedup_by_key(|w| w.0);
    let t0 = sys.problem().t0;
    if let Some(&(0, t)) = wanted.first() {
        sink(&grid, t0 + t, &sys.problem().initial_state())?;
    }
    let mut next = wanted.iter().position(|w| w.0 > 0).unwrap_or(wanted.len());
    let last = march(plan, &sys, plan.corrections[0], plan.m[0], steps, &mut |n, t, u| {
        check_finite(&grid, t, u)?;
        while next < wanted.len() && wanted[next].0 == n + 1 {
            sink(&grid, t0 + wanted[next].1, u)?;
            next += 1;
        }
        Ok(())
    })?;
    Ok(last)
}

pub fn run_simulation(plan: &Plan, dir: &Path, artifacts: &mut Artifacts) -> Result<Vec<SnapshotStat>> {
    let mut stats = Vec::new();
    simulate(plan, &mut |grid, t, u| {
        let file = snapshot_filename(&plan.name, t);
        artifacts.write(dir, &file, |w| write_snapshot(w, grid, u))?;
        let (min, max) = field_range(grid, u);
        log::info!("t = {t}: min {min:?} max {max:?}");
        stats.push(SnapshotStat { t, file, min, max });
        Ok(())
    })?;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Kind, RunConfig};

    fn plan(text: &str) -> Plan {
        Plan::new(Kind::Simulate, RunConfig::from_toml(text, Path::new("t")).unwrap()).unwrap()
    }

    #[test]
    fn zero_custom_run_stays_zero() {
        let dir = tempfile::tempdir().unwrap();
        let p = plan(
            "problem = 'custom'\ngrid = 8\nt_end = 0.2\ncorrections = [1]\n\
             [simulate]\ndt = 0.05\nsnapshots = [0.0, 0.1, 0.2]\n\
             [custom]\ndiffusion = [1.0, 0.3]\ninitial = [0.0, 0.0]",
        );
        let mut art = Artifacts::default();
        let stats = run_simulation(&p, dir.path(), &mut art).unwrap();
        let files: Vec<&str> = stats.iter().map(|s| s.file.as_str()).collect();
        assert_eq!(files, ["custom_t0.csv", "custom_t0.1.csv", "custom_t0.2.csv"]);
        for s in &stats {
            assert_eq!((s.min.clone(), s.max.clone()), (vec![0.0, 0.0], vec![0.0, 0.0]));
            let text = std::fs::read_to_string(dir.path().join(&s.file)).unwrap();
            assert!(text.starts_with("x,y,u,v\n"));
            assert_eq!(text.lines().count(), 65);
            assert!(text.lines().skip(1).all(|l| l.ends_with(",0,0")));
        }
    }

    #[test]
    fn non_finite_field_is_located() {
        let g = Grid2D::square(0.0, 1.0, 4, idcos::pde2d::Boundary::Periodic).unwrap();
        let mut u = vec![0.0; 32];
        u[16 + 6] = f64::NAN;
        match check_finite(&g, 0.5, &u).unwrap_err() {
            CliError::NonFinite { t, x, y, component } => {
                assert_eq!((t, component), (0.5, 1));
                assert_eq!((x, y), (g.x(2), g.y(1)));
            }
            other => panic!("{other:?}"),
        }
    }
}
