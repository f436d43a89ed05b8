//! Command-line front end: convergence tables, stability maps and
//! reaction-diffusion runs from TOML configs.

pub mod config;
pub mod convergence;
pub mod driver;
pub mod error;
pub mod output;
pub mod simulate;
pub mod stability_run;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{Kind, Overrides, Plan, RunConfig};
use error::{CliError, Result};
use output::{config_hash, write_manifest, Artifacts, Manifest};

#[derive(Debug, Parser)]
#[command(name = "idcos", version, about = "Deferred-correction splitting integrators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Error and order table over a list of step counts.
    Convergence(RunArgs),
    /// Amplification-factor map of the scheme on `u' = λu`.
    Stability(RunArgs),
    /// Time-dependent run with field snapshots.
    Simulate(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML config; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    /// lie-trotter, strang or adi
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub corrections: Option<Vec<usize>>,
    /// Sub-intervals per macro step, one value or one per correction level.
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
    /// Macro step counts.
    #[arg(long, value_delimiter = ',')]
    pub nt: Option<Vec<usize>>,
    /// Nodes per direction.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Macro step size of a simulation.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Snapshot times of a simulation.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
    #[arg(long)]
    pub order_space: Option<usize>,
    /// exact or oversampled:<n>
    #[arg(long)]
    pub residual_mode: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    pub fn kind(&self) -> Kind {
        match self {
            Command::Convergence(_) => Kind::Convergence,
            Command::Stability(_) => Kind::Stability,
            Command::Simulate(_) => Kind::Simulate,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Convergence(a) | Command::Stability(a) | Command::Simulate(a) => a,
        }
    }
}

impl RunArgs {
    pub fn resolve(&self, kind: Kind) -> Result<Plan> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(Overrides {
            problem: self.problem.clone(),
            scheme: self.scheme.clone(),
            corrections: self.corrections.clone(),
            m: self.m.clone(),
            nt: self.nt.clone(),
            grid: self.grid,
            t_end: self.t_end,
            dt: self.dt,
            snapshots: self.snapshots.clone(),
            order_space: self.order_space,
            residual_mode: self.residual_mode.clone(),
            out: self.out.clone(),
        });
        Plan::new(kind, cfg)
    }
}

/// Runs a resolved plan, writing its artifacts and `run.json` under the
/// configured output directory.
pub fn execute(plan: &Plan) -> Result<()> {
    let start = Instant::now();
    let dir = plan.config.out.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut artifacts = Artifacts::default();
    let mut snapshots = Vec::new();
    let mut failed_cells = None;
    match plan.kind {
        Kind::Convergence => {
            let report = convergence::run_convergence(plan)?;
            artifacts.write(&dir, "convergence.csv", |w| report.write_csv(w))?;
            for r in &report.rows {
                let order = r.order.map(|o| format!("{o:.2}")).unwrap_or_else(|| "--".into());
                println!("c_s={} Nt={:<5} error={:.3e} order={order}", r.correction, r.nt, r.error);
            }
            failed_cells = Some(report.failed);
        }
        Kind::Stability => {
            for r in stability_run::run_stability(plan, &dir, &mut artifacts)? {
                match r.lambda_star {
                    Some(l) => println!("c_s={} M={}: unstable from lambda = {l:.6}", r.correction, r.m),
                    None => println!("c_s={} M={}: stable on the sampled negative real axis", r.correction, r.m),
                }
            }
        }
        Kind::Simulate => {
            snapshots = simulate::run_simulation(plan, &dir, &mut artifacts)?;
        }
    }
    let manifest = Manifest {
        kind: plan.kind,
        name: &plan.name,
        config: &plan.config,
        config_sha256: config_hash(&plan.config),
        wall_time_s: start.elapsed().as_secs_f64(),
        artifacts: &artifacts.files,
        snapshots,
        failed_cells,
    };
    write_manifest(&dir, &manifest)?;
    match failed_cells {
        Some(failed) if failed > 0 => {
            let total = plan.corrections.len() * plan.config.nt.len();
            Err(CliError::Cells { failed, total })
        }
        _ => Ok(()),
    }
}

/// Parses, runs and maps the outcome to an exit code.
pub fn run(cli: Cli) -> i32 {
    let kind = cli.command.kind();
    let result = cli.command.args().resolve(kind).and_then(|plan| execute(&plan));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
