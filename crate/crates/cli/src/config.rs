//! Run configuration: a TOML file, overridden by command-line flags, then
//! resolved into a [`Plan`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use idcos::idc::{default_m, IdcConfig, ResidualMode};
use idcos::pde2d::{Boundary, Grid2D, Problem, ProblemId};
use idcos::{NewtonConfig, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Convergence,
    Stability,
    Simulate,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Convergence => "convergence",
            Kind::Stability => "stability",
            Kind::Simulate => "simulate",
        })
    }
}

/// Sub-intervals per macro step: one value for every correction level, or
/// one per entry of `corrections`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MSpec {
    All(usize),
    PerLevel(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub resolution: [usize; 2],
}

impl Default for StabilitySection {
    fn default() -> Self {
        StabilitySection { re: [-20.0, 4.0], im: [-12.0, 12.0], resolution: [601, 601] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// Macro step size.
    pub dt: Option<f64>,
    pub snapshots: Vec<f64>,
}

/// Heat equation with constant data, for runs outside the built-in set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CustomSection {
    pub domain: [f64; 2],
    pub boundary: String,
    pub diffusion: Vec<f64>,
    pub initial: Vec<f64>,
    pub boundary_value: f64,
}

impl Default for CustomSection {
    fn default() -> Self {
        CustomSection { domain: [0.0, 1.0], boundary: "periodic".into(), diffusion: vec![1.0], initial: vec![0.0], boundary_value: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub kind: Option<Kind>,
    pub name: Option<String>,
    pub problem: String,
    pub scheme: String,
    pub corrections: Vec<usize>,
    pub m: Option<MSpec>,
    pub nt: Vec<usize>,
    pub grid: usize,
    pub t_end: f64,
    pub order_space: usize,
    /// `exact` or `oversampled:<n>`; stability scans default to
    /// `oversampled:13`, everything else to `exact`.
    pub residual_mode: Option<String>,
    pub additive_residual: bool,
    /// ADI predictor on problems without a source: `split` puts the wall
    /// data of each direction at the ends of the step, `standard` uses the
    /// generic Peaceman-Rachford step.
    pub adi_boundary: String,
    /// `exact` or `refinement`; chosen from the problem when absent.
    pub error: Option<String>,
    pub newton_tol: Option<f64>,
    pub out: PathBuf,
    pub stability: StabilitySection,
    pub simulate: SimulateSection,
    pub custom: Option<CustomSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kind: None,
            name: None,
            problem: "example1".into(),
            scheme: "lie-trotter".into(),
            corrections: vec![0],
            m: None,
            nt: Vec::new(),
            grid: 45,
            t_end: 0.025,
            order_space: 6,
            residual_mode: None,
            additive_residual: false,
            adi_boundary: "split".into(),
            error: None,
            newton_tol: None,
            out: PathBuf::from("out"),
            stability: StabilitySection::default(),
            simulate: SimulateSection::default(),
            custom: None,
        }
    }
}

/// Command-line values that replace file values when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub problem: Option<String>,
    pub scheme: Option<String>,
    pub corrections: Option<Vec<usize>>,
    pub m: Option<Vec<usize>>,
    pub nt: Option<Vec<usize>>,
    pub grid: Option<usize>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub snapshots: Option<Vec<f64>>,
    pub order_space: Option<usize>,
    pub residual_mode: Option<String>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(v) = o.problem {
            self.problem = v;
        }
        if let Some(v) = o.scheme {
            self.scheme = v;
        }
        if let Some(v) = o.corrections {
            self.corrections = v;
        }
        if let Some(v) = o.m {
            self.m = Some(if v.len() == 1 { MSpec::All(v[0]) } else { MSpec::PerLevel(v) });
        }
        if let Some(v) = o.nt {
            self.nt = v;
        }
        if let Some(v) = o.grid {
            self.grid = v;
        }
        if let Some(v) = o.t_end {
            self.t_end = v;
        }
        if let Some(v) = o.dt {
            self.simulate.dt = Some(v);
        }
        if let Some(v) = o.snapshots {
            self.simulate.snapshots = v;
        }
        if let Some(v) = o.order_space {
            self.order_space = v;
        }
        if let Some(v) = o.residual_mode {
            self.residual_mode = Some(v);
        }
        if let Some(v) = o.out {
            self.out = v;
        }
    }
}

pub fn parse_residual_mode(s: &str) -> Result<ResidualMode> {
    let s = s.trim().to_ascii_lowercase();
    if s == "exact" || s == "interpolant-exact" {
        return Ok(ResidualMode::InterpolantExact);
    }
    if let Some(n) = s.strip_prefix("oversampled:").or_else(|| s.strip_prefix("oversampled(").and_then(|r| r.strip_suffix(')'))) {
        let n: usize = n.trim().parse().map_err(|_| CliError::config(format!("bad oversampling count in '{s}'")))?;
        return Ok(ResidualMode::Oversampled(n));
    }
    Err(CliError::config(format!("unknown residual mode '{s}'")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdiBoundary {
    Split,
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMetric {
    /// `‖u − υ_{N_t}‖∞` against the exact solution.
    Exact,
    /// `‖υ_{N_t} − υ_{N_t/2}‖∞`.
    Refinement,
}

#[derive(Debug, Clone)]
pub enum ProblemSpec {
    Builtin(ProblemId),
    Custom(CustomSection),
}

impl ProblemSpec {
    pub fn name(&self) -> &str {
        match self {
            ProblemSpec::Builtin(id) => id.name(),
            ProblemSpec::Custom(_) => "custom",
        }
    }

    pub fn build(&self, n: usize) -> Result<Problem> {
        match self {
            ProblemSpec::Builtin(id) => Ok(id.build(n)?),
            ProblemSpec::Custom(c) => build_custom(c, n),
        }
    }
}

fn build_custom(c: &CustomSection, n: usize) -> Result<Problem> {
    let bc = match c.boundary.trim().to_ascii_lowercase().as_str() {
        "periodic" => Boundary::Periodic,
        "dirichlet" => Boundary::Dirichlet,
        other => return Err(CliError::config(format!("unknown boundary '{other}'"))),
    };
    if c.initial.len() != c.diffusion.len() {
        return Err(CliError::config(format!("custom problem: {} initial values for {} components", c.initial.len(), c.diffusion.len())));
    }
    let init = c.initial.clone();
    let g = c.boundary_value;
    let problem = Problem {
        name: "custom".into(),
        grid: Grid2D::square(c.domain[0], c.domain[1], n, bc)?,
        diffusion: c.diffusion.clone(),
        coefficient: None,
        boundary_data: (bc == Boundary::Dirichlet).then(|| Arc::new(move |_, _, _, _| g) as _),
        reaction: None,
        initial: Arc::new(move |k, _, _| init[k]),
        exact: None,
        t0: 0.0,
    };
    problem.validate()?;
    Ok(problem)
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Plan {
    pub kind: Kind,
    pub config: RunConfig,
    pub name: String,
    pub problem: ProblemSpec,
    pub scheme: Scheme,
    pub corrections: Vec<usize>,
    pub m: Vec<usize>,
    pub residual_mode: ResidualMode,
    pub adi_boundary: AdiBoundary,
    pub error: ErrorMetric,
    pub newton: NewtonConfig,
}

impl Plan {
    pub fn new(kind: Kind, config: RunConfig) -> Result<Self> {
        if let Some(k) = config.kind {
            if k != kind {
                return Err(CliError::config(format!("config is for a {k} run, not {kind}")));
            }
        }
        let problem = if config.problem.trim().eq_ignore_ascii_case("custom") {
            ProblemSpec::Custom(config.custom.clone().unwrap_or_default())
        } else {
            if config.custom.is_some() {
                return Err(CliError::config("[custom] given for a built-in problem"));
            }
            ProblemSpec::Builtin(config.problem.parse()?)
        };
        let scheme: Scheme = config.scheme.parse()?;
        if config.corrections.is_empty() {
            return Err(CliError::config("corrections list is empty"));
        }
        let m = match &config.m {
            None => config.corrections.iter().map(|&c| default_m(scheme, c)).collect(),
            Some(MSpec::All(v)) => vec![*v; config.corrections.len()],
            Some(MSpec::PerLevel(v)) => {
                if v.len() != config.corrections.len() {
                    return Err(CliError::config(format!("{} values of m for {} correction levels", v.len(), config.corrections.len())));
                }
                v.clone()
            }
        };
        let residual_mode = match (&config.residual_mode, kind) {
            (Some(s), _) => parse_residual_mode(s)?,
            (None, Kind::Stability) => ResidualMode::Oversampled(13),
            (None, _) => ResidualMode::InterpolantExact,
        };
        let adi_boundary = match config.adi_boundary.trim().to_ascii_lowercase().as_str() {
            "split" => AdiBoundary::Split,
            "standard" => AdiBoundary::Standard,
            other => return Err(CliError::config(format!("unknown adi_boundary '{other}'"))),
        };
        let has_exact = match &problem {
            ProblemSpec::Builtin(id) => matches!(id, ProblemId::Example1 | ProblemId::Example3),
            ProblemSpec::Custom(_) => false,
        };
        let error = match config.error.as_deref().map(|s| s.trim().to_ascii_lowercase()) {
            None if has_exact => ErrorMetric::Exact,
            None => ErrorMetric::Refinement,
            Some(s) if s == "exact" => {
                if !has_exact {
                    return Err(CliError::config(format!("{} has no exact solution", problem.name())));
                }
                ErrorMetric::Exact
            }
            Some(s) if s == "refinement" => ErrorMetric::Refinement,
            Some(s) => return Err(CliError::config(format!("unknown error metric '{s}'"))),
        };
        let mut newton = NewtonConfig::default();
        if let Some(tol) = config.newton_tol {
            newton.abs_tol = tol;
            newton.rel_tol = tol;
        }
        newton.validate()?;
        if ![2, 4, 6].contains(&config.order_space) {
            return Err(CliError::config(format!("order_space must be 2, 4 or 6, got {}", config.order_space)));
        }
        if !(config.t_end > 0.0) || !config.t_end.is_finite() {
            return Err(CliError::config(format!("t_end must be positive, got {}", config.t_end)));
        }
        let name = config.name.clone().unwrap_or_else(|| problem.name().to_string());
        let plan = Plan {
            kind,
            name,
            problem,
            scheme,
            corrections: config.corrections.clone(),
            m,
            residual_mode,
            adi_boundary,
            error,
            newton,
            config,
        };
        for (&c, &m) in plan.corrections.iter().zip(&plan.m) {
            plan.idc_config(c, m).validate()?;
        }
        plan.check_kind()?;
        Ok(plan)
    }

    fn check_kind(&self) -> Result<()> {
        let cfg = &self.config;
        match self.kind {
            Kind::Convergence => {
                if cfg.nt.len() < 2 {
                    return Err(CliError::config("a convergence study needs at least two values of nt"));
                }
                if cfg.nt.iter().any(|&n| n == 0) {
                    return Err(CliError::config("nt values must be positive"));
                }
                if self.error == ErrorMetric::Refinement && cfg.nt.iter().any(|n| n % 2 == 1) {
                    return Err(CliError::config("refinement errors need even nt values"));
                }
            }
            Kind::Stability => {
                let s = &cfg.stability;
                if s.resolution[0] < 2 || s.resolution[1] < 2 {
                    return Err(CliError::config("stability resolution must be at least 2 per axis"));
                }
                if !(s.re[1] > s.re[0] && s.im[1] > s.im[0]) {
                    return Err(CliError::config("stability ranges must be increasing"));
                }
            }
            Kind::Simulate => {
                if self.corrections.len() != 1 {
                    return Err(CliError::config("a simulation takes exactly one correction count"));
                }
                self.macro_steps()?;
                for &t in &cfg.simulate.snapshots {
                    self.snapshot_step(t)?;
                }
            }
        }
        Ok(())
    }

    pub fn idc_config(&self, corrections: usize, m: usize) -> IdcConfig {
        let mut cfg = IdcConfig::new(self.scheme, corrections).with_m(m).with_residual_mode(self.residual_mode);
        cfg.newton = self.newton;
        cfg.additive_residual = self.config.additive_residual;
        cfg
    }

    /// Number of macro steps of a simulation.
    pub fn macro_steps(&self) -> Result<usize> {
        let dt = self.config.simulate.dt.ok_or_else(|| CliError::config("simulate.dt is required"))?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(CliError::config(format!("dt must be positive, got {dt}")));
        }
        whole_steps(self.config.t_end, dt)
            .ok_or_else(|| CliError::config(format!("t_end {} is not a multiple of dt {dt}", self.config.t_end)))
    }

    /// Macro step index at which snapshot time `t` falls.
    pub fn snapshot_step(&self, t: f64) -> Result<usize> {
        let dt = self.config.simulate.dt.unwrap_or(f64::NAN);
        let k = if t == 0.0 { Some(0) } else { whole_steps(t, dt) };
        match k {
            Some(k) if t <= self.config.t_end * (1.0 + 1e-12) => Ok(k),
            _ => Err(CliError::config(format!("snapshot time {t} is not a step time in [0, {}]", self.config.t_end))),
        }
    }
}

fn whole_steps(t: f64, dt: f64) -> Option<usize> {
    let k = (t / dt).round();
    (k >= 1.0 && ((k * dt - t).abs() <= 1e-9 * t.abs().max(dt))).then_some(k as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(kind: Kind, text: &str) -> Result<Plan> {
        Plan::new(kind, RunConfig::from_toml(text, Path::new("test.toml"))?)
    }

    #[test]
    fn defaults_follow_the_scheme() {
        let p = plan(Kind::Convergence, "scheme = 'strang'\ncorrections = [0, 1, 2]\nnt = [10, 20]").unwrap();
        assert_eq!(p.m, vec![3, 4, 6]);
        assert_eq!(p.error, ErrorMetric::Exact);
        assert_eq!(p.residual_mode, ResidualMode::InterpolantExact);
        let s = plan(Kind::Stability, "scheme = 'adi'").unwrap();
        assert_eq!(s.residual_mode, ResidualMode::Oversampled(13));
    }

    #[test]
    fn m_per_level_and_shared() {
        let p = plan(Kind::Convergence, "corrections = [0, 1, 2]\nm = [1, 1, 2]\nnt = [4, 8]").unwrap();
        assert_eq!(p.m, vec![1, 1, 2]);
        let p = plan(Kind::Convergence, "corrections = [0, 1]\nm = 5\nnt = [4, 8]").unwrap();
        assert_eq!(p.m, vec![5, 5]);
        assert!(plan(Kind::Convergence, "corrections = [0, 1]\nm = [5]\nnt = [4, 8]").is_err());
    }

    #[test]
    fn refinement_needs_even_steps() {
        assert_eq!(plan(Kind::Convergence, "problem = 'example2'\nnt = [40, 80]").unwrap().error, ErrorMetric::Refinement);
        let err = plan(Kind::Convergence, "problem = 'example2'\nnt = [41, 82]").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(plan(Kind::Convergence, "problem = 'example2'\nerror = 'exact'\nnt = [40, 80]").is_err());
    }

    #[test]
    fn bad_input_is_a_config_error() {
        for text in ["scheme = 'euler'", "bogus = 1", "problem = 'nope'", "order_space = 3", "residual_mode = 'x'", "adi_boundary = 'mid'"]
        {
            let err = plan(Kind::Convergence, &format!("{text}\nnt = [4, 8]")).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
        let err = plan(Kind::Convergence, "kind = 'stability'\nnt = [4, 8]").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn snapshot_times_must_land_on_steps() {
        let text = "problem = 'fhn'\nt_end = 1.0\n[simulate]\ndt = 0.25\nsnapshots = [0.0, 0.5, 1.0]";
        let p = plan(Kind::Simulate, text).unwrap();
        assert_eq!(p.macro_steps().unwrap(), 4);
        assert_eq!(p.snapshot_step(0.5).unwrap(), 2);
        assert!(plan(Kind::Simulate, &text.replace("0.5,", "0.3,")).is_err());
        assert!(plan(Kind::Simulate, &text.replace("1.0]", "1.5]")).is_err());
        assert!(plan(Kind::Simulate, "problem = 'fhn'\nt_end = 1.0\n[simulate]\ndt = 0.3").is_err());
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut cfg = RunConfig::from_toml("grid = 45\nnt = [1, 2]", Path::new("x")).unwrap();
        cfg.apply(Overrides { grid: Some(9), nt: Some(vec![3, 6]), m: Some(vec![4]), ..Default::default() });
        assert_eq!((cfg.grid, cfg.nt.clone(), cfg.m.clone()), (9, vec![3, 6], Some(MSpec::All(4))));
    }

    #[test]
    fn residual_modes() {
        assert_eq!(parse_residual_mode("oversampled:13").unwrap(), ResidualMode::Oversampled(13));
        assert_eq!(parse_residual_mode("Oversampled(5)").unwrap(), ResidualMode::Oversampled(5));
        assert_eq!(parse_residual_mode("exact").unwrap(), ResidualMode::InterpolantExact);
    }

    #[test]
    fn custom_problem() {
        let p = plan(Kind::Convergence, "problem = 'custom'\nnt = [2, 4]\n[custom]\ndiffusion = [1.0, 0.5]\ninitial = [0.0, 2.0]").unwrap();
        let prob = p.problem.build(8).unwrap();
        assert_eq!(prob.components(), 2);
        assert!(prob.initial_state()[64..].iter().all(|&v| v == 2.0));
        assert!(plan(Kind::Convergence, "problem = 'custom'\nnt = [2, 4]\n[custom]\ndiffusion = [1.0]\ninitial = []")
            .and_then(|p| p.problem.build(8))
            .is_err());
    }
}
