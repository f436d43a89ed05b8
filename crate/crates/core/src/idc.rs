//! Integral deferred correction built on the splitting steppers.
//!
//! Each macro interval `[t0, t0 + H]` is cut into `M` equal sub-steps. A
//! prediction sweep runs the base stepper across the nodes; each correction
//! sweep then integrates the error equation `Q' = G(t, Q)` with a splitting
//! stepper, where
//!
//! ```text
//! G_ν(t, Q) = f_ν(t, υ(t) + Q − I(t)) − f_ν(t, υ(t)),   I(t) = ∫_{t0}^{t} ε.
//! ```
//!
//! Since `υ(t) − I(t) = u0 + ∫_{t0}^{t} L(f)` with `L(f)` the interpolant of
//! the node values of `f`, the first argument is evaluated in that form and
//! the corrected level is `υ_m = u0 + ∫_{t0}^{t_m} L(f) + Q_m`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::ode::{DenseMatrix, Scalar, SplitIvp, SplitRhs, Trajectory};
use crate::polyint::{self, UniformNodeSet, MAX_M};
use crate::steppers::newton::NewtonConfig;
use crate::steppers::{Scheme, SchemeStepper, Stepper};

/// How `∫ L(f)` is formed in the correction sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualMode {
    /// Integrate the degree-`M` interpolant of the node values exactly.
    InterpolantExact,
    /// Re-evaluate `f` along the interpolant of `υ` at `n` uniformly spaced
    /// interior points plus both ends of the macro interval, and integrate
    /// the interpolant through those `n + 2` values.
    Oversampled(usize),
}

impl Default for ResidualMode {
    fn default() -> Self {
        ResidualMode::InterpolantExact
    }
}

#[derive(Debug, Clone)]
pub struct IdcConfig {
    pub m: usize,
    pub corrections: usize,
    pub predictor: Scheme,
    /// Scheme per correction sweep; the last entry is reused for further
    /// sweeps. `None` means the predictor scheme.
    pub correctors: Option<Vec<Scheme>>,
    pub newton: NewtonConfig,
    pub residual_mode: ResidualMode,
    /// Solve for the error `e` with the residual `ε` split equally as an
    /// additive source over the operators, instead of the integral form.
    pub additive_residual: bool,
}

/// `M = max(Σ r_k, 3)` for `corrections` sweeps of a single scheme.
pub fn default_m(scheme: Scheme, corrections: usize) -> usize {
    (scheme.order() * (corrections + 1)).max(3)
}

impl IdcConfig {
    pub fn new(scheme: Scheme, corrections: usize) -> Self {
        IdcConfig {
            m: default_m(scheme, corrections),
            corrections,
            predictor: scheme,
            correctors: None,
            newton: NewtonConfig::default(),
            residual_mode: ResidualMode::InterpolantExact,
            additive_residual: false,
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_residual_mode(mut self, mode: ResidualMode) -> Self {
        self.residual_mode = mode;
        self
    }

    pub fn corrector(&self, sweep: usize) -> Scheme {
        match &self.correctors {
            Some(list) if !list.is_empty() => list[(sweep - 1).min(list.len() - 1)],
            _ => self.predictor,
        }
    }

    /// `s_{c_s} = Σ_k r_k`, the order the corrections aim for.
    pub fn order_sum(&self) -> usize {
        self.predictor.order() + (1..=self.corrections).map(|k| self.corrector(k).order()).sum::<usize>()
    }

    /// Expected order of the full method, saturated at `M + 1`.
    pub fn expected_order(&self) -> usize {
        self.order_sum().min(self.m + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > MAX_M {
            return Err(Error::usage(format!("M must be in 1..={MAX_M}, got {}", self.m)));
        }
        if let ResidualMode::Oversampled(n) = self.residual_mode {
            if n == 0 || n + 1 > MAX_M {
                return Err(Error::usage(format!("oversampling needs 1..={} interior nodes, got {n}", MAX_M - 1)));
            }
        }
        self.newton.validate()
    }
}

/// One IDC level on a macro interval.
#[derive(Debug, Clone)]
pub struct IdcLevelResult<T> {
    pub nodes: UniformNodeSet,
    /// `υ_j`, `j = 0..=M`
    pub values: Vec<Vec<T>>,
    /// `rhs_values[ν][j] = f_ν(t_j, υ_j)`
    pub rhs_values: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> IdcLevelResult<T> {
    fn build(rhs: &dyn SplitRhs<T>, nodes: UniformNodeSet, values: Vec<Vec<T>>) -> Result<Self> {
        let rhs_values = (0..rhs.num_operators())
            .map(|op| {
                values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let mut out = vec![T::zero(); v.len()];
                        rhs.eval(op, nodes.node(j), v, &mut out)?;
                        Ok(out)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IdcLevelResult { nodes, values, rhs_values })
    }

    /// `Σ_ν f_ν(t_j, υ_j)` for every node.
    pub fn total_rhs(&self) -> Vec<Vec<T>> {
        (0..self.values.len())
            .map(|j| {
                let mut acc = self.rhs_values[0][j].clone();
                for op in &self.rhs_values[1..] {
                    for (a, v) in acc.iter_mut().zip(&op[j]) {
                        *a += *v;
                    }
                }
                acc
            })
            .collect()
    }

    pub fn last(&self) -> &[T] {
        self.values.last().expect("level has nodes")
    }
}

/// Level-0 trajectory from `M` steps of `predictor`.
pub fn predict<T: Scalar>(rhs: &dyn SplitRhs<T>, nodes: UniformNodeSet, u0: &[T], predictor: &dyn Stepper<T>) -> Result<IdcLevelResult<T>> {
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(Error::usage("initial value is not finite"));
    }
    let mut values = Vec::with_capacity(nodes.m + 1);
    values.push(u0.to_vec());
    for m in 0..nodes.m {
        let next = predictor.step(rhs, nodes.node(m), nodes.h, &values[m]).map_err(|e| Error::Idc {
            interval: 0,
            sweep: 0,
            node: m,
            source: Box::new(e),
        })?;
        values.push(next);
    }
    IdcLevelResult::build(rhs, nodes, values)
}

/// Node set and values of the interpolant whose integral stands in for
/// `∫ f(t, υ(t))`.
fn quadrature_data<T: Scalar>(
    rhs: &dyn SplitRhs<T>,
    level: &IdcLevelResult<T>,
    mode: ResidualMode,
) -> Result<(UniformNodeSet, Vec<Vec<T>>)> {
    match mode {
        ResidualMode::InterpolantExact => Ok((level.nodes, level.total_rhs())),
        ResidualMode::Oversampled(n) => {
            let nodes = level.nodes;
            let fine = UniformNodeSet::over(nodes.t0, nodes.end() - nodes.t0, n + 1)?;
            let total = level.total_rhs();
            let mut vals = Vec::with_capacity(n + 2);
            for i in 0..=n + 1 {
                if i == 0 {
                    vals.push(total[0].clone());
                } else if i == n + 1 {
                    vals.push(total[nodes.m].clone());
                } else {
                    let t = fine.node(i);
                    let u = polyint::lagrange_eval(&nodes, &level.values, t)?;
                    let mut f = vec![T::zero(); u.len()];
                    rhs.eval_total(t, &u, &mut f)?;
                    vals.push(f);
                }
            }
            Ok((fine, vals))
        }
    }
}

/// `υ_{m+1} − u_0 − ∫_{t0}^{t_{m+1}} L(f)`, `m = 0..M−1`.
pub fn residual_integrals<T: Scalar>(rhs: &dyn SplitRhs<T>, level: &IdcLevelResult<T>, mode: ResidualMode) -> Result<Vec<Vec<T>>> {
    let (qn, qv) = quadrature_data(rhs, level, mode)?;
    let u0 = &level.values[0];
    (0..level.nodes.m)
        .map(|m| {
            let integral = polyint::partial_integral(&qn, &qv, level.nodes.node(m + 1))?;
            Ok(level.values[m + 1].iter().zip(u0).zip(&integral).map(|((&v, &a), &i)| v - a - i).collect())
        })
        .collect()
}

struct StageData<T> {
    /// `u0 + ∫ L(f)` (integral form) or `υ(t)` (additive form)
    base: Vec<T>,
    /// `f_ν(t, υ(t))`
    f_ups: Vec<Vec<T>>,
    /// `ε(t) / Λ`, additive form only
    source: Option<Vec<T>>,
}

/// The error equation of one correction sweep, posed as a split problem.
pub struct ErrorProblem<'a, T: Scalar> {
    rhs: &'a dyn SplitRhs<T>,
    level: &'a IdcLevelResult<T>,
    quad_nodes: UniformNodeSet,
    quad_values: Vec<Vec<T>>,
    additive: bool,
    cache: Mutex<HashMap<i64, Arc<StageData<T>>>>,
}

impl<'a, T: Scalar> ErrorProblem<'a, T> {
    pub fn new(rhs: &'a dyn SplitRhs<T>, level: &'a IdcLevelResult<T>, cfg: &IdcConfig) -> Result<Self> {
        let (quad_nodes, quad_values) = quadrature_data(rhs, level, cfg.residual_mode)?;
        Ok(ErrorProblem { rhs, level, quad_nodes, quad_values, additive: cfg.additive_residual, cache: Mutex::new(HashMap::new()) })
    }

    /// Node index when `t` is a node up to rounding.
    fn node_index(&self, t: f64) -> Option<usize> {
        let s = self.level.nodes.unit(t);
        let r = s.round();
        ((s - r).abs() < 1e-9 && r >= 0.0 && r <= self.level.nodes.m as f64).then_some(r as usize)
    }

    fn stage(&self, t: f64) -> Result<Arc<StageData<T>>> {
        let s = self.level.nodes.unit(t);
        let node = self.node_index(t);
        let key = match node {
            Some(j) => (j as i64) << 24,
            None => (s * (1u64 << 24) as f64).round() as i64,
        };
        if let Some(d) = self.cache.lock().unwrap().get(&key) {
            return Ok(d.clone());
        }
        let data = Arc::new(self.build_stage(t, node)?);
        self.cache.lock().unwrap().insert(key, data.clone());
        Ok(data)
    }

    fn build_stage(&self, t: f64, node: Option<usize>) -> Result<StageData<T>> {
        let level = self.level;
        let lam = self.rhs.num_operators();
        let (ups, f_ups) = match node {
            Some(j) => (level.values[j].clone(), level.rhs_values.iter().map(|op| op[j].clone()).collect()),
            None => {
                let u = polyint::lagrange_eval(&level.nodes, &level.values, t)?;
                let f = (0..lam)
                    .map(|op| {
                        let mut out = vec![T::zero(); u.len()];
                        self.rhs.eval(op, t, &u, &mut out)?;
                        Ok(out)
                    })
                    .collect::<Result<Vec<_>>>()?;
                (u, f)
            }
        };
        if self.additive {
            let lf = polyint::lagrange_eval(&self.quad_nodes, &self.quad_values, t)?;
            let du = polyint::lagrange_derivative(&level.nodes, &level.values, t)?;
            let w = T::from_real(1.0 / lam as f64);
            let source = lf.iter().zip(&du).map(|(&a, &b)| (a - b) * w).collect();
            Ok(StageData { base: ups, f_ups, source: Some(source) })
        } else {
            let t_eval = node.map_or(t, |j| level.nodes.node(j));
            let integral = polyint::partial_integral(&self.quad_nodes, &self.quad_values, t_eval)?;
            let base = level.values[0].iter().zip(&integral).map(|(&a, &b)| a + b).collect();
            Ok(StageData { base, f_ups, source: None })
        }
    }

    /// Map from the error variable at node `j` back to the solution.
    fn base_at_node(&self, j: usize) -> Result<Vec<T>> {
        Ok(self.stage(self.level.nodes.node(j))?.base.clone())
    }
}

impl<T: Scalar> SplitRhs<T> for ErrorProblem<'_, T> {
    fn dim(&self) -> usize {
        self.rhs.dim()
    }

    fn num_operators(&self) -> usize {
        self.rhs.num_operators()
    }

    fn eval(&self, op: usize, t: f64, q: &[T], out: &mut [T]) -> Result<()> {
        let st = self.stage(t)?;
        let x: Vec<T> = st.base.iter().zip(q).map(|(&b, &v)| b + v).collect();
        self.rhs.eval(op, t, &x, out)?;
        for (o, f) in out.iter_mut().zip(&st.f_ups[op]) {
            *o -= *f;
        }
        if let Some(src) = &st.source {
            for (o, s) in out.iter_mut().zip(src) {
                *o += *s;
            }
        }
        Ok(())
    }

    fn jacobian(&self, op: usize, t: f64, q: &[T]) -> Option<DenseMatrix<T>> {
        let st = self.stage(t).ok()?;
        let x: Vec<T> = st.base.iter().zip(q).map(|(&b, &v)| b + v).collect();
        self.rhs.jacobian(op, t, &x)
    }

    fn solve_implicit(&self, op: usize, t: f64, gamma: f64, rhs: &[T], q: &mut [T], cfg: &NewtonConfig) -> Result<()> {
        let st = self.stage(t)?;
        let g = T::from_real(gamma);
        let mut b: Vec<T> = rhs.iter().zip(&st.base).zip(&st.f_ups[op]).map(|((&r, &base), &f)| r + base - g * f).collect();
        if let Some(src) = &st.source {
            for (bi, s) in b.iter_mut().zip(src) {
                *bi += g * *s;
            }
        }
        let mut x: Vec<T> = st.base.iter().zip(q.iter()).map(|(&base, &v)| base + v).collect();
        self.rhs.solve_implicit(op, t, gamma, &b, &mut x, cfg)?;
        for ((qi, xi), base) in q.iter_mut().zip(&x).zip(&st.base) {
            *qi = *xi - *base;
        }
        Ok(())
    }
}

/// One correction sweep applied to `level`.
pub fn correct_once<T: Scalar>(
    rhs: &dyn SplitRhs<T>,
    level: &IdcLevelResult<T>,
    sweep: usize,
    cfg: &IdcConfig,
    corrector: &dyn Stepper<T>,
) -> Result<IdcLevelResult<T>> {
    if sweep == 0 {
        return Err(Error::usage("correction sweeps are numbered from 1"));
    }
    let ep = ErrorProblem::new(rhs, level, cfg)?;
    let nodes = level.nodes;
    let wrap = |node: usize, e: Error| Error::Idc { interval: 0, sweep, node, source: Box::new(e) };
    let mut q = vec![T::zero(); rhs.dim()];
    let mut values = Vec::with_capacity(nodes.m + 1);
    values.push(level.values[0].clone());
    for m in 0..nodes.m {
        q = corrector.step(&ep, nodes.node(m), nodes.h, &q).map_err(|e| wrap(m, e))?;
        let base = ep.base_at_node(m + 1).map_err(|e| wrap(m, e))?;
        values.push(base.iter().zip(&q).map(|(&b, &v)| b + v).collect());
    }
    drop(ep);
    IdcLevelResult::build(rhs, nodes, values)
}

/// Prediction plus all correction sweeps on `[t0, t0 + big_h]`.
pub fn idc_macro_step<T: Scalar>(
    rhs: &dyn SplitRhs<T>,
    t0: f64,
    big_h: f64,
    u0: &[T],
    cfg: &IdcConfig,
    predictor: &dyn Stepper<T>,
    correctors: &[&dyn Stepper<T>],
) -> Result<IdcLevelResult<T>> {
    let nodes = UniformNodeSet::over(t0, big_h, cfg.m)?;
    let mut level = predict(rhs, nodes, u0, predictor)?;
    for k in 1..=cfg.corrections {
        let corrector = correctors[(k - 1).min(correctors.len() - 1)];
        level = correct_once(rhs, &level, k, cfg, corrector)?;
    }
    Ok(level)
}

fn check_orders<T: Scalar>(cfg: &IdcConfig, predictor: &dyn Stepper<T>, correctors: &[&dyn Stepper<T>]) {
    let sum = predictor.order() + (1..=cfg.corrections).map(|k| correctors[(k - 1).min(correctors.len() - 1)].order()).sum::<usize>();
    if sum > cfg.m + 1 {
        log::warn!("order sum {sum} exceeds M + 1 = {}; the order will saturate", cfg.m + 1);
    }
}

/// Runs IDC over `n_macro` equal macro intervals and returns the final
/// state. `observer` sees `(interval, t, state)` after every macro step.
pub fn idc_march_with<T: Scalar>(
    ivp: &SplitIvp<'_, T>,
    n_macro: usize,
    cfg: &IdcConfig,
    predictor: &dyn Stepper<T>,
    correctors: &[&dyn Stepper<T>],
    observer: &mut dyn FnMut(usize, f64, &[T]) -> Result<()>,
) -> Result<Vec<T>> {
    cfg.validate()?;
    if n_macro == 0 {
        return Err(Error::usage("need at least one macro step"));
    }
    if cfg.corrections > 0 && correctors.is_empty() {
        return Err(Error::usage("no corrector supplied"));
    }
    check_orders(cfg, predictor, correctors);
    let big_h = (ivp.t_end - ivp.t0) / n_macro as f64;
    let mut u = ivp.initial_state.clone();
    for n in 0..n_macro {
        let t0 = ivp.t0 + n as f64 * big_h;
        let level = idc_macro_step(ivp.rhs, t0, big_h, &u, cfg, predictor, correctors).map_err(|e| match e {
            Error::Idc { sweep, node, source, .. } => Error::Idc { interval: n, sweep, node, source },
            other => Error::Idc { interval: n, sweep: 0, node: 0, source: Box::new(other) },
        })?;
        u = level.last().to_vec();
        let t1 = if n + 1 == n_macro { ivp.t_end } else { ivp.t0 + (n + 1) as f64 * big_h };
        observer(n, t1, &u)?;
    }
    Ok(u)
}

/// Runs IDC over `n_macro` equal macro intervals with custom steppers.
/// Returns the solution at the macro nodes.
pub fn idc_solve_with<T: Scalar>(
    ivp: &SplitIvp<'_, T>,
    n_macro: usize,
    cfg: &IdcConfig,
    predictor: &dyn Stepper<T>,
    correctors: &[&dyn Stepper<T>],
) -> Result<Trajectory<T>> {
    let mut traj = Trajectory::new();
    traj.push(ivp.t0, ivp.initial_state.clone());
    idc_march_with(ivp, n_macro, cfg, predictor, correctors, &mut |_, t, u| {
        traj.push(t, u.to_vec());
        Ok(())
    })?;
    Ok(traj)
}

/// Runs IDC with the steppers named in `cfg`.
pub fn idc_solve<T: Scalar>(ivp: &SplitIvp<'_, T>, n_macro: usize, cfg: &IdcConfig) -> Result<Trajectory<T>> {
    let predictor = SchemeStepper { scheme: cfg.predictor, newton: cfg.newton };
    let correctors: Vec<SchemeStepper> =
        (1..=cfg.corrections.max(1)).map(|k| SchemeStepper { scheme: cfg.corrector(k), newton: cfg.newton }).collect();
    let refs: Vec<&dyn Stepper<T>> = correctors.iter().map(|c| c as &dyn Stepper<T>).collect();
    idc_solve_with(ivp, n_macro, cfg, &predictor, &refs)
}
