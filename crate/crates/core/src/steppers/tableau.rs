//! Additive Runge-Kutta tableaux and the generic diagonally implicit ARK
//! stepper. Each splitting scheme in this crate has an equivalent tableau,
//! which is how the deferred-correction theory applies to it.

use crate::error::{Error, Result};
use crate::ode::{Scalar, SplitRhs};
use crate::steppers::newton::NewtonConfig;

/// Coefficients `(a, b, c)` attached to one operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCoefficients {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableauArk {
    pub stages: usize,
    pub operators: Vec<OperatorCoefficients>,
}

impl ButcherTableauArk {
    pub fn new(operators: Vec<OperatorCoefficients>) -> Result<Self> {
        let stages = operators.first().map_or(0, |o| o.b.len());
        let t = ButcherTableauArk { stages, operators };
        t.validate()?;
        Ok(t)
    }

    pub fn num_operators(&self) -> usize {
        self.operators.len()
    }

    /// Shape checks plus the structural requirement of [`ark_step`]: no
    /// coupling to later stages and at most one implicit operator per stage.
    pub fn validate(&self) -> Result<()> {
        let p = self.stages;
        if p == 0 || self.operators.is_empty() {
            return Err(Error::usage("empty tableau"));
        }
        for (nu, op) in self.operators.iter().enumerate() {
            if op.b.len() != p || op.c.len() != p || op.a.len() != p || op.a.iter().any(|r| r.len() != p) {
                return Err(Error::usage(format!("tableau for operator {nu} is not {p}-stage")));
            }
        }
        for i in 0..p {
            for op in &self.operators {
                if op.a[i][i + 1..].iter().any(|&v| v != 0.0) {
                    return Err(Error::Unsupported(format!("stage {i} couples to a later stage")));
                }
            }
            let implicit = self.operators.iter().filter(|op| op.a[i][i] != 0.0).count();
            if implicit > 1 {
                return Err(Error::Unsupported(format!("stage {i} is implicit in {implicit} operators")));
            }
        }
        Ok(())
    }

    /// Lie-Trotter with backward Euler sub-steps, `Λ + 1` stages: the first
    /// stage is the initial value, stage `ν + 1` ends the `ν`-th sub-step.
    pub fn lie_trotter(num_operators: usize) -> Self {
        let p = num_operators + 1;
        let mut c = vec![1.0; p];
        c[0] = 0.0;
        let operators = (0..num_operators)
            .map(|nu| {
                let mut a = vec![vec![0.0; p]; p];
                for row in a.iter_mut().skip(nu + 1) {
                    row[nu + 1] = 1.0;
                }
                let b = a[p - 1].clone();
                OperatorCoefficients { a, b, c: c.clone() }
            })
            .collect();
        ButcherTableauArk::new(operators).expect("lie-trotter tableau is well formed")
    }

    /// Strang splitting with trapezoidal sub-steps for three operators
    /// (six stages).
    pub fn strang3() -> Self {
        let q = 0.25;
        let h = 0.5;
        let a1 = vec![
            vec![0.0; 6],
            vec![q, q, 0.0, 0.0, 0.0, 0.0],
            vec![q, q, 0.0, 0.0, 0.0, 0.0],
            vec![q, q, 0.0, 0.0, 0.0, 0.0],
            vec![q, q, 0.0, 0.0, 0.0, 0.0],
            vec![q, q, 0.0, 0.0, q, q],
        ];
        let a2 = vec![
            vec![0.0; 6],
            vec![0.0; 6],
            vec![0.0, q, q, 0.0, 0.0, 0.0],
            vec![0.0, q, q, 0.0, 0.0, 0.0],
            vec![0.0, q, q, q, q, 0.0],
            vec![0.0, q, q, q, q, 0.0],
        ];
        let a3 = vec![
            vec![0.0; 6],
            vec![0.0; 6],
            vec![0.0; 6],
            vec![0.0, 0.0, h, h, 0.0, 0.0],
            vec![0.0, 0.0, h, h, 0.0, 0.0],
            vec![0.0, 0.0, h, h, 0.0, 0.0],
        ];
        let c1 = vec![0.0, 0.5, 0.0, 0.0, 0.5, 1.0];
        let c2 = vec![0.0, 0.5, 1.0, 0.0, 0.5, 0.0];
        let c3 = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let op = |a: Vec<Vec<f64>>, c| OperatorCoefficients { b: a[5].clone(), a, c };
        ButcherTableauArk::new(vec![op(a1, c1), op(a2, c2), op(a3, c3)]).expect("strang tableau is well formed")
    }

    /// Strang splitting for two operators (five stages). The two middle
    /// half-steps of the second operator share stage 3, so this tableau
    /// matches the step exactly only for autonomous operators.
    pub fn strang2() -> Self {
        let q = 0.25;
        let a1 = vec![vec![0.0; 5], vec![q, q, 0.0, 0.0, 0.0], vec![q, q, 0.0, 0.0, 0.0], vec![q, q, 0.0, 0.0, 0.0], vec![q, q, 0.0, q, q]];
        let a2 = vec![vec![0.0; 5], vec![0.0; 5], vec![0.0, q, q, 0.0, 0.0], vec![0.0, q, 2.0 * q, q, 0.0], vec![0.0, q, 2.0 * q, q, 0.0]];
        let c1 = vec![0.0, 0.5, 0.0, 0.5, 1.0];
        let c2 = vec![0.0, 0.5, 1.0, 0.5, 0.0];
        let op = |a: Vec<Vec<f64>>, c| OperatorCoefficients { b: a[4].clone(), a, c };
        ButcherTableauArk::new(vec![op(a1, c1), op(a2, c2)]).expect("strang tableau is well formed")
    }

    /// Peaceman-Rachford ADI (three stages).
    pub fn adi() -> Self {
        let c = vec![0.0, 0.5, 1.0];
        let a1 = vec![vec![0.0; 3], vec![0.0, 0.5, 0.0], vec![0.0, 1.0, 0.0]];
        let a2 = vec![vec![0.0; 3], vec![0.5, 0.0, 0.0], vec![0.5, 0.0, 0.5]];
        let op = |a: Vec<Vec<f64>>, c: &Vec<f64>| OperatorCoefficients { b: a[2].clone(), a, c: c.clone() };
        ButcherTableauArk::new(vec![op(a1, &c), op(a2, &c)]).expect("adi tableau is well formed")
    }
}

/// One step of a diagonally implicit ARK method. Stages are solved in order;
/// an implicit stage inverts its single implicit operator with the problem's
/// implicit solver, seeded with the previous stage value.
pub fn ark_step<T: Scalar>(
    tableau: &ButcherTableauArk,
    rhs: &dyn SplitRhs<T>,
    t: f64,
    dt: f64,
    u: &[T],
    newton: &NewtonConfig,
) -> Result<Vec<T>> {
    tableau.validate()?;
    if tableau.num_operators() != rhs.num_operators() {
        return Err(Error::usage(format!("tableau has {} operators, problem has {}", tableau.num_operators(), rhs.num_operators())));
    }
    let p = tableau.stages;
    let n = u.len();
    let lam = tableau.num_operators();
    let mut stages: Vec<Vec<T>> = Vec::with_capacity(p);
    let mut fvals: Vec<Vec<Option<Vec<T>>>> = vec![vec![None; p]; lam];

    // f_ν at stage j, evaluated once on first use
    fn stage_f<T: Scalar>(
        cache: &mut [Vec<Option<Vec<T>>>],
        rhs: &dyn SplitRhs<T>,
        tab: &ButcherTableauArk,
        stages: &[Vec<T>],
        nu: usize,
        j: usize,
        t: f64,
        dt: f64,
    ) -> Result<()> {
        if cache[nu][j].is_none() {
            let mut out = vec![T::zero(); stages[j].len()];
            rhs.eval(nu, t + tab.operators[nu].c[j] * dt, &stages[j], &mut out)?;
            cache[nu][j] = Some(out);
        }
        Ok(())
    }

    for i in 0..p {
        let mut acc = u.to_vec();
        for nu in 0..lam {
            for j in 0..i {
                let a = tableau.operators[nu].a[i][j];
                if a != 0.0 {
                    stage_f(&mut fvals, rhs, tableau, &stages, nu, j, t, dt)?;
                    let f = fvals[nu][j].as_ref().unwrap();
                    let w = T::from_real(dt * a);
                    for k in 0..n {
                        acc[k] += w * f[k];
                    }
                }
            }
        }
        let implicit = (0..lam).find(|&nu| tableau.operators[nu].a[i][i] != 0.0);
        let value = match implicit {
            Some(nu) => {
                let gamma = dt * tableau.operators[nu].a[i][i];
                let mut x = stages.last().cloned().unwrap_or_else(|| u.to_vec());
                let ts = t + tableau.operators[nu].c[i] * dt;
                rhs.solve_implicit(nu, ts, gamma, &acc, &mut x, newton)?;
                x
            }
            None => acc,
        };
        stages.push(value);
    }

    let mut out = u.to_vec();
    for nu in 0..lam {
        for i in 0..p {
            let b = tableau.operators[nu].b[i];
            if b != 0.0 {
                stage_f(&mut fvals, rhs, tableau, &stages, nu, i, t, dt)?;
                let f = fvals[nu][i].as_ref().unwrap();
                let w = T::from_real(dt * b);
                for k in 0..n {
                    out[k] += w * f[k];
                }
            }
        }
    }
    Ok(out)
}
