use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::profile::SmoothnessProfile;
use super::schedule::BatchSchedule;
use super::trace::{Recorder, RunTrace, Stage};
use crate::data::{make_block_partition, Budget, Environment};
use crate::error::{Error, Result};
use crate::estimators::{exploitation_gradient, exploration_gradient, loss_derivative};
use crate::metrics::Evaluator;
use crate::sparse::{hard_threshold, restricted_dot, support, DenseVector, SupportSet};

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("step size {eta}")))
    }
}

fn check_setup(theta0: &DenseVector, budget: &Budget, env: &Environment<'_>) -> Result<()> {
    budget.validate()?;
    if theta0.len() != budget.d || env.dim() != budget.d {
        return Err(Error::DimensionMismatch {
            expected: budget.d,
            found: if theta0.len() != budget.d { theta0.len() } else { env.dim() },
        });
    }
    if env.ledger().limit() != budget.s_prime {
        return Err(Error::InvalidParameter(format!(
            "ledger limit {} differs from s' = {}",
            env.ledger().limit(),
            budget.s_prime
        )));
    }
    Ok(())
}

fn check_iterations(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidParameter("iteration count must be at least 1".into()));
    }
    Ok(())
}

/// Shared state of one run: the recorder plus per-schedule step counters.
struct Stepper<'e> {
    rec: Recorder<'e>,
    explore_steps: usize,
    exploit_steps: usize,
}

fn exploration_stage(
    theta0: &DenseVector,
    eta: f64,
    budget: &Budget,
    schedule: &BatchSchedule,
    iterations: usize,
    round: Option<usize>,
    env: &mut Environment<'_>,
    st: &mut Stepper<'_>,
) -> Result<DenseVector> {
    let part = make_block_partition(budget.d, budget.block_width())?;
    let mut theta = hard_threshold(theta0, budget.s)?;
    for _ in 0..iterations {
        let b = schedule.size(st.explore_steps, round)?;
        st.explore_steps += 1;
        let est = exploration_gradient(&theta, &part, b, env)?;
        theta = hard_threshold(&theta.axpy_step(eta, &est.g)?, budget.s)?;
        assert!(theta.nnz() <= budget.s, "sparsity invariant");
        st.rec
            .update(&theta, env.ledger(), Stage::Explore, round.unwrap_or(0), b)?;
    }
    st.rec.end_stage(&theta, Stage::Explore, round.unwrap_or(0));
    Ok(theta)
}

fn exploitation_stage(
    theta0: &DenseVector,
    eta: f64,
    schedule: &BatchSchedule,
    iterations: usize,
    round: Option<usize>,
    env: &mut Environment<'_>,
    st: &mut Stepper<'_>,
) -> Result<DenseVector> {
    let s0 = support(theta0);
    if s0.len() > env.ledger().limit() {
        return Err(Error::SupportTooLarge {
            size: s0.len(),
            limit: env.ledger().limit(),
        });
    }
    let mut theta = theta0.clone();
    for _ in 0..iterations {
        let b = schedule.size(st.exploit_steps, round)?;
        st.exploit_steps += 1;
        let est = exploitation_gradient(&theta, &s0, b, env)?;
        theta = theta.axpy_step(eta, &est.g)?;
        assert!(support(&theta).is_subset_of(&s0), "support confinement");
        st.rec
            .update(&theta, env.ledger(), Stage::Exploit, round.unwrap_or(0), b)?;
    }
    st.rec.end_stage(&theta, Stage::Exploit, round.unwrap_or(0));
    Ok(theta)
}

fn start<'e>(
    theta0: &DenseVector,
    env: &Environment<'_>,
    evaluator: Option<&'e Evaluator>,
) -> Result<Stepper<'e>> {
    let mut rec = Recorder::new(evaluator);
    rec.initial(theta0, env.ledger())?;
    Ok(Stepper {
        rec,
        explore_steps: 0,
        exploit_steps: 0,
    })
}

/// Hard-thresholded gradient descent with block-wise exploration of all
/// coordinates. `theta0` is thresholded to `s` entries first.
pub fn run_exploration(
    theta0: &DenseVector,
    eta: f64,
    budget: &Budget,
    schedule: &BatchSchedule,
    iterations: usize,
    env: &mut Environment<'_>,
    evaluator: Option<&Evaluator>,
) -> Result<(DenseVector, RunTrace)> {
    check_eta(eta)?;
    check_setup(theta0, budget, env)?;
    check_iterations(iterations)?;
    schedule.validate()?;
    let mut st = start(theta0, env, evaluator)?;
    let theta = exploration_stage(theta0, eta, budget, schedule, iterations, None, env, &mut st)?;
    let trace = st.rec.finish(&theta)?;
    Ok((theta, trace))
}

/// Plain stochastic gradient descent confined to `supp(theta0)`.
pub fn run_exploitation(
    theta0: &DenseVector,
    eta: f64,
    schedule: &BatchSchedule,
    iterations: usize,
    env: &mut Environment<'_>,
    evaluator: Option<&Evaluator>,
) -> Result<(DenseVector, RunTrace)> {
    check_eta(eta)?;
    check_iterations(iterations)?;
    if theta0.len() != env.dim() {
        return Err(Error::DimensionMismatch {
            expected: env.dim(),
            found: theta0.len(),
        });
    }
    schedule.validate()?;
    let mut st = start(theta0, env, evaluator)?;
    let theta = exploitation_stage(theta0, eta, schedule, iterations, None, env, &mut st)?;
    let trace = st.rec.finish(&theta)?;
    Ok((theta, trace))
}

#[derive(Clone, Debug)]
pub struct HybridConfig {
    pub rounds: usize,
    pub t_minus: usize,
    pub t_k: usize,
    pub explore_schedule: BatchSchedule,
    pub exploit_schedule: BatchSchedule,
    pub eta: f64,
    pub budget: Budget,
    pub profile: SmoothnessProfile,
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.t_minus == 0 || self.t_k == 0 {
            return Err(Error::InvalidParameter(
                "rounds and inner lengths must be at least 1".into(),
            ));
        }
        check_eta(self.eta)?;
        self.budget.validate()?;
        self.explore_schedule.validate()?;
        self.exploit_schedule.validate()
    }
}

/// Alternates `t_minus` exploration updates with `t_k` exploitation updates
/// on the support just found, for `rounds` rounds.
pub fn run_hybrid(
    theta0: &DenseVector,
    config: &HybridConfig,
    env: &mut Environment<'_>,
    evaluator: Option<&Evaluator>,
) -> Result<(DenseVector, RunTrace)> {
    config.validate()?;
    check_setup(theta0, &config.budget, env)?;
    let mut st = start(theta0, env, evaluator)?;
    let mut theta = theta0.clone();
    for k in 1..=config.rounds {
        let explored = exploration_stage(
            &theta,
            config.eta,
            &config.budget,
            &config.explore_schedule,
            config.t_minus,
            Some(k),
            env,
            &mut st,
        )?;
        theta = exploitation_stage(
            &explored,
            config.eta,
            &config.exploit_schedule,
            config.t_k,
            Some(k),
            env,
            &mut st,
        )?;
    }
    let trace = st.rec.finish(&theta)?;
    Ok((theta, trace))
}

/// Step size as a function of the 1-based update index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepSize {
    Constant { eta: f64 },
    /// `eta0 / sqrt(t)`
    InverseSqrt { eta0: f64 },
    /// `eta0 * t0 / (t0 + t)`
    InverseTime { eta0: f64, t0: f64 },
}

impl StepSize {
    pub fn at(&self, t: usize) -> f64 {
        let t = t as f64;
        match *self {
            StepSize::Constant { eta } => eta,
            StepSize::InverseSqrt { eta0 } => eta0 / t.sqrt(),
            StepSize::InverseTime { eta0, t0 } => eta0 * t0 / (t0 + t),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            StepSize::Constant { eta } | StepSize::InverseSqrt { eta0: eta } => check_eta(eta),
            StepSize::InverseTime { eta0, t0 } => {
                check_eta(eta0)?;
                check_eta(t0)
            }
        }
    }
}

/// Single-example IHT with a random attribute subset and the importance
/// weight `d / (s' - s)`. Each update draws the subset, then the example.
pub fn run_naive_exploration(
    theta0: &DenseVector,
    step: StepSize,
    budget: &Budget,
    iterations: usize,
    env: &mut Environment<'_>,
    evaluator: Option<&Evaluator>,
) -> Result<(DenseVector, RunTrace)> {
    step.validate()?;
    check_setup(theta0, budget, env)?;
    check_iterations(iterations)?;
    let d = budget.d;
    let w = budget.block_width();
    let scale = d as f64 / w as f64;
    let mut rec = Recorder::new(evaluator);
    rec.initial(theta0, env.ledger())?;
    let mut theta = hard_threshold(theta0, budget.s)?;
    for t in 1..=iterations {
        let s_prev = support(&theta);
        let subset = SupportSet::from_unsorted(sample(env.rng_mut(), d, w).into_vec(), d)?;
        let mut ex = env.draw();
        let obs = env.observe(&mut ex, &s_prev.union(&subset))?;
        let r = loss_derivative(restricted_dot(&theta, &obs, &s_prev)?, ex.y());
        let mut g = vec![0.0; d];
        for j in subset.iter() {
            g[j] = r * scale * obs.get(j).ok_or(Error::MissingCoordinate(j))?;
        }
        theta = hard_threshold(&theta.axpy_step(step.at(t), &DenseVector::new(g)?)?, budget.s)?;
        assert!(theta.nnz() <= budget.s, "sparsity invariant");
        rec.update(&theta, env.ledger(), Stage::Explore, 0, 1)?;
    }
    rec.end_stage(&theta, Stage::Explore, 0);
    let trace = rec.finish(&theta)?;
    Ok((theta, trace))
}
