use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::aggregate::{aggregate, write_aggregate};
use super::config::{Algorithm, DataSection, ExperimentConfig, Law, ScheduleKind, ScheduleSection, StepKind};
use crate::data::{
    load_csv_dataset, trial_rng, Budget, Environment, ObservationLedger, ProblemInstance, Rows,
    SyntheticSpec, TargetColumn, TEST_STREAM, TRAIN_STREAM,
};
use crate::error::{Error, Result};
use crate::metrics::{exact_excess_risk, test_mse, Evaluator};
use crate::optim::{
    contraction_diagnostics, hybrid_inner_length, run_exploitation, run_exploration, run_hybrid,
    run_naive_exploration, validate_parameters, BatchSchedule, ConstraintReport, HybridConfig,
    RunTrace, SmoothnessProfile, StepSize, TheoryBound, TheoryInputs,
};
use crate::sparse::DenseVector;

/// RNG stream used to estimate smoothness constants on finite data.
const PROFILE_STREAM: u64 = 2;

/// A config resolved against its data: everything a trial needs.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub hash: String,
    pub instance: ProblemInstance,
    /// Budget the algorithm runs under (`s' = d` for full information).
    pub budget: Budget,
    pub profile: SmoothnessProfile,
    pub eta: f64,
    pub theta0: DenseVector,
    /// Risk gap at `theta0` used by theory schedules.
    pub gap0: f64,
}

fn data_err(e: Error) -> Error {
    match e {
        Error::Data(_) => e,
        other => Error::Data(other.to_string()),
    }
}

fn build_instance(cfg: &ExperimentConfig) -> Result<ProblemInstance> {
    match &cfg.data {
        DataSection::Synthetic {
            d,
            s_star,
            amplitude,
            sigma,
            law,
            uniform_bound,
            rows,
        } => {
            let spec = SyntheticSpec {
                d: *d,
                s_star: *s_star,
                amplitude: *amplitude,
                sigma: *sigma,
                uniform_bound: match law {
                    Law::Normal => None,
                    Law::Uniform => *uniform_bound,
                },
            };
            match rows {
                None => spec.build(),
                Some(n) => spec.build_finite(*n, cfg.experiment.base_seed),
            }
        }
        DataSection::Csv {
            path,
            target,
            split_ratio,
            split_seed,
            standardize,
        } => {
            let ds = load_csv_dataset(
                path,
                &TargetColumn::parse(target),
                *split_ratio,
                *split_seed,
                *standardize,
            )
            .map_err(data_err)?;
            Ok(ProblemInstance::from_dataset(Arc::new(ds)))
        }
    }
}

fn held_out(inst: &ProblemInstance, cfg: &ExperimentConfig, trial: u64) -> Rows {
    inst.test_rows(
        cfg.experiment.test_size,
        &mut trial_rng(cfg.experiment.base_seed, trial, TEST_STREAM),
    )
}


pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let instance = build_instance(config)?;
    let d = instance.dim();
    let mut budget = config.budget()?;
    budget.d = d;
    budget
        .validate()
        .map_err(|e| Error::Config(format!("[budget] {e} (data has d = {d})")))?;

    let p = &config.profile;
    let base = match instance.covariance() {
        Some(cov) => SmoothnessProfile::from_covariance(cov, instance.r_inf())?,
        None => {
            let rows = instance
                .dataset()
                .map(|ds| ds.train().clone())
                .expect("finite data without covariance");
            let mut rng = trial_rng(config.experiment.base_seed, 0, PROFILE_STREAM);
            SmoothnessProfile::estimate_from_rows(&rows, budget.s, p.estimate_draws, &mut rng)
                .map_err(data_err)?
        }
    };
    let l_s = p.l_s.unwrap_or(base.l_s);
    let mu_s = p.mu_s.unwrap_or(base.mu_s);
    let profile = match p.alpha_check {
        Some(a) => SmoothnessProfile::with_alpha(l_s, mu_s, base.r_inf, a),
        None if p.l_s.is_none() && p.mu_s.is_none() => Ok(base),
        None => SmoothnessProfile::new(l_s, mu_s, base.r_inf),
    }
    .map_err(|e| Error::Config(format!("[profile] {e}")))?;
    let eta = config.optimizer.eta.unwrap_or_else(|| profile.default_eta());

    if config.optimizer.init_support.iter().any(|&j| j == 0 || j > d) {
        return Err(Error::Config("[optimizer] init_support out of range".into()));
    }
    let entries: Vec<(usize, f64)> = config
        .optimizer
        .init_support
        .iter()
        .map(|&j| (j - 1, config.optimizer.init_value))
        .collect();
    let theta0 = DenseVector::from_entries(d, &entries)?;

    let gap0 = match exact_excess_risk(&theta0, &instance)? {
        Some(g) => g,
        None => {
            let rows = held_out(&instance, config, 0);
            test_mse(&theta0, &rows, d).map_err(data_err)?
        }
    };
    if config.experiment.algorithm == Algorithm::FullInfo {
        budget = budget.full_information();
    }
    Ok(Prepared {
        config: config.clone(),
        hash: config.hash(),
        instance,
        budget,
        profile,
        eta,
        theta0,
        gap0,
    })
}

impl Prepared {
    fn schedule(&self, sec: &ScheduleSection, bound: TheoryBound, horizon: usize) -> Result<BatchSchedule> {
        let s = match sec.kind {
            ScheduleKind::Constant => BatchSchedule::Constant(sec.size.unwrap_or(1)),
            ScheduleKind::Geometric => BatchSchedule::Geometric {
                base: sec.base.unwrap_or(1.0),
                ratio: sec.ratio.unwrap_or(1.0),
            },
            ScheduleKind::Theory => {
                let sigma = match (sec.sigma, self.instance.theta_star()) {
                    (Some(v), _) => v,
                    (None, Some(_)) => self.instance.sigma(),
                    (None, None) => {
                        return Err(Error::Config(
                            "[schedule] theory batches on csv data need sigma".into(),
                        ))
                    }
                };
                let gap = sec.gap.unwrap_or(self.gap0);
                if !(gap > 0.0) {
                    return Err(Error::Config(
                        "[schedule] the starting risk gap is zero; set gap explicitly".into(),
                    ));
                }
                BatchSchedule::Theory {
                    profile: self.profile,
                    budget: self.budget,
                    inputs: TheoryInputs {
                        bound,
                        horizon,
                        stage: None,
                        gap,
                        delta: sec.delta,
                        sigma,
                        c_b: sec.c_b,
                        r_override: sec.r_effective,
                    },
                }
            }
        };
        s.validate().map_err(|e| Error::Config(format!("[schedule] {e}")))?;
        Ok(s)
    }

    pub fn exploitation_length(&self) -> usize {
        let o = &self.config.optimizer;
        o.t_k
            .unwrap_or_else(|| hybrid_inner_length(&self.profile, &self.budget, o.c_t))
    }

    pub fn hybrid_config(&self) -> Result<HybridConfig> {
        let o = &self.config.optimizer;
        let t_k = self.exploitation_length();
        Ok(HybridConfig {
            rounds: o.rounds.unwrap_or(1),
            t_minus: o.t_minus,
            t_k,
            explore_schedule: self.schedule(&self.config.schedule, TheoryBound::Exploration, o.t_minus)?,
            exploit_schedule: self.schedule(self.config.exploit_schedule(), TheoryBound::Exploitation, t_k)?,
            eta: self.eta,
            budget: self.budget,
            profile: self.profile,
        })
    }

    fn iterations(&self) -> usize {
        self.config.optimizer.iterations.unwrap_or(1)
    }

    /// Parameter report for the first exploration update, with `delta / (2T)`.
    pub fn constraint_report(&self) -> Result<ConstraintReport> {
        let sec = &self.config.schedule;
        let horizon = match self.config.experiment.algorithm {
            Algorithm::Hybrid => self.config.optimizer.t_minus,
            _ => self.iterations(),
        };
        let batch = match self.config.experiment.algorithm {
            Algorithm::Naive => 1,
            _ => self
                .schedule(sec, TheoryBound::Exploration, horizon)?
                .size(0, None)?,
        };
        let mut profile = self.profile;
        if let Some(r) = sec.r_effective {
            profile.r_inf = r;
        }
        let delta_t = sec.delta / (2.0 * horizon as f64);
        Ok(validate_parameters(self.eta, &self.budget, &profile, batch, delta_t))
    }

    /// Runs one trial on its own random streams.
    pub fn run_trial(&self, trial: u64) -> Result<(RunTrace, ObservationLedger)> {
        let e = &self.config.experiment;
        let rows = held_out(&self.instance, &self.config, trial);
        let evaluator = Evaluator::new(&self.instance, rows, self.budget.s_prime, e.eval_every);
        let mut env = Environment::new(
            &self.instance,
            trial_rng(e.base_seed, trial, TRAIN_STREAM),
            ObservationLedger::new(self.budget.s_prime),
        );
        let t = self.iterations();
        let ev = Some(&evaluator);
        let (_, mut trace) = match e.algorithm {
            Algorithm::Exploration | Algorithm::FullInfo => {
                let sched = self.schedule(&self.config.schedule, TheoryBound::Exploration, t)?;
                run_exploration(&self.theta0, self.eta, &self.budget, &sched, t, &mut env, ev)?
            }
            Algorithm::Exploitation => {
                let sched = self.schedule(self.config.exploit_schedule(), TheoryBound::Exploitation, t)?;
                run_exploitation(&self.theta0, self.eta, &sched, t, &mut env, ev)?
            }
            Algorithm::Hybrid => run_hybrid(&self.theta0, &self.hybrid_config()?, &mut env, ev)?,
            Algorithm::Naive => {
                let o = &self.config.optimizer;
                let step = match o.step {
                    StepKind::Constant => StepSize::Constant { eta: self.eta },
                    StepKind::InverseSqrt => StepSize::InverseSqrt { eta0: self.eta },
                    StepKind::InverseTime => StepSize::InverseTime {
                        eta0: self.eta,
                        t0: o.step_t0,
                    },
                };
                run_naive_exploration(&self.theta0, step, &self.budget, t, &mut env, ev)?
            }
        };
        trace.seed = Some(e.base_seed.wrapping_add(trial));
        trace.config_hash = Some(self.hash.clone());
        let c = contraction_diagnostics(
            self.eta,
            &self.budget,
            &self.profile,
            self.instance.sigma(),
            self.config.schedule.delta / (2.0 * t as f64),
        );
        trace.predicted_alpha = (c.alpha > 0.0 && c.alpha < 1.0).then_some(c.alpha);
        Ok((trace, env.into_ledger()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial: u64,
    pub seed: u64,
    pub updates: usize,
    pub cum_examples: u64,
    pub cum_attribute_reads: u64,
    pub max_attributes_per_example: usize,
    pub final_test_mse: f64,
    pub final_excess_risk: Option<f64>,
    pub final_support_f1: Option<f64>,
    pub final_nnz: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub algorithm: String,
    pub config_hash: String,
    pub trials: usize,
    pub budget: Budget,
    pub eta: f64,
    pub profile: SmoothnessProfile,
    pub x_axis: String,
    pub mean_final_test_mse: f64,
    pub mean_final_excess_risk: Option<f64>,
    pub total_attribute_reads: u64,
    pub per_trial: Vec<TrialSummary>,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

pub fn trace_file_name(trial: u64) -> String {
    format!("trial_{trial:03}.csv")
}

fn write_file(path: &Path, f: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
    f(BufWriter::new(File::create(path)?))
}

/// Runs every trial and writes traces, the aggregate, a summary and the
/// resolved config into the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    let prepared = prepare(config)?;
    let e = &config.experiment;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(e.workers)
        .build()
        .map_err(|err| Error::Config(format!("worker pool: {err}")))?;
    let results: Vec<Result<(RunTrace, ObservationLedger)>> = pool.install(|| {
        (0..e.trials as u64)
            .into_par_iter()
            .map(|t| prepared.run_trial(t))
            .collect()
    });
    let results: Vec<(RunTrace, ObservationLedger)> = results.into_iter().collect::<Result<_>>()?;

    let dir = config.output_dir();
    fs::create_dir_all(&dir)?;
    let mut per_trial = Vec::new();
    for (i, (trace, ledger)) in results.iter().enumerate() {
        write_file(&dir.join(trace_file_name(i as u64)), |w| {
            trace.write_csv(i, e.timing, w)
        })?;
        let last = trace.last();
        let m = trace.final_metrics().expect("final record has metrics");
        per_trial.push(TrialSummary {
            trial: i as u64,
            seed: trace.seed.unwrap_or_default(),
            updates: last.update_index,
            cum_examples: last.cum_examples,
            cum_attribute_reads: last.cum_attribute_reads,
            max_attributes_per_example: ledger.max_per_example(),
            final_test_mse: m.test_mse,
            final_excess_risk: m.excess_risk,
            final_support_f1: m.support.map(|s| s.f1),
            final_nnz: last.nnz,
        });
    }
    let traces: Vec<RunTrace> = results.into_iter().map(|(t, _)| t).collect();
    write_file(&dir.join("aggregate.csv"), |w| write_aggregate(&aggregate(&traces), w))?;

    let n = per_trial.len() as f64;
    let excess: Option<Vec<f64>> = per_trial.iter().map(|t| t.final_excess_risk).collect();
    let summary = ExperimentSummary {
        algorithm: e.algorithm.name().into(),
        config_hash: prepared.hash.clone(),
        trials: e.trials,
        budget: prepared.budget,
        eta: prepared.eta,
        profile: prepared.profile,
        x_axis: "cumulative examples drawn; one snapshot per update".into(),
        mean_final_test_mse: per_trial.iter().map(|t| t.final_test_mse).sum::<f64>() / n,
        mean_final_excess_risk: excess.map(|v| v.iter().sum::<f64>() / n),
        total_attribute_reads: per_trial.iter().map(|t| t.cum_attribute_reads).sum(),
        per_trial,
        output_dir: dir.clone(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(dir.join("summary.json"), json + "\n")?;
    fs::write(dir.join("config.resolved.toml"), config.to_toml())?;
    Ok(summary)
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidBudget(_) => 2,
        Error::Data(_) | Error::Csv(_) | Error::MalformedAggregate { .. } => 3,
        Error::BudgetExceeded { .. } => 4,
        _ => 1,
    }
}
