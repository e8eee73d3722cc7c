//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use partial_iht::data::{
    make_block_partition, trial_rng, Budget, Environment,
    ObservationLedger, ProblemInstance, SyntheticSpec,
};
use partial_iht::estimators::{exploitation_gradient, exploration_gradient};
use partial_iht::experiment::{emit_plot, run_experiment, ExperimentConfig};
use partial_iht::metrics::Evaluator;
use partial_iht::optim::{
    contraction_diagnostics, hybrid_inner_length, run_exploitation, run_exploration, run_hybrid,
    run_naive_exploration, theory_batch_size, theory_branches, validate_parameters, BatchSchedule,
    HybridConfig, RunTrace, SmoothnessProfile, StepSize, TheoryBound, TheoryInputs,
};
use partial_iht::sparse::{hard_threshold, sq_distance, support, DenseVector};
use partial_iht::Error;

const SEEDS: u64 = 5;
const ETA: f64 = 0.125;

/// (max attributes revealed on one example, per-example limit) for every
/// ledger used by the suite.
static AUDIT: Mutex<Vec<(usize, usize)>> = Mutex::new(Vec::new());

fn audit(ledger: &ObservationLedger) {
    AUDIT
        .lock()
        .unwrap()
        .push((ledger.max_per_example(), ledger.limit()));
}

fn desk_budget() -> Budget {
    Budget::new(100, 10, 20, 40).unwrap()
}

fn desk(sigma: f64) -> ProblemInstance {
    SyntheticSpec::desk(sigma).build().unwrap()
}

fn identity_profile() -> SmoothnessProfile {
    SmoothnessProfile::new(2.0, 2.0, f64::INFINITY).unwrap()
}

fn env(inst: &ProblemInstance, seed: u64, limit: usize) -> Environment<'_> {
    Environment::new(inst, trial_rng(seed, 0, 0), ObservationLedger::new(limit))
}

/// Evaluator whose only job is tracking the parameter error.
fn tracker(inst: &ProblemInstance, s_prime: usize) -> Evaluator {
    let rows = inst.test_rows(1, &mut trial_rng(0, 0, 1));
    Evaluator::new(inst, rows, s_prime, 1)
}

fn excess_series(trace: &RunTrace) -> Vec<(u64, f64)> {
    trace
        .records
        .iter()
        .filter_map(|r| {
            r.metrics
                .and_then(|m| m.excess_risk)
                .map(|e| (r.cum_examples, e))
        })
        .collect()
}

/// Value in force at `x` (last observation carried forward).
fn locf(series: &[(u64, f64)], x: u64) -> f64 {
    series
        .iter()
        .take_while(|p| p.0 <= x)
        .last()
        .expect("series starts at 0")
        .1
}

type Check = (bool, String);

// 1
fn hard_threshold_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let d = rng.random_range(1..=10usize);
        let s = rng.random_range(1..=4usize.min(d));
        // half-integer grid values make magnitude ties common
        let v: Vec<f64> = (0..d)
            .map(|_| rng.random_range(-6..=6i32) as f64 / 2.0)
            .collect();
        let got = hard_threshold(&DenseVector::new(v.clone()).unwrap(), s).unwrap();
        let mut best: Option<(f64, Vec<usize>)> = None;
        for mask in 0u32..(1 << d) {
            if mask.count_ones() as usize != s {
                continue;
            }
            let keep: Vec<usize> = (0..d).filter(|j| mask >> j & 1 == 1).collect();
            let dist: f64 = (0..d)
                .filter(|j| mask >> j & 1 == 0)
                .map(|j| v[j] * v[j])
                .sum();
            let better = match &best {
                None => true,
                Some((bd, bk)) => dist < *bd || (dist == *bd && keep < *bk),
            };
            if better {
                best = Some((dist, keep));
            }
        }
        let keep = best.unwrap().1;
        let expect: Vec<f64> = (0..d)
            .map(|j| if keep.contains(&j) { v[j] } else { 0.0 })
            .collect();
        if got.as_slice() != expect.as_slice() {
            mismatches += 1;
        }
    }
    (mismatches == 0, format!("{mismatches} mismatches in 1000 vectors"))
}

// 2
fn projection_inequality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let d = rng.random_range(2..=30usize);
        let n = rng.random_range(2..=d);
        let s = rng.random_range(1..n);
        let s_star = rng.random_range(1..=s);
        let on = rand::seq::index::sample(&mut rng, d, n).into_vec();
        let mut theta = vec![0.0; d];
        for &j in &on {
            theta[j] = rng.random_range(-3.0..3.0);
        }
        let mut theta_star = vec![0.0; d];
        for j in rand::seq::index::sample(&mut rng, d, s_star) {
            theta_star[j] = rng.random_range(-3.0..3.0);
        }
        let theta = DenseVector::new(theta).unwrap();
        let theta_star = DenseVector::new(theta_star).unwrap();
        let n_eff = theta.nnz();
        if n_eff <= s {
            continue;
        }
        let h = hard_threshold(&theta, s).unwrap();
        let lhs = sq_distance(&h, &theta).unwrap();
        let rhs = (n_eff - s) as f64 / (n_eff - s_star) as f64 * sq_distance(&theta, &theta_star).unwrap();
        worst = worst.max(lhs - rhs);
        if lhs > rhs + 1e-12 {
            violations += 1;
        }
    }
    (
        violations == 0,
        format!("{violations} violations in 10000 instances, max lhs - rhs = {worst:.3e}"),
    )
}

/// Per-coordinate mean and standard error of `draws` gradient estimates.
fn gradient_moments(
    inst: &ProblemInstance,
    seed: u64,
    draws: usize,
    mut draw: impl FnMut(&mut Environment<'_>) -> Vec<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let mut e = env(inst, seed, 40);
    let d = inst.dim();
    let (mut sum, mut sq) = (vec![0.0; d], vec![0.0; d]);
    for _ in 0..draws {
        let g = draw(&mut e);
        for j in 0..d {
            sum[j] += g[j];
            sq[j] += g[j] * g[j];
        }
    }
    audit(e.ledger());
    let n = draws as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let se = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| ((q / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt())
        .collect();
    (mean, se)
}

// 3
fn estimator_unbiasedness() -> Check {
    let inst = desk(1.0);
    let ts = inst.theta_star().unwrap().clone();
    let part = make_block_partition(100, 20).unwrap();
    let thetas: Vec<DenseVector> = vec![
        DenseVector::zeros(100),
        ts.clone(),
        DenseVector::from_entries(100, &[(0, 0.5), (3, -2.0), (12, 1.0), (50, 0.7)]).unwrap(),
        DenseVector::from_entries(100, &(0..20).map(|j| (j * 5, 0.3 - 0.05 * j as f64)).collect::<Vec<_>>()).unwrap(),
        DenseVector::from_entries(100, &[(9, -1.0), (10, 1.0), (99, 2.5)]).unwrap(),
    ];
    let draws = 100_000;
    let worst = thetas
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            let truth: Vec<f64> = theta
                .as_slice()
                .iter()
                .zip(ts.as_slice())
                .map(|(a, b)| 2.0 * (a - b))
                .collect();
            let (m, se) = gradient_moments(&inst, 300 + i as u64, draws, |e| {
                exploration_gradient(theta, &part, 1, e).unwrap().g.into_vec()
            });
            let mut z = (0..100)
                .map(|j| (m[j] - truth[j]).abs() / se[j].max(1e-300))
                .fold(0.0f64, f64::max);
            let s0 = support(theta);
            if !s0.is_empty() {
                let (m, se) = gradient_moments(&inst, 400 + i as u64, draws, |e| {
                    exploitation_gradient(theta, &s0, 1, e).unwrap().g.into_vec()
                });
                for j in s0.iter() {
                    z = z.max((m[j] - truth[j]).abs() / se[j]);
                }
            }
            z
        })
        .reduce(|| 0.0, f64::max);
    (
        worst <= 5.0,
        format!("largest |mean - 2(theta - theta*)| = {worst:.2} standard errors over 5 points"),
    )
}

// 4
fn budget_safety() -> Check {
    let inst = desk(1.0);
    let budget = desk_budget();
    let z = DenseVector::zeros(100);
    // every algorithm once more, on logged ledgers
    let runs: Vec<ObservationLedger> = (0..5)
        .map(|alg| {
            let mut e = Environment::new(&inst, trial_rng(40 + alg, 0, 0), ObservationLedger::with_log(40));
            let sched = BatchSchedule::Constant(3);
            match alg {
                0 => drop(run_exploration(&z, ETA, &budget, &sched, 10, &mut e, None).unwrap()),
                1 => {
                    let t0 = DenseVector::from_entries(100, &(0..40).map(|j| (j, 0.1)).collect::<Vec<_>>()).unwrap();
                    drop(run_exploitation(&t0, ETA, &sched, 10, &mut e, None).unwrap())
                }
                2 => {
                    let cfg = HybridConfig {
                        rounds: 3,
                        t_minus: 3,
                        t_k: 5,
                        explore_schedule: sched.clone(),
                        exploit_schedule: sched.clone(),
                        eta: ETA,
                        budget,
                        profile: identity_profile(),
                    };
                    drop(run_hybrid(&z, &cfg, &mut e, None).unwrap())
                }
                3 => drop(
                    run_naive_exploration(&z, StepSize::InverseSqrt { eta0: ETA }, &budget, 50, &mut e, None)
                        .unwrap(),
                ),
                _ => {
                    let full = budget.full_information();
                    let mut e2 = Environment::new(&inst, trial_rng(45, 0, 0), ObservationLedger::with_log(100));
                    drop(run_exploration(&z, ETA, &full, &sched, 5, &mut e2, None).unwrap());
                    audit(e2.ledger());
                }
            }
            e.into_ledger()
        })
        .collect();
    let mut consistent = true;
    for l in &runs {
        audit(l);
        let mut per = vec![0usize; l.per_example().len()];
        for ev in l.events().unwrap() {
            per[ev.example as usize] += ev.newly_revealed.len();
        }
        consistent &= per.iter().zip(l.per_example()).all(|(a, b)| *a == *b as usize);
    }

    // faulty double: blocks as wide as s' leave no room for supp(theta)
    let theta = DenseVector::from_entries(100, &[(99, 1.0)]).unwrap();
    let wide = make_block_partition(100, 40).unwrap();
    let mut e = env(&inst, 46, 40);
    let faulty = exploration_gradient(&theta, &wide, 1, &mut e);
    let raised = matches!(faulty, Err(Error::BudgetExceeded { .. }));
    let untouched = e.ledger().max_per_example() == 0;

    let entries = AUDIT.lock().unwrap().clone();
    let over = entries.iter().filter(|(m, l)| m > l).count();
    let ok = over == 0 && consistent && raised && untouched;
    (
        ok,
        format!(
            "{} ledgers audited, {over} over budget, logs consistent: {consistent}, faulty double raised BudgetExceeded: {raised}",
            entries.len()
        ),
    )
}

fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, sxy * sxy / (sxx * syy))
}

// 5
fn linear_convergence() -> Check {
    let inst = desk(0.0);
    let ev = tracker(&inst, 40);
    // noiseless labels; the first batch already clears the multiplicative-noise regime
    let sched = BatchSchedule::Geometric { base: 16.0, ratio: 1.05 };
    let fits: Vec<(f64, f64)> = (0..SEEDS)
        .into_par_iter()
        .map(|seed| {
            let mut e = env(&inst, 500 + seed, 40);
            let (_, trace) =
                run_exploration(&DenseVector::zeros(100), ETA, &desk_budget(), &sched, 80, &mut e, Some(&ev))
                    .unwrap();
            audit(e.ledger());
            // fit the linear phase, up to where the error meets the rounding floor
            let pts: Vec<(f64, f64)> = trace
                .records
                .iter()
                .filter_map(|r| Some((r.update_index as f64, r.metrics?.l2_sq_error?)))
                .take_while(|p| p.1 > 1e-20)
                .map(|(t, l2)| (t, l2.ln()))
                .collect();
            fit_line(&pts)
        })
        .collect();
    let good = fits.iter().filter(|(slope, r2)| *slope < 0.0 && *r2 >= 0.9).count();
    let desc: Vec<String> = fits
        .iter()
        .map(|(s, r2)| format!("slope {s:.3} R2 {r2:.3}"))
        .collect();
    (good >= 4, format!("{good}/5 seeds fit; {}", desc.join(", ")))
}

// 6
fn hybrid_support_and_boost() -> Check {
    let inst = desk(1.0);
    let ts = inst.theta_star().unwrap().clone();
    let s_star = support(&ts);
    let budget = desk_budget();
    let profile = identity_profile();
    let t_k = hybrid_inner_length(&profile, &budget, 1.0);
    let cfg = HybridConfig {
        rounds: 6,
        t_minus: 3,
        t_k,
        explore_schedule: BatchSchedule::Geometric { base: 2.0, ratio: 1.3 },
        exploit_schedule: BatchSchedule::Geometric { base: 2.0, ratio: 1.02 },
        eta: ETA,
        budget,
        profile,
    };
    let ev = tracker(&inst, 40);
    let results: Vec<(bool, bool, bool, f64, f64)> = (0..SEEDS)
        .into_par_iter()
        .map(|seed| {
            let mut e = env(&inst, 600 + seed, 40);
            let (_, h) = run_hybrid(&DenseVector::zeros(100), &cfg, &mut e, Some(&ev)).unwrap();
            audit(e.ledger());
            let samples = h.last().cum_examples;
            let h_risk = h.final_metrics().unwrap().excess_risk.unwrap();

            // per-round supports after the exploitation stage
            let contains: Vec<bool> = h
                .boundaries
                .iter()
                .filter(|b| b.stage == partial_iht::optim::Stage::Exploit)
                .map(|b| s_star.is_subset_of(&b.support_set()))
                .collect();
            let equal = h
                .boundaries
                .iter()
                .filter(|b| b.stage == partial_iht::optim::Stage::Exploit)
                .any(|b| b.support_set() == s_star);
            // from some round on, every round contains supp(theta*)
            let settled = contains.iter().rposition(|c| !c).map_or(true, |i| i + 1 < contains.len());

            let sched = BatchSchedule::Geometric { base: 2.0, ratio: 1.1 };
            let mut horizon = 0;
            let mut cum = 0u64;
            while cum < samples {
                cum += 5 * sched.size(horizon, None).unwrap() as u64;
                horizon += 1;
            }
            let mut e = env(&inst, 650 + seed, 40);
            let (_, x) =
                run_exploration(&DenseVector::zeros(100), ETA, &budget, &sched, horizon, &mut e, Some(&ev))
                    .unwrap();
            audit(e.ledger());
            let series = excess_series(&x);
            let x_risk = locf(&series, samples);
            (settled, equal, h_risk <= x_risk, h_risk, x_risk)
        })
        .collect();
    let settled = results.iter().filter(|r| r.0).count();
    let equal = results.iter().filter(|r| r.1).count();
    let better = results.iter().filter(|r| r.2).count();
    let risks: Vec<String> = results
        .iter()
        .map(|r| format!("{:.4}/{:.4}", r.3, r.4))
        .collect();
    (
        settled >= 4 && better >= 4,
        format!(
            "supp(theta*) contained from some round on: {settled}/5; exact support equality reached: {equal}/5 (impossible with s > s*); hybrid <= exploration at equal samples: {better}/5 (risks {})",
            risks.join(" ")
        ),
    )
}

// 7
fn inverse_epsilon_scaling() -> Check {
    let inst = desk(1.0);
    let ev = tracker(&inst, 40);
    let eps = 0.02;
    let sched = BatchSchedule::Geometric { base: 2.0, ratio: 1.1 };
    let ratios: Vec<Option<f64>> = (0..SEEDS)
        .into_par_iter()
        .map(|seed| {
            let mut e = env(&inst, 700 + seed, 40);
            let (_, trace) =
                run_exploration(&DenseVector::zeros(100), ETA, &desk_budget(), &sched, 90, &mut e, Some(&ev))
                    .unwrap();
            audit(e.ledger());
            let series = excess_series(&trace);
            let first = |target: f64| series.iter().find(|p| p.1 <= target).map(|p| p.0 as f64);
            Some(first(eps / 2.0)? / first(eps)?)
        })
        .collect();
    let reached: Vec<f64> = ratios.iter().flatten().copied().collect();
    if reached.len() < ratios.len() {
        return (false, format!("only {}/5 seeds reached eps/2", reached.len()));
    }
    let mean = reached.iter().sum::<f64>() / reached.len() as f64;
    let desc: Vec<String> = reached.iter().map(|r| format!("{r:.2}")).collect();
    (
        (1.3..=4.0).contains(&mean),
        format!("eps = {eps}: mean sample ratio {mean:.2} (per seed {})", desc.join(", ")),
    )
}

/// c_B used for the theory batch sizes in criterion 8.
const C_B: f64 = 1e-3;

// 8
fn exploitation_dichotomy() -> Check {
    // uniform features on [-sqrt 3, sqrt 3]: identity covariance, bounded entries
    let r = 3f64.sqrt();
    let spec = SyntheticSpec {
        uniform_bound: Some(r),
        ..SyntheticSpec::desk(1.0)
    };
    let inst = spec.build().unwrap();
    let ts = inst.theta_star().unwrap().clone();
    let budget = desk_budget();
    let profile = SmoothnessProfile::new(2.0, 2.0, r).unwrap();
    let t = hybrid_inner_length(&profile, &budget, 1.0);

    let right = DenseVector::from_entries(100, &(0..20).map(|j| (j, 0.3)).collect::<Vec<_>>()).unwrap();
    let wrong = DenseVector::from_entries(100, &(50..70).map(|j| (j, 0.3)).collect::<Vec<_>>()).unwrap();
    let stage = |theta0: &DenseVector, seed: u64| -> (f64, f64, usize) {
        let start = sq_distance(theta0, &ts).unwrap();
        let inputs = TheoryInputs {
            bound: TheoryBound::Exploitation,
            horizon: t,
            stage: None,
            gap: start,
            delta: 0.1,
            sigma: 1.0,
            c_b: C_B,
            r_override: None,
        };
        let b = theory_batch_size(&profile, &budget, &inputs).unwrap();
        let sched = BatchSchedule::Theory { profile, budget, inputs };
        let mut e = env(&inst, seed, 40);
        let (theta, _) = run_exploitation(theta0, ETA, &sched, t, &mut e, None).unwrap();
        audit(e.ledger());
        (start, sq_distance(&theta, &ts).unwrap(), b)
    };
    let res: Vec<((f64, f64, usize), (f64, f64, usize))> = (0..SEEDS)
        .into_par_iter()
        .map(|seed| (stage(&right, 800 + seed), stage(&wrong, 850 + seed)))
        .collect();
    let decreased = res.iter().filter(|(a, _)| a.1 < a.0).count();
    let bounded = res.iter().filter(|(_, b)| b.1 <= 1.5 * b.0).count();
    let (a, b) = &res[0];
    (
        decreased >= 4 && bounded >= 4,
        format!(
            "c_B = {C_B}, T = {t}, B = {}/{}: correct support decreased on {decreased}/5 (e.g. {:.3} -> {:.4}); wrong support within 1.5x on {bounded}/5 (e.g. {:.3} -> {:.3})",
            a.2, b.2, a.0, a.1, b.0, b.1
        ),
    )
}

fn fixture() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/formula_oracles.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    match v {
        Value::String(s) if s == "inf" => f64::INFINITY,
        v => v.as_f64().unwrap(),
    }
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

// 9
fn formula_oracles() -> Check {
    let fx = fixture();
    let mut failures = Vec::new();
    let mut checked = 0;
    for case in fx["theory"].as_array().unwrap() {
        let a = &case["args"];
        let x = &case["expect"];
        let kappa = num(&a["kappa"]);
        let l = num(&a["l"]);
        let profile = SmoothnessProfile::new(l, l / kappa, num(&a["r"])).unwrap();
        let s = a["s"].as_u64().unwrap() as usize;
        let budget = Budget::new(a["d"].as_u64().unwrap() as usize, 1, s, s + 1).unwrap();
        let inputs = TheoryInputs {
            bound: if a["bound"] == "exploration" {
                TheoryBound::Exploration
            } else {
                TheoryBound::Exploitation
            },
            horizon: a["t"].as_u64().unwrap() as usize,
            stage: None,
            gap: num(&a["gap"]),
            delta: num(&a["delta"]),
            sigma: num(&a["sigma"]),
            c_b: num(&a["c_b"]),
            r_override: None,
        };
        let br = theory_branches(&profile, &budget, &inputs).unwrap();
        let size = theory_batch_size(&profile, &budget, &inputs).unwrap();
        checked += 4;
        if !close(br.first, num(&x["first"]))
            || !close(br.second, num(&x["second"]))
            || !close(br.log_factor, num(&x["log_factor"]))
            || size as u64 != x["size"].as_u64().unwrap()
        {
            failures.push(format!("theory {a}"));
        }
    }
    for case in fx["inner_length"].as_array().unwrap() {
        let a = &case["args"];
        let kappa = num(&a["kappa"]);
        let profile = SmoothnessProfile::with_alpha(kappa, 1.0, 1.0, num(&a["alpha"])).unwrap();
        let d = a["d"].as_u64().unwrap() as usize;
        let w = a["width"].as_u64().unwrap() as usize;
        let budget = Budget::new(d, 1, 1, 1 + w).unwrap();
        checked += 1;
        if hybrid_inner_length(&profile, &budget, num(&a["c_t"])) as u64
            != case["expect"]["length"].as_u64().unwrap()
        {
            failures.push(format!("inner length {a}"));
        }
    }
    for case in fx["contraction"].as_array().unwrap() {
        let a = &case["args"];
        let profile = SmoothnessProfile::new(num(&a["l"]), num(&a["mu"]), 1.0).unwrap();
        let s = a["s"].as_u64().unwrap() as usize;
        let budget = Budget::new(
            a["d"].as_u64().unwrap() as usize,
            a["s_star"].as_u64().unwrap() as usize,
            s,
            s + 1,
        )
        .unwrap();
        let c = contraction_diagnostics(num(&a["eta"]), &budget, &profile, num(&a["sigma"]), num(&a["delta_t"]));
        checked += 2;
        if !close(c.alpha, num(&case["expect"]["alpha"])) || !close(c.c_t, num(&case["expect"]["c_t"])) {
            failures.push(format!("contraction {a}"));
        }
    }
    for case in fx["constraints"].as_array().unwrap() {
        let a = &case["args"];
        let x = &case["expect"];
        let profile = SmoothnessProfile::new(num(&a["l"]), num(&a["mu"]), num(&a["r"])).unwrap();
        let s = a["s"].as_u64().unwrap() as usize;
        let budget = Budget::new(
            a["d"].as_u64().unwrap() as usize,
            a["s_star"].as_u64().unwrap() as usize,
            s,
            s + 1,
        )
        .unwrap();
        let rep = validate_parameters(
            num(&a["eta"]),
            &budget,
            &profile,
            a["batch"].as_u64().unwrap() as usize,
            num(&a["delta_t"]),
        );
        let (st, sp, bt) = (rep.get("step").unwrap(), rep.get("sparsity").unwrap(), rep.get("batch").unwrap());
        checked += 6;
        if !close(st.rhs, num(&x["eta_max"]))
            || st.passed != x["step_pass"].as_bool().unwrap()
            || !close(sp.rhs, num(&x["s_min"]))
            || sp.passed != x["sparsity_pass"].as_bool().unwrap()
            || !close(bt.rhs, num(&x["b_min"]))
            || bt.passed != x["batch_pass"].as_bool().unwrap()
        {
            failures.push(format!("constraints {a}"));
        }
    }
    (
        failures.is_empty(),
        if failures.is_empty() {
            format!("{checked} values match the fixture")
        } else {
            format!("mismatches: {}", failures.join("; "))
        },
    )
}

const REPRO_CONFIG: &str = r#"
[experiment]
algorithm = "hybrid"
trials = 3
base_seed = 11
test_size = 300
output_dir = "OUT"

[data]
source = "synthetic"
d = 100
s_star = 10

[budget]
s = 20
s_prime = 40

[optimizer]
rounds = 3
t_k = 10

[schedule]
kind = "geometric"
base = 2.0
ratio = 1.1
"#;

// 10
fn reproducibility() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let cfg = ExperimentConfig::from_toml_str(&REPRO_CONFIG.replace("OUT", &dir.display().to_string())).unwrap();
    let files = [
        "trial_000.csv",
        "trial_001.csv",
        "trial_002.csv",
        "aggregate.csv",
        "plot.svg",
        "summary.json",
        "config.resolved.toml",
    ];
    let run = || -> Vec<Vec<u8>> {
        run_experiment(&cfg).unwrap();
        emit_plot(&[dir.join("aggregate.csv")], &dir.join("plot.svg"), true).unwrap();
        files.iter().map(|f| std::fs::read(dir.join(f)).unwrap()).collect()
    };
    let (a, b) = (run(), run());
    let differing: Vec<&str> = files
        .iter()
        .zip(a.iter().zip(&b))
        .filter(|(_, (x, y))| x != y)
        .map(|(f, _)| *f)
        .collect();
    (
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} files byte-identical across reruns", files.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn main() {
    let criteria: [(usize, &str, fn() -> Check); 10] = [
        (1, "hard-thresholding oracle equivalence", hard_threshold_oracle),
        (2, "projection inequality", projection_inequality),
        (3, "estimator unbiasedness", estimator_unbiasedness),
        (5, "linear convergence", linear_convergence),
        (6, "support identification and hybrid boost", hybrid_support_and_boost),
        (7, "1/eps sample scaling", inverse_epsilon_scaling),
        (8, "exploitation dichotomy", exploitation_dichotomy),
        (9, "formula oracles", formula_oracles),
        (10, "reproducibility", reproducibility),
        // last: audits the ledgers of every run above
        (4, "budget safety", budget_safety),
    ];
    let mut lines = Vec::new();
    for (id, name, f) in criteria {
        let start = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        lines.push((id, name, ok, detail, start.elapsed().as_secs_f64()));
    }
    lines.sort_by_key(|l| l.0);
    let mut failed = 0;
    for (id, name, ok, detail, secs) in &lines {
        println!(
            "criterion {id:>2} {}  {name} ({secs:.1}s): {detail}",
            if *ok { "PASS" } else { "FAIL" }
        );
        failed += usize::from(!ok);
    }
    println!("acceptance: {}/{} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
