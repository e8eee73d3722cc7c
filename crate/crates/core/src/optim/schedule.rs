use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::profile::SmoothnessProfile;
use crate::data::Budget;
use crate::error::{Error, Result};

/// Which convergence bound a theory batch size comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoryBound {
    Exploration,
    Exploitation,
}

/// Inputs of the theory batch-size formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub bound: TheoryBound,
    /// Horizon `T` of the stage.
    pub horizon: usize,
    /// Hybrid round `k >= 1`. When set, `gap` is the initial gap
    /// `L(theta_0) - L(theta*)` and the per-round gap and confidence are derived.
    pub stage: Option<usize>,
    pub gap: f64,
    pub delta: f64,
    pub sigma: f64,
    pub c_b: f64,
    /// Effective feature bound replacing an infinite `R_inf`.
    pub r_override: Option<f64>,
}

/// The two branches of a theory batch size before the max and ceiling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryBranches {
    pub first: f64,
    pub second: f64,
    pub log_factor: f64,
    /// Gap and confidence actually used (after the per-round split).
    pub gap: f64,
    pub delta: f64,
}

impl TheoryBranches {
    pub fn value(&self, c_b: f64) -> f64 {
        c_b * self.log_factor * self.first.max(self.second)
    }
}

/// Gap targeted by round `k` of the hybrid method. The exploration stage of
/// round `k` uses exponent `k - 2`, the exploitation stage exponent `k`.
pub fn hybrid_stage_gap(bound: TheoryBound, alpha_check: f64, k: usize, gap0: f64) -> f64 {
    let exp = match bound {
        TheoryBound::Exploration => k as i32 - 2,
        TheoryBound::Exploitation => k as i32,
    };
    0.5 * alpha_check * (1.0 - alpha_check).powi(exp) * gap0
}

/// Confidence assigned to round `k`: `3 delta / (pi^2 k^2)`, summing to at
/// most `delta / 2` over all rounds.
pub fn hybrid_stage_delta(delta: f64, k: usize) -> f64 {
    3.0 * delta / (PI * PI * (k * k) as f64)
}

pub fn theory_branches(
    profile: &SmoothnessProfile,
    budget: &Budget,
    inputs: &TheoryInputs,
) -> Result<TheoryBranches> {
    let r = inputs.r_override.unwrap_or(profile.r_inf);
    if !r.is_finite() {
        return Err(Error::UnboundedFeatures);
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("effective R = {r}")));
    }
    if inputs.horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    if !(inputs.delta > 0.0 && inputs.delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {}", inputs.delta)));
    }
    if !(inputs.gap > 0.0) {
        return Err(Error::InvalidParameter(format!("gap = {}", inputs.gap)));
    }
    if !(inputs.sigma >= 0.0 && inputs.sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma = {}", inputs.sigma)));
    }
    let (gap, delta) = match inputs.stage {
        None => (inputs.gap, inputs.delta),
        Some(0) => return Err(Error::InvalidParameter("hybrid rounds start at 1".into())),
        Some(k) => (
            hybrid_stage_gap(inputs.bound, profile.alpha_check, k, inputs.gap),
            hybrid_stage_delta(inputs.delta, k),
        ),
    };
    let kappa = profile.kappa();
    let t = inputs.horizon as f64;
    let s = budget.s as f64;
    let d = budget.d as f64;
    let r2 = r * r;
    let r4 = r2 * r2;
    let first = match inputs.bound {
        TheoryBound::Exploration => kappa * kappa * r4 / (profile.l_s * profile.l_s) * s * s,
        TheoryBound::Exploitation => r4 / (profile.mu_s * profile.mu_s) * t * s * s,
    };
    let second = inputs.sigma * inputs.sigma / gap * (r2 / profile.l_s) * t * s
        / (1.0 - profile.alpha_check).powf(t);
    let log_factor = (kappa * d * t / delta).ln();
    Ok(TheoryBranches {
        first,
        second,
        log_factor,
        gap,
        delta,
    })
}

/// `ceil(c_B * log(kappa d T / delta) * max(first, second))`.
pub fn theory_batch_size(
    profile: &SmoothnessProfile,
    budget: &Budget,
    inputs: &TheoryInputs,
) -> Result<usize> {
    if !(inputs.c_b > 0.0 && inputs.c_b.is_finite()) {
        return Err(Error::InvalidParameter(format!("c_B = {}", inputs.c_b)));
    }
    let v = theory_branches(profile, budget, inputs)?.value(inputs.c_b).ceil();
    if !v.is_finite() || v >= usize::MAX as f64 {
        return Err(Error::InvalidParameter(format!("theory batch size overflows ({v})")));
    }
    Ok((v as usize).max(1))
}

/// Exploitation length per hybrid round:
/// `ceil(log(max(d / (c_T kappa^2 (s' - s)), 1)) / log(1 / (1 - alpha)))`, at least 1.
pub fn hybrid_inner_length(profile: &SmoothnessProfile, budget: &Budget, c_t: f64) -> usize {
    let kappa = profile.kappa();
    let ratio = budget.d as f64 / (c_t * kappa * kappa * budget.block_width() as f64);
    let v = (ratio.max(1.0).ln() / (1.0 / (1.0 - profile.alpha_check)).ln()).ceil();
    (v as usize).max(1)
}

/// Batch sizes per update.
#[derive(Clone, Debug, PartialEq)]
pub enum BatchSchedule {
    Constant(usize),
    /// `ceil(base * ratio^i)` for the `i`-th update (0-based), `ratio >= 1`.
    Geometric { base: f64, ratio: f64 },
    /// Constant within a stage; the hybrid runner supplies the round.
    Theory {
        profile: SmoothnessProfile,
        budget: Budget,
        inputs: TheoryInputs,
    },
}

impl BatchSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            BatchSchedule::Constant(0) => Err(Error::InvalidBatchSize),
            BatchSchedule::Constant(_) => Ok(()),
            BatchSchedule::Geometric { base, ratio } => {
                if *base >= 1.0 && base.is_finite() && *ratio >= 1.0 && ratio.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "geometric schedule needs base >= 1 and ratio >= 1, got {base}, {ratio}"
                    )))
                }
            }
            BatchSchedule::Theory {
                profile,
                budget,
                inputs,
            } => theory_batch_size(profile, budget, inputs).map(|_| ()),
        }
    }

    /// Batch size of update `step` (0-based, counted across a whole run),
    /// in hybrid round `round` if any.
    pub fn size(&self, step: usize, round: Option<usize>) -> Result<usize> {
        let b = match self {
            BatchSchedule::Constant(b) => *b,
            BatchSchedule::Geometric { base, ratio } => {
                let v = (base * ratio.powi(step.min(i32::MAX as usize) as i32)).ceil();
                if !v.is_finite() || v >= usize::MAX as f64 {
                    return Err(Error::InvalidParameter(format!("batch size overflows ({v})")));
                }
                v as usize
            }
            BatchSchedule::Theory {
                profile,
                budget,
                inputs,
            } => {
                let mut inputs = *inputs;
                if round.is_some() {
                    inputs.stage = round;
                }
                theory_batch_size(profile, budget, &inputs)?
            }
        };
        if b == 0 {
            return Err(Error::InvalidBatchSize);
        }
        Ok(b)
    }
}
