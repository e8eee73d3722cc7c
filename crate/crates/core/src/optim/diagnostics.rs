use serde::{Deserialize, Serialize};

use super::profile::SmoothnessProfile;
use crate::data::Budget;

/// One checked inequality `lhs <op> rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
    /// Distance to the boundary, positive when the constraint holds.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub checks: Vec<ConstraintCheck>,
}

impl ConstraintReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl std::fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<10} {}  lhs = {:.6e}  rhs = {:.6e}  slack = {:.6e}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.lhs,
                c.rhs,
                c.slack
            )?;
        }
        Ok(())
    }
}

/// Lower bound on `s / s*` implied by the step size.
pub fn sparsity_ratio_bound(eta: f64, profile: &SmoothnessProfile) -> f64 {
    let (l, mu) = (profile.l_s, profile.mu_s);
    let denom = 0.25 - eta * l / 2.0;
    let first = if denom > 0.0 {
        2.0 * ((0.25 + eta * l / 2.0) / denom) - 1.0
    } else {
        f64::INFINITY
    };
    first.max(64.0 / (eta * eta * mu * mu) + 1.0)
}

/// Minimum batch size implied by the other parameters.
pub fn batch_lower_bound(
    eta: f64,
    budget: &Budget,
    profile: &SmoothnessProfile,
    delta_t: f64,
) -> f64 {
    let (s, s_star, d) = (budget.s as f64, budget.s_star as f64, budget.d as f64);
    let l = profile.l_s;
    let r4 = profile.r_inf.powi(4);
    (4.0 * s / s_star) * (s + s_star).powi(2) * (2.5 + eta * l) * r4 * eta
        * (2.0 * d / delta_t).ln()
        / (1.0 / (4.0 * eta) + l / 2.0)
}

/// Checks the step-size, sparsity and batch-size conditions literally.
pub fn validate_parameters(
    eta: f64,
    budget: &Budget,
    profile: &SmoothnessProfile,
    batch: usize,
    delta_t: f64,
) -> ConstraintReport {
    let eta_max = 1.0 / (2.0 * profile.l_s);
    let s_min = sparsity_ratio_bound(eta, profile) * budget.s_star as f64;
    let b_min = batch_lower_bound(eta, budget, profile, delta_t);
    let s = budget.s as f64;
    let b = batch as f64;
    ConstraintReport {
        checks: vec![
            ConstraintCheck {
                name: "step".into(),
                lhs: eta,
                rhs: eta_max,
                passed: eta < eta_max,
                slack: eta_max - eta,
            },
            ConstraintCheck {
                name: "sparsity".into(),
                lhs: s,
                rhs: s_min,
                passed: s >= s_min,
                slack: s - s_min,
            },
            ConstraintCheck {
                name: "batch".into(),
                lhs: b,
                rhs: b_min,
                passed: b >= b_min,
                slack: b - b_min,
            },
        ],
    }
}

/// Predicted per-step contraction `alpha` and additive noise term `c_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    pub alpha: f64,
    pub c_t: f64,
}

pub fn contraction_diagnostics(
    eta: f64,
    budget: &Budget,
    profile: &SmoothnessProfile,
    sigma: f64,
    delta_t: f64,
) -> Contraction {
    let (s, s_star, d) = (budget.s as f64, budget.s_star as f64, budget.d as f64);
    let (l, mu) = (profile.l_s, profile.mu_s);
    let alpha = 0.5 * (1.0 - 2.0 * s_star / (s + s_star)) * mu * (0.25 + eta * l / 2.0) * eta;
    let c_t = 4.0 * sigma * sigma * s * (2.5 + eta * l) * eta * (d / delta_t).ln();
    Contraction { alpha, c_t }
}
