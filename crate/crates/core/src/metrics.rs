//! Error and support-recovery metrics.

use serde::{Deserialize, Serialize};

use crate::data::{observe, Covariance, Example, ObservationLedger, ProblemInstance, Rows};
use crate::error::{Error, Result};
use crate::sparse::{restricted_dot, sq_distance, support, DenseVector};

/// Metrics for one iterate. Quantities that need the true optimum or the
/// population covariance are absent when those are unknown.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    pub test_mse: f64,
    pub excess_risk: Option<f64>,
    pub support: Option<SupportScores>,
    pub l2_sq_error: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Mean squared prediction error on `rows`, reading only `supp(theta)` of each
/// row through `ledger`.
pub fn test_mse_with_ledger(
    theta: &DenseVector,
    rows: &Rows,
    ledger: &mut ObservationLedger,
) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if rows.dim() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            found: rows.dim(),
        });
    }
    let s = support(theta);
    if s.len() > ledger.limit() {
        return Err(Error::SupportTooLarge {
            size: s.len(),
            limit: ledger.limit(),
        });
    }
    let mut total = 0.0;
    for i in 0..rows.len() {
        let mut ex = Example::from_row(rows.row(i).to_vec(), rows.y(i), ledger);
        let obs = observe(&mut ex, &s, ledger)?;
        let r = restricted_dot(theta, &obs, &s)? - ex.y();
        total += r * r;
    }
    Ok(total / rows.len() as f64)
}

/// [`test_mse_with_ledger`] with a fresh prediction-time ledger of limit `s_prime`.
pub fn test_mse(theta: &DenseVector, rows: &Rows, s_prime: usize) -> Result<f64> {
    test_mse_with_ledger(theta, rows, &mut ObservationLedger::new(s_prime))
}

/// `(theta - theta*)^T Σ (theta - theta*)` when Σ and theta* are known.
pub fn exact_excess_risk(theta: &DenseVector, inst: &ProblemInstance) -> Result<Option<f64>> {
    let (Some(theta_star), Some(cov)) = (inst.theta_star(), inst.covariance()) else {
        return Ok(None);
    };
    let dist = sq_distance(theta, theta_star)?;
    Ok(Some(match cov {
        Covariance::ScaledIdentity(c) => c * dist,
    }))
}

/// Set precision, recall and F1 of `supp(theta)` against `supp(theta_star)`.
/// Two empty supports score 1 across the board.
pub fn support_scores(theta: &DenseVector, theta_star: &DenseVector) -> SupportScores {
    let s = support(theta);
    let s_star = support(theta_star);
    if s.is_empty() && s_star.is_empty() {
        return SupportScores {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        };
    }
    let tp = s.intersection_len(&s_star) as f64;
    let precision = if s.is_empty() { 0.0 } else { tp / s.len() as f64 };
    let recall = if s_star.is_empty() {
        0.0
    } else {
        tp / s_star.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    SupportScores {
        precision,
        recall,
        f1,
    }
}

/// Smallest nonzero magnitude.
pub fn r_min(theta_star: &DenseVector) -> Result<f64> {
    theta_star
        .as_slice()
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs())
        .min_by(f64::total_cmp)
        .ok_or(Error::ZeroVector)
}

/// Computes snapshots for one trial: held-out rows plus whatever ground truth
/// the instance exposes.
#[derive(Clone, Debug)]
pub struct Evaluator {
    rows: Rows,
    theta_star: Option<DenseVector>,
    covariance: Option<Covariance>,
    s_prime: usize,
    every: usize,
}

impl Evaluator {
    pub fn new(inst: &ProblemInstance, rows: Rows, s_prime: usize, every: usize) -> Self {
        Self {
            rows,
            theta_star: inst.theta_star().cloned(),
            covariance: inst.covariance(),
            s_prime,
            every: every.max(1),
        }
    }

    /// Evaluate every `every` updates.
    pub fn every(&self) -> usize {
        self.every
    }

    pub fn rows(&self) -> &Rows {
        &self.rows
    }

    pub fn snapshot(&self, theta: &DenseVector) -> Result<MetricSnapshot> {
        let test_mse = test_mse(theta, &self.rows, self.s_prime)?;
        let (excess_risk, support, l2_sq_error) = match &self.theta_star {
            Some(ts) => {
                let l2 = sq_distance(theta, ts)?;
                let excess = self.covariance.map(|c| match c {
                    Covariance::ScaledIdentity(scale) => scale * l2,
                });
                (excess, Some(support_scores(theta, ts)), Some(l2))
            }
            None => (None, None, None),
        };
        Ok(MetricSnapshot {
            test_mse,
            excess_risk,
            support,
            l2_sq_error,
        })
    }
}
