use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::data::{Covariance, Rows, TrialRng};
use crate::error::{Error, Result};

/// Restricted smoothness and strong convexity constants of the risk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessProfile {
    pub l_s: f64,
    pub mu_s: f64,
    pub r_inf: f64,
    pub alpha_check: f64,
}

impl SmoothnessProfile {
    /// Profile with the default contraction rate `1 / (32 kappa)`.
    pub fn new(l_s: f64, mu_s: f64, r_inf: f64) -> Result<Self> {
        let kappa = l_s / mu_s;
        Self::with_alpha(l_s, mu_s, r_inf, 1.0 / (32.0 * kappa))
    }

    pub fn with_alpha(l_s: f64, mu_s: f64, r_inf: f64, alpha_check: f64) -> Result<Self> {
        if !(mu_s > 0.0 && mu_s <= l_s && l_s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < mu_s <= L_s < inf, got mu_s = {mu_s}, L_s = {l_s}"
            )));
        }
        if !(alpha_check > 0.0 && alpha_check < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha_check = {alpha_check}")));
        }
        if r_inf.is_nan() || r_inf <= 0.0 {
            return Err(Error::InvalidParameter(format!("R_inf = {r_inf}")));
        }
        Ok(Self {
            l_s,
            mu_s,
            r_inf,
            alpha_check,
        })
    }

    /// Exact constants for `E[x x^T] = c I`. The risk is
    /// `c |theta - theta*|^2 + sigma^2`, whose Hessian is `2 c I`.
    pub fn from_covariance(cov: Covariance, r_inf: f64) -> Result<Self> {
        match cov {
            Covariance::ScaledIdentity(c) => Self::new(2.0 * c, 2.0 * c, r_inf),
        }
    }

    /// Estimates from a finite sample: extreme eigenvalues of the empirical
    /// Hessian `(2/n) X_S^T X_S` over `draws` random supports of size `2s`.
    pub fn estimate_from_rows(
        rows: &Rows,
        s: usize,
        draws: usize,
        rng: &mut TrialRng,
    ) -> Result<Self> {
        let d = rows.dim();
        let k = (2 * s).min(d);
        if rows.is_empty() || k == 0 || draws == 0 {
            return Err(Error::InvalidParameter("cannot estimate a profile".into()));
        }
        let n = rows.len() as f64;
        let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
        for _ in 0..draws {
            let idx = sample(rng, d, k).into_vec();
            let mut gram = DMatrix::<f64>::zeros(k, k);
            for i in 0..rows.len() {
                let row = rows.row(i);
                for a in 0..k {
                    let xa = row[idx[a]];
                    for b in a..k {
                        gram[(a, b)] += xa * row[idx[b]];
                    }
                }
            }
            for a in 0..k {
                for b in 0..a {
                    gram[(a, b)] = gram[(b, a)];
                }
            }
            gram *= 2.0 / n;
            let eig = SymmetricEigen::new(gram).eigenvalues;
            hi = hi.max(eig.max());
            lo = lo.min(eig.min());
        }
        if lo <= 1e-12 * hi {
            return Err(Error::InvalidParameter(format!(
                "restricted Gram matrix is singular (smallest eigenvalue {lo})"
            )));
        }
        Self::new(hi, lo, rows.max_abs())
    }

    pub fn kappa(&self) -> f64 {
        self.l_s / self.mu_s
    }

    /// Default step size `1 / (4 L_s)`.
    pub fn default_eta(&self) -> f64 {
        1.0 / (4.0 * self.l_s)
    }
}
