use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparsity levels and the per-example attribute budget.
///
/// `1 <= s_star <= s < s_prime <= d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub d: usize,
    pub s_star: usize,
    pub s: usize,
    pub s_prime: usize,
}

impl Budget {
    pub fn new(d: usize, s_star: usize, s: usize, s_prime: usize) -> Result<Self> {
        let b = Self {
            d,
            s_star,
            s,
            s_prime,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            d,
            s_star,
            s,
            s_prime,
        } = *self;
        if s_star < 1 {
            return Err(Error::InvalidBudget("s_star must be at least 1".into()));
        }
        if s < s_star {
            return Err(Error::InvalidBudget(format!("s = {s} < s_star = {s_star}")));
        }
        if s_prime <= s {
            return Err(Error::InvalidBudget(format!(
                "s_prime = {s_prime} must exceed s = {s}"
            )));
        }
        if s_prime > d {
            return Err(Error::InvalidBudget(format!("s_prime = {s_prime} > d = {d}")));
        }
        Ok(())
    }

    /// Width of the exploration blocks, `s' - s`.
    pub fn block_width(&self) -> usize {
        self.s_prime - self.s
    }

    /// Same sparsity levels with every attribute observable.
    pub fn full_information(&self) -> Self {
        Self {
            s_prime: self.d,
            ..*self
        }
    }
}
