//! Unbiased gradient estimators that respect the attribute budget.

use std::ops::Range;

use crate::data::{BlockPartition, Environment};
use crate::error::{Error, Result};
use crate::sparse::{restricted_dot, support, DenseVector, SupportSet};

/// A stochastic gradient together with what it cost to build.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    /// Zero outside `valid_support`.
    pub g: DenseVector,
    pub valid_support: SupportSet,
    pub samples_used: u64,
    pub attribute_reads: u64,
    /// Ledger ids of the examples drawn for this estimate, one range per block
    /// (a single range for the exploitation estimator).
    pub example_ids: Vec<Range<u64>>,
}

/// Derivative of the squared loss `(a - y)^2` in the prediction `a`.
pub fn loss_derivative(a: f64, y: f64) -> f64 {
    2.0 * (a - y)
}

/// Block-concatenated estimator: every block of `part` gets `batch` fresh
/// examples, each observed on the block plus `supp(theta)`.
///
/// Draws are consumed block-major, then batch-major.
pub fn exploration_gradient(
    theta: &DenseVector,
    part: &BlockPartition,
    batch: usize,
    env: &mut Environment<'_>,
) -> Result<GradientEstimate> {
    if batch == 0 {
        return Err(Error::InvalidBatchSize);
    }
    let d = theta.len();
    if part.dim() != d || env.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if part.dim() != d { part.dim() } else { env.dim() },
        });
    }
    let start_examples = env.ledger().examples_drawn();
    let start_reads = env.ledger().attribute_reads();
    let s_prev = support(theta);
    let mut g = vec![0.0; d];
    let mut example_ids = Vec::with_capacity(part.count());

    for i in 0..part.count() {
        let block = part.block(i).clone();
        let request = part.block_support(i).union(&s_prev);
        let first = env.ledger().examples_drawn();
        for _ in 0..batch {
            let mut ex = env.draw();
            let obs = env.observe(&mut ex, &request)?;
            let r = loss_derivative(restricted_dot(theta, &obs, &s_prev)?, ex.y());
            for j in block.clone() {
                g[j] += r * obs.get(j).ok_or(Error::MissingCoordinate(j))?;
            }
        }
        example_ids.push(first..env.ledger().examples_drawn());
    }
    let inv = 1.0 / batch as f64;
    g.iter_mut().for_each(|v| *v *= inv);

    Ok(GradientEstimate {
        g: DenseVector::new(g)?,
        valid_support: SupportSet::range(0, d),
        samples_used: env.ledger().examples_drawn() - start_examples,
        attribute_reads: env.ledger().attribute_reads() - start_reads,
        example_ids,
    })
}

/// Support-restricted estimator: `batch` fresh examples observed only on
/// `s0`; the result is exactly zero off `s0`.
pub fn exploitation_gradient(
    theta: &DenseVector,
    s0: &SupportSet,
    batch: usize,
    env: &mut Environment<'_>,
) -> Result<GradientEstimate> {
    if batch == 0 {
        return Err(Error::InvalidBatchSize);
    }
    let limit = env.ledger().limit();
    if s0.len() > limit {
        return Err(Error::SupportTooLarge {
            size: s0.len(),
            limit,
        });
    }
    let d = theta.len();
    if env.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: env.dim(),
        });
    }
    if !support(theta).is_subset_of(s0) {
        return Err(Error::InvalidParameter(
            "supp(theta) must lie inside the exploitation support".into(),
        ));
    }
    let start_examples = env.ledger().examples_drawn();
    let start_reads = env.ledger().attribute_reads();
    let mut acc = vec![0.0; s0.len()];
    for _ in 0..batch {
        let mut ex = env.draw();
        let obs = env.observe(&mut ex, s0)?;
        let r = loss_derivative(restricted_dot(theta, &obs, s0)?, ex.y());
        for (slot, (_, xj)) in acc.iter_mut().zip(obs.iter()) {
            *slot += r * xj;
        }
    }
    let inv = 1.0 / batch as f64;
    let mut g = vec![0.0; d];
    for (j, a) in s0.iter().zip(acc) {
        g[j] = a * inv;
    }
    let end = env.ledger().examples_drawn();
    Ok(GradientEstimate {
        g: DenseVector::new(g)?,
        valid_support: s0.clone(),
        samples_used: end - start_examples,
        attribute_reads: env.ledger().attribute_reads() - start_reads,
        example_ids: vec![start_examples..end],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{
        make_block_partition, trial_rng, ExampleSource, ObservationLedger, SyntheticSpec, TrialRng,
    };

    struct Fixed {
        x: Vec<f64>,
        y: f64,
    }

    impl ExampleSource for Fixed {
        fn dim(&self) -> usize {
            self.x.len()
        }
        fn sample(&self, _rng: &mut TrialRng) -> (Vec<f64>, f64) {
            (self.x.clone(), self.y)
        }
    }

    #[test]
    fn loss_derivative_values() {
        assert_eq!(loss_derivative(3.0, 5.0), -4.0);
        assert_eq!(loss_derivative(1.25, 1.25), 0.0);
    }

    #[test]
    fn loss_derivative_finite_differences() {
        let loss = |a: f64, y: f64| (a - y) * (a - y);
        let h = 1e-5;
        for &(a, y) in &[(0.3, -1.2), (4.0, 4.5), (-2.0, 7.0), (10.0, 0.0)] {
            let fd = (loss(a + h, y) - loss(a - h, y)) / (2.0 * h);
            assert!((fd - loss_derivative(a, y)).abs() < 1e-6, "{a} {y}");
        }
    }

    #[test]
    fn hand_executed_two_blocks() {
        // d = 2, width 1, B = 1, every draw is x = (2, 3), y = 0, theta = (1, 0)
        let src = Fixed {
            x: vec![2.0, 3.0],
            y: 0.0,
        };
        let mut env = Environment::new(&src, trial_rng(0, 0, 0), ObservationLedger::new(2));
        let theta = DenseVector::new(vec![1.0, 0.0]).unwrap();
        let part = make_block_partition(2, 1).unwrap();
        let est = exploration_gradient(&theta, &part, 1, &mut env).unwrap();
        assert_eq!(est.g.as_slice(), &[8.0, 12.0]);
        assert_eq!(est.samples_used, 2);
        assert_eq!(est.example_ids, vec![0..1, 1..2]);
        // block 1 overlaps supp(theta): one read; block 2 reads {1, 2}
        assert_eq!(est.attribute_reads, 3);
    }

    #[test]
    fn zero_residual_at_optimum() {
        let spec = SyntheticSpec::desk(0.0);
        let inst = spec.build().unwrap();
        let theta = inst.theta_star().unwrap().clone();
        let mut env = Environment::new(&inst, trial_rng(3, 0, 0), ObservationLedger::new(40));
        let part = make_block_partition(100, 20).unwrap();
        for batch in [1, 4] {
            let est = exploration_gradient(&theta, &part, batch, &mut env).unwrap();
            assert!(est.g.as_slice().iter().all(|v| *v == 0.0));
            assert_eq!(est.samples_used, 5 * batch as u64);
        }
        let s0 = support(&theta);
        let est = exploitation_gradient(&theta, &s0, 7, &mut env).unwrap();
        assert!(est.g.as_slice().iter().all(|v| *v == 0.0));
        assert_eq!(est.valid_support, s0);
        assert_eq!(env.ledger().max_per_example(), 30);
    }

    #[test]
    fn empty_exploitation_support() {
        let inst = SyntheticSpec::desk(1.0).build().unwrap();
        let mut env = Environment::new(&inst, trial_rng(3, 0, 0), ObservationLedger::new(40));
        let est =
            exploitation_gradient(&DenseVector::zeros(100), &SupportSet::empty(), 5, &mut env)
                .unwrap();
        assert_eq!(est.g.nnz(), 0);
        assert_eq!(est.samples_used, 5);
        assert_eq!(est.attribute_reads, 0);
    }

    #[test]
    fn exploitation_rejects_bad_support() {
        let inst = SyntheticSpec::desk(1.0).build().unwrap();
        let mut env = Environment::new(&inst, trial_rng(3, 0, 0), ObservationLedger::new(4));
        let big = SupportSet::range(0, 5);
        let err = exploitation_gradient(&DenseVector::zeros(100), &big, 1, &mut env).unwrap_err();
        assert!(matches!(err, Error::SupportTooLarge { size: 5, limit: 4 }));
        assert_eq!(env.ledger().examples_drawn(), 0);

        let theta = DenseVector::from_entries(100, &[(50, 1.0)]).unwrap();
        assert!(exploitation_gradient(&theta, &SupportSet::range(0, 2), 1, &mut env).is_err());
        assert!(matches!(
            exploitation_gradient(&theta, &SupportSet::range(50, 51), 0, &mut env),
            Err(Error::InvalidBatchSize)
        ));
    }

    #[test]
    fn exploitation_cost_is_exact() {
        let inst = SyntheticSpec::desk(1.0).build().unwrap();
        let mut env = Environment::new(&inst, trial_rng(8, 0, 0), ObservationLedger::new(40));
        let s0 = SupportSet::new(vec![1, 5, 9, 40], 100).unwrap();
        let theta = DenseVector::from_entries(100, &[(5, 0.3), (40, -1.0)]).unwrap();
        let est = exploitation_gradient(&theta, &s0, 13, &mut env).unwrap();
        assert_eq!(est.attribute_reads, 13 * 4);
        for (j, v) in est.g.as_slice().iter().enumerate() {
            if !s0.contains(j) {
                assert_eq!(v.to_bits(), 0.0f64.to_bits());
            }
        }
    }

    #[test]
    fn blocks_use_disjoint_examples() {
        let inst = SyntheticSpec::desk(1.0).build().unwrap();
        let mut env = Environment::new(&inst, trial_rng(8, 0, 0), ObservationLedger::with_log(40));
        let part = make_block_partition(100, 20).unwrap();
        let theta = DenseVector::from_entries(100, &[(0, 1.0), (33, -0.5), (99, 2.0)]).unwrap();
        let est = exploration_gradient(&theta, &part, 3, &mut env).unwrap();
        let events = env.ledger().events().unwrap();
        for (i, ids) in est.example_ids.iter().enumerate() {
            let block = part.block(i);
            for ev in events.iter().filter(|e| ids.contains(&e.example)) {
                // every attribute read for block i examples is in J_i or supp(theta)
                for &j in &ev.newly_revealed {
                    assert!(block.contains(&j) || theta[j] != 0.0);
                }
            }
        }
        for w in est.example_ids.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
        assert!(est.attribute_reads <= 5 * 3 * 40);
        assert!(env.ledger().max_per_example() <= 40);
    }
}
