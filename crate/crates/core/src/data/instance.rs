use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::dataset::{Dataset, Rows};
use super::env::{ExampleSource, TrialRng};
use crate::error::{Error, Result};
use crate::sparse::DenseVector;

/// Distribution of the feature vector.
#[derive(Clone, Debug)]
pub enum FeatureLaw {
    /// i.i.d. standard normal coordinates. Unbounded.
    StandardNormal,
    /// i.i.d. uniform coordinates on `[-bound, bound]`.
    Uniform { bound: f64 },
    /// Rows sampled uniformly with replacement from a training split.
    Dataset(Arc<Dataset>),
}

/// Population second-moment matrix `E[x x^T]` when it is known exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Covariance {
    ScaledIdentity(f64),
}

/// The generative model `y = theta_star^T x + xi` or a finite dataset.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    dim: usize,
    theta_star: Option<DenseVector>,
    sigma: f64,
    law: FeatureLaw,
}

impl ProblemInstance {
    /// Synthetic instance with Gaussian noise of scale `sigma`.
    pub fn synthetic(theta_star: DenseVector, sigma: f64, law: FeatureLaw) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma}")));
        }
        match &law {
            FeatureLaw::StandardNormal => {
                log::warn!("standard normal features are unbounded; R_inf is recorded as infinite")
            }
            FeatureLaw::Uniform { bound } if !(*bound > 0.0 && bound.is_finite()) => {
                return Err(Error::InvalidParameter(format!("uniform bound = {bound}")));
            }
            FeatureLaw::Dataset(ds) if ds.dim() != theta_star.len() => {
                return Err(Error::DimensionMismatch {
                    expected: theta_star.len(),
                    found: ds.dim(),
                });
            }
            _ => {}
        }
        Ok(Self {
            dim: theta_star.len(),
            theta_star: Some(theta_star),
            sigma,
            law,
        })
    }

    /// Finite dataset with unknown optimum.
    pub fn from_dataset(dataset: Arc<Dataset>) -> Self {
        Self {
            dim: dataset.dim(),
            theta_star: None,
            sigma: 0.0,
            law: FeatureLaw::Dataset(dataset),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta_star(&self) -> Option<&DenseVector> {
        self.theta_star.as_ref()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn law(&self) -> &FeatureLaw {
        &self.law
    }

    pub fn dataset(&self) -> Option<&Arc<Dataset>> {
        match &self.law {
            FeatureLaw::Dataset(ds) => Some(ds),
            _ => None,
        }
    }

    /// Almost-sure bound on `|x_j|`; infinite for Gaussian features.
    pub fn r_inf(&self) -> f64 {
        match &self.law {
            FeatureLaw::StandardNormal => f64::INFINITY,
            FeatureLaw::Uniform { bound } => *bound,
            FeatureLaw::Dataset(ds) => ds.train().max_abs(),
        }
    }

    pub fn covariance(&self) -> Option<Covariance> {
        match &self.law {
            FeatureLaw::StandardNormal => Some(Covariance::ScaledIdentity(1.0)),
            FeatureLaw::Uniform { bound } => Some(Covariance::ScaledIdentity(bound * bound / 3.0)),
            FeatureLaw::Dataset(_) => None,
        }
    }

    fn draw_features(&self, rng: &mut TrialRng) -> Vec<f64> {
        match &self.law {
            FeatureLaw::StandardNormal => (0..self.dim).map(|_| rng.sample(StandardNormal)).collect(),
            FeatureLaw::Uniform { bound } => {
                (0..self.dim).map(|_| rng.random_range(-*bound..=*bound)).collect()
            }
            FeatureLaw::Dataset(_) => unreachable!("dataset rows are sampled directly"),
        }
    }

    /// Held-out sample for evaluation: the dataset's test split, or `m` fresh
    /// draws for synthetic laws.
    pub fn test_rows(&self, m: usize, rng: &mut TrialRng) -> Rows {
        match &self.law {
            FeatureLaw::Dataset(ds) => ds.test().clone(),
            _ => {
                let mut rows = Rows::with_capacity(self.dim, m);
                for _ in 0..m {
                    let (x, y) = self.sample(rng);
                    rows.push(&x, y);
                }
                rows
            }
        }
    }
}

impl ExampleSource for ProblemInstance {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Draw order is fixed: features first, then the noise term.
    fn sample(&self, rng: &mut TrialRng) -> (Vec<f64>, f64) {
        if let FeatureLaw::Dataset(ds) = &self.law {
            let train = ds.train();
            let i = rng.random_range(0..train.len());
            return (train.row(i).to_vec(), train.y(i));
        }
        let x = self.draw_features(rng);
        let theta = self.theta_star.as_ref().expect("synthetic instance has theta_star");
        let signal: f64 = theta.as_slice().iter().zip(&x).map(|(a, b)| a * b).sum();
        let noise: f64 = rng.sample(StandardNormal);
        (x, signal + self.sigma * noise)
    }
}

/// Parameters of a synthetic instance with a `+a`/`-a` block optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub d: usize,
    pub s_star: usize,
    /// Magnitude of every nonzero coefficient, i.e. `r_min`.
    pub amplitude: f64,
    pub sigma: f64,
    /// `None` for standard normal features, `Some(R)` for uniform on `[-R, R]`.
    pub uniform_bound: Option<f64>,
}

impl SyntheticSpec {
    /// Optimum with `+a` on the first `ceil(s*/2)` coordinates and `-a` on the
    /// next `floor(s*/2)`.
    pub fn theta_star(&self) -> Result<DenseVector> {
        if self.s_star == 0 || self.s_star > self.d {
            return Err(Error::InvalidParameter(format!(
                "s_star = {} for d = {}",
                self.s_star, self.d
            )));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!("amplitude = {}", self.amplitude)));
        }
        let positives = self.s_star.div_ceil(2);
        let mut values = vec![0.0; self.d];
        for (j, v) in values.iter_mut().enumerate().take(self.s_star) {
            *v = if j < positives { self.amplitude } else { -self.amplitude };
        }
        DenseVector::new(values)
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        let law = match self.uniform_bound {
            None => FeatureLaw::StandardNormal,
            Some(bound) => FeatureLaw::Uniform { bound },
        };
        ProblemInstance::synthetic(self.theta_star()?, self.sigma, law)
    }

    /// `n` rows drawn once from the stream with `seed` and split 90/10.
    /// The optimum stays known; the covariance of the finite sample does not.
    pub fn build_finite(&self, n: usize, seed: u64) -> Result<ProblemInstance> {
        let stream = self.build()?;
        let mut rng = super::env::trial_rng(seed, 0, super::env::TRAIN_STREAM);
        let mut all = Rows::with_capacity(self.d, n);
        for _ in 0..n {
            let (x, y) = stream.sample(&mut rng);
            all.push(&x, y);
        }
        let ds = Dataset::from_rows(all, 0.9, seed, false, None)?;
        ProblemInstance::synthetic(self.theta_star()?, self.sigma, FeatureLaw::Dataset(Arc::new(ds)))
    }

    /// d = 500, s* = 25, coefficients +1 on 1..=13 and -1 on 14..=25, σ = 1.
    pub fn d500() -> Self {
        Self {
            d: 500,
            s_star: 25,
            amplitude: 1.0,
            sigma: 1.0,
            uniform_bound: None,
        }
    }

    /// Scaled-down variant used for quick experiments: d = 100, s* = 10.
    pub fn desk(sigma: f64) -> Self {
        Self {
            d: 100,
            s_star: 10,
            amplitude: 1.0,
            sigma,
            uniform_bound: None,
        }
    }
}

/// The d = 500 synthetic benchmark. With `rows = Some((n, seed))` the stream is
/// replaced by `n` fixed rows split 90/10, still carrying the known optimum.
pub fn make_synthetic_d500(rows: Option<(usize, u64)>) -> Result<ProblemInstance> {
    let spec = SyntheticSpec::d500();
    match rows {
        None => spec.build(),
        Some((n, seed)) => spec.build_finite(n, seed),
    }
}
