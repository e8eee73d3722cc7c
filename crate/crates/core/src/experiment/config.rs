use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Budget;
use crate::error::{Error, Result};

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "PIHT_OUTPUT_ROOT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Exploration,
    Exploitation,
    Hybrid,
    Naive,
    FullInfo,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Exploration => "exploration",
            Algorithm::Exploitation => "exploitation",
            Algorithm::Hybrid => "hybrid",
            Algorithm::Naive => "naive",
            Algorithm::FullInfo => "full-info",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub algorithm: Algorithm,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Evaluate metrics every this many updates.
    #[serde(default = "one")]
    pub eval_every: usize,
    /// Held-out rows drawn for synthetic instances.
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    /// Worker threads; 0 means available parallelism.
    #[serde(default)]
    pub workers: usize,
    /// Record wall-clock time in traces (breaks byte-identical reruns).
    #[serde(default)]
    pub timing: bool,
    pub output_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    Normal,
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSection {
    Synthetic {
        d: usize,
        s_star: usize,
        #[serde(default = "one_f")]
        amplitude: f64,
        #[serde(default = "one_f")]
        sigma: f64,
        #[serde(default = "default_law")]
        law: Law,
        #[serde(default)]
        uniform_bound: Option<f64>,
        /// Draw this many rows once and train on a 90/10 split of them.
        #[serde(default)]
        rows: Option<usize>,
    },
    Csv {
        path: PathBuf,
        target: String,
        #[serde(default = "default_split")]
        split_ratio: f64,
        #[serde(default)]
        split_seed: u64,
        #[serde(default = "yes")]
        standardize: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    /// Required for CSV data; defaults to the synthetic sparsity.
    #[serde(default)]
    pub s_star: Option<usize>,
    pub s: usize,
    pub s_prime: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Constant,
    InverseSqrt,
    InverseTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    /// Defaults to `1 / (4 L_s)`.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Updates for the single-stage algorithms.
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub rounds: Option<usize>,
    #[serde(default = "three")]
    pub t_minus: usize,
    /// Exploitation length per hybrid round; derived from `c_t` when absent.
    #[serde(default)]
    pub t_k: Option<usize>,
    #[serde(default = "one_f")]
    pub c_t: f64,
    /// Step schedule of the naive baseline.
    #[serde(default = "default_step")]
    pub step: StepKind,
    #[serde(default = "default_t0")]
    pub step_t0: f64,
    /// 1-based coordinates of a nonzero starting point.
    #[serde(default)]
    pub init_support: Vec<usize>,
    #[serde(default)]
    pub init_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant,
    Geometric,
    Theory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub kind: ScheduleKind,
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default)]
    pub base: Option<f64>,
    #[serde(default)]
    pub ratio: Option<f64>,
    #[serde(default = "one_f")]
    pub c_b: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Initial risk gap; defaults to the excess risk (or test MSE) at the start.
    #[serde(default)]
    pub gap: Option<f64>,
    /// Noise level; defaults to the synthetic sigma.
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Effective feature bound for unbounded laws.
    #[serde(default)]
    pub r_effective: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    #[serde(default)]
    pub l_s: Option<f64>,
    #[serde(default)]
    pub mu_s: Option<f64>,
    #[serde(default)]
    pub alpha_check: Option<f64>,
    /// Random supports used to estimate constants on finite data.
    #[serde(default = "default_draws")]
    pub estimate_draws: usize,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self {
            l_s: None,
            mu_s: None,
            alpha_check: None,
            estimate_draws: default_draws(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub data: DataSection,
    pub budget: BudgetSection,
    pub optimizer: OptimizerSection,
    pub schedule: ScheduleSection,
    /// Exploitation batches; defaults to `schedule`.
    #[serde(default)]
    pub exploit_schedule: Option<ScheduleSection>,
    #[serde(default)]
    pub profile: ProfileSection,
}

fn one() -> usize {
    1
}
fn three() -> usize {
    3
}
fn one_f() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_test_size() -> usize {
    2000
}
fn default_law() -> Law {
    Law::Normal
}
fn default_split() -> f64 {
    0.9
}
fn default_step() -> StepKind {
    StepKind::InverseSqrt
}
fn default_t0() -> f64 {
    10.0
}
fn default_delta() -> f64 {
    0.1
}
fn default_draws() -> usize {
    20
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScheduleSection {
    fn validate(&self, name: &str) -> Result<()> {
        match self.kind {
            ScheduleKind::Constant => match self.size {
                Some(s) if s >= 1 => {}
                _ => return Err(cfg_err(format!("[{name}] constant schedule needs size >= 1"))),
            },
            ScheduleKind::Geometric => match (self.base, self.ratio) {
                (Some(b), Some(r)) if b >= 1.0 && r >= 1.0 && b.is_finite() && r.is_finite() => {}
                _ => {
                    return Err(cfg_err(format!(
                        "[{name}] geometric schedule needs base >= 1 and ratio >= 1"
                    )))
                }
            },
            ScheduleKind::Theory => {
                if !(self.c_b > 0.0 && self.c_b.is_finite()) {
                    return Err(cfg_err(format!("[{name}] c_b must be positive")));
                }
                if !(self.delta > 0.0 && self.delta < 1.0) {
                    return Err(cfg_err(format!("[{name}] delta must lie in (0, 1)")));
                }
                if matches!(self.gap, Some(g) if !(g > 0.0)) {
                    return Err(cfg_err(format!("[{name}] gap must be positive")));
                }
            }
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // data paths are relative to the config file
        if let DataSection::Csv { path: p, .. } = &mut cfg.data {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the resolved TOML.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn exploit_schedule(&self) -> &ScheduleSection {
        self.exploit_schedule.as_ref().unwrap_or(&self.schedule)
    }

    pub fn budget(&self) -> Result<Budget> {
        let s_star = match (&self.data, self.budget.s_star) {
            (_, Some(s)) => s,
            (DataSection::Synthetic { s_star, .. }, None) => *s_star,
            (DataSection::Csv { .. }, None) => {
                return Err(cfg_err("[budget] s_star is required for csv data"))
            }
        };
        let d = match &self.data {
            DataSection::Synthetic { d, .. } => *d,
            // known only after loading; checked again then
            DataSection::Csv { .. } => usize::MAX,
        };
        let b = Budget {
            d,
            s_star,
            s: self.budget.s,
            s_prime: self.budget.s_prime,
        };
        b.validate().map_err(|e| cfg_err(format!("[budget] {e}")))?;
        Ok(b)
    }

    /// Output directory, relocated under the output-root variable when relative.
    pub fn output_dir(&self) -> PathBuf {
        let dir = &self.experiment.output_dir;
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
            _ => dir.clone(),
        }
    }

    /// Checks everything that can be checked without touching data.
    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.trials == 0 {
            return Err(cfg_err("[experiment] trials must be at least 1"));
        }
        if e.eval_every == 0 {
            return Err(cfg_err("[experiment] eval_every must be at least 1"));
        }
        match &self.data {
            DataSection::Synthetic {
                d,
                s_star,
                amplitude,
                sigma,
                law,
                uniform_bound,
                rows,
            } => {
                if *s_star == 0 || s_star > d {
                    return Err(cfg_err("[data] need 1 <= s_star <= d"));
                }
                if !(amplitude.is_finite() && *amplitude > 0.0) {
                    return Err(cfg_err("[data] amplitude must be positive and finite"));
                }
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(cfg_err("[data] sigma must be finite and >= 0"));
                }
                if *law == Law::Uniform && !matches!(uniform_bound, Some(b) if *b > 0.0) {
                    return Err(cfg_err("[data] uniform law needs uniform_bound > 0"));
                }
                if matches!(rows, Some(n) if *n < 2) {
                    return Err(cfg_err("[data] rows must be at least 2"));
                }
                if rows.is_none() && e.test_size == 0 {
                    return Err(cfg_err("[experiment] test_size must be at least 1"));
                }
            }
            DataSection::Csv { split_ratio, .. } => {
                if !(*split_ratio > 0.0 && *split_ratio < 1.0) {
                    return Err(cfg_err("[data] split_ratio must lie in (0, 1)"));
                }
            }
        }
        self.budget()?;
        let o = &self.optimizer;
        if matches!(o.eta, Some(v) if !(v > 0.0 && v.is_finite())) {
            return Err(cfg_err("[optimizer] eta must be positive"));
        }
        match e.algorithm {
            Algorithm::Hybrid => {
                if !matches!(o.rounds, Some(k) if k >= 1) {
                    return Err(cfg_err("[optimizer] hybrid needs rounds >= 1"));
                }
                if o.t_minus == 0 || o.t_k == Some(0) {
                    return Err(cfg_err("[optimizer] inner lengths must be at least 1"));
                }
                if !(o.c_t > 0.0) {
                    return Err(cfg_err("[optimizer] c_t must be positive"));
                }
            }
            _ => {
                if !matches!(o.iterations, Some(t) if t >= 1) {
                    return Err(cfg_err("[optimizer] iterations must be at least 1"));
                }
            }
        }
        if o.step == StepKind::InverseTime && !(o.step_t0 > 0.0) {
            return Err(cfg_err("[optimizer] step_t0 must be positive"));
        }
        if let DataSection::Synthetic { d, .. } = &self.data {
            if o.init_support.iter().any(|&j| j == 0 || j > *d) {
                return Err(cfg_err("[optimizer] init_support entries are 1-based and <= d"));
            }
        }
        if !o.init_value.is_finite() {
            return Err(cfg_err("[optimizer] init_value must be finite"));
        }
        self.schedule.validate("schedule")?;
        if let Some(s) = &self.exploit_schedule {
            s.validate("exploit_schedule")?;
        }
        let p = &self.profile;
        for v in [p.l_s, p.mu_s].into_iter().flatten() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(cfg_err("[profile] constants must be positive"));
            }
        }
        if matches!(p.alpha_check, Some(a) if !(a > 0.0 && a < 1.0)) {
            return Err(cfg_err("[profile] alpha_check must lie in (0, 1)"));
        }
        Ok(())
    }
}
