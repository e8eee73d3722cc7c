//! Budget-enforced access to examples.
//!
//! An [`Example`] hides its feature vector; coordinates come out only through
//! [`observe`], which charges the [`ObservationLedger`] for every distinct
//! attribute and refuses requests that would exceed `s'`. Labels are free.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{Observation, SupportSet};

/// Random stream owned by one trial.
pub type TrialRng = ChaCha8Rng;

/// Stream id for training draws inside a trial's generator.
pub const TRAIN_STREAM: u64 = 0;
/// Stream id for the held-out evaluation sample.
pub const TEST_STREAM: u64 = 1;

/// Generator for trial `trial` of a run seeded with `base_seed`.
pub fn trial_rng(base_seed: u64, trial: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(trial));
    rng.set_stream(stream);
    rng
}

/// Anything that can produce i.i.d. `(x, y)` draws.
pub trait ExampleSource: Sync {
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut TrialRng) -> (Vec<f64>, f64);
}

/// One drawn example. The label is public; features are behind [`observe`].
#[derive(Debug)]
pub struct Example {
    id: u64,
    y: f64,
    x: Vec<f64>,
    revealed: Vec<usize>,
}

impl Example {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Distinct attributes revealed so far.
    pub fn revealed(&self) -> &[usize] {
        &self.revealed
    }

    /// Wraps a known row, e.g. a test example, registering it with `ledger`.
    pub fn from_row(x: Vec<f64>, y: f64, ledger: &mut ObservationLedger) -> Self {
        Self {
            id: ledger.register(),
            y,
            x,
            revealed: Vec::new(),
        }
    }
}

/// One call to [`observe`] that revealed at least one new attribute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationEvent {
    pub example: u64,
    pub newly_revealed: Vec<usize>,
}

/// Per-example and global observation counters.
#[derive(Clone, Debug)]
pub struct ObservationLedger {
    limit: usize,
    examples_drawn: u64,
    attribute_reads: u64,
    per_example: Vec<u32>,
    log: Option<Vec<ObservationEvent>>,
}

impl ObservationLedger {
    pub fn new(limit: usize) -> Self {
        Self {
            limit,
            examples_drawn: 0,
            attribute_reads: 0,
            per_example: Vec::new(),
            log: None,
        }
    }

    /// A ledger that also keeps every observation event.
    pub fn with_log(limit: usize) -> Self {
        Self {
            log: Some(Vec::new()),
            ..Self::new(limit)
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn examples_drawn(&self) -> u64 {
        self.examples_drawn
    }

    pub fn attribute_reads(&self) -> u64 {
        self.attribute_reads
    }

    /// Distinct attributes revealed per example, indexed by example id.
    pub fn per_example(&self) -> &[u32] {
        &self.per_example
    }

    pub fn max_per_example(&self) -> usize {
        self.per_example.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn events(&self) -> Option<&[ObservationEvent]> {
        self.log.as_deref()
    }

    fn register(&mut self) -> u64 {
        let id = self.examples_drawn;
        self.examples_drawn += 1;
        self.per_example.push(0);
        id
    }

    fn charge(&mut self, example: u64, newly_revealed: &[usize]) {
        if newly_revealed.is_empty() {
            return;
        }
        self.per_example[example as usize] += newly_revealed.len() as u32;
        self.attribute_reads += newly_revealed.len() as u64;
        if let Some(log) = self.log.as_mut() {
            log.push(ObservationEvent {
                example,
                newly_revealed: newly_revealed.to_vec(),
            });
        }
    }
}

pub fn draw_example(
    source: &dyn ExampleSource,
    rng: &mut TrialRng,
    ledger: &mut ObservationLedger,
) -> Example {
    let (x, y) = source.sample(rng);
    Example {
        id: ledger.register(),
        y,
        x,
        revealed: Vec::new(),
    }
}

/// Reveals `attrs` of `ex`. Re-reading an attribute costs nothing; a request
/// that would push the example past `s'` distinct attributes fails without
/// revealing anything.
pub fn observe(
    ex: &mut Example,
    attrs: &SupportSet,
    ledger: &mut ObservationLedger,
) -> Result<Observation> {
    if let Some(&last) = attrs.as_slice().last() {
        if last >= ex.x.len() {
            return Err(Error::IndexOutOfRange {
                index: last,
                dim: ex.x.len(),
            });
        }
    }
    let fresh: Vec<usize> = attrs
        .iter()
        .filter(|j| ex.revealed.binary_search(j).is_err())
        .collect();
    let requested = ex.revealed.len() + fresh.len();
    if requested > ledger.limit {
        return Err(Error::BudgetExceeded {
            example: ex.id,
            requested,
            limit: ledger.limit,
        });
    }
    ledger.charge(ex.id, &fresh);
    if !fresh.is_empty() {
        ex.revealed.extend_from_slice(&fresh);
        ex.revealed.sort_unstable();
    }
    Ok(Observation::from_sorted(
        attrs.iter().map(|j| (j, ex.x[j])).collect(),
    ))
}

/// A data source bundled with the trial's random stream and ledger.
pub struct Environment<'a> {
    source: &'a dyn ExampleSource,
    rng: TrialRng,
    ledger: ObservationLedger,
}

impl<'a> Environment<'a> {
    pub fn new(source: &'a dyn ExampleSource, rng: TrialRng, ledger: ObservationLedger) -> Self {
        Self {
            source,
            rng,
            ledger,
        }
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn draw(&mut self) -> Example {
        draw_example(self.source, &mut self.rng, &mut self.ledger)
    }

    pub fn observe(&mut self, ex: &mut Example, attrs: &SupportSet) -> Result<Observation> {
        observe(ex, attrs, &mut self.ledger)
    }

    pub fn ledger(&self) -> &ObservationLedger {
        &self.ledger
    }

    pub fn rng_mut(&mut self) -> &mut TrialRng {
        &mut self.rng
    }

    pub fn into_ledger(self) -> ObservationLedger {
        self.ledger
    }
}
