use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::ObservationLedger;
use crate::error::Result;
use crate::metrics::{Evaluator, MetricSnapshot};
use crate::sparse::{support, DenseVector, SupportSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Explore,
    Exploit,
    /// The starting point, before any update.
    Initial,
}

impl Stage {
    pub fn label(self) -> &'static str {
        match self {
            Stage::Explore => "explore",
            Stage::Exploit => "exploit",
            Stage::Initial => "n/a",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub update_index: usize,
    pub stage: Stage,
    /// Hybrid round, 0 outside the hybrid method.
    pub round: usize,
    pub batch: usize,
    pub cum_examples: u64,
    pub cum_attribute_reads: u64,
    pub nnz: usize,
    pub metrics: Option<MetricSnapshot>,
    pub elapsed_ms: f64,
}

/// End of one stage of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageBoundary {
    pub round: usize,
    pub stage: Stage,
    /// Index of the last update of the stage.
    pub last_update: usize,
    pub support: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub boundaries: Vec<StageBoundary>,
    pub final_theta: Vec<f64>,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
    /// Predicted per-step contraction, when the parameters admit one.
    pub predicted_alpha: Option<f64>,
}

pub const TRACE_HEADER: [&str; 10] = [
    "trial",
    "update_index",
    "stage",
    "cum_examples",
    "cum_attribute_reads",
    "nnz_theta",
    "test_mse",
    "excess_risk",
    "support_f1",
    "elapsed_ms",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl RunTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace has an initial record")
    }

    /// Last record carrying metrics.
    pub fn final_metrics(&self) -> Option<&MetricSnapshot> {
        self.records.iter().rev().find_map(|r| r.metrics.as_ref())
    }

    /// Writes the per-trial CSV. Wall-clock times are left blank unless
    /// `timing` is set, so that reruns are byte-identical.
    pub fn write_csv<W: Write>(&self, trial: usize, timing: bool, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER)?;
        for r in &self.records {
            let m = r.metrics.as_ref();
            w.write_record([
                trial.to_string(),
                r.update_index.to_string(),
                r.stage.label().to_string(),
                r.cum_examples.to_string(),
                r.cum_attribute_reads.to_string(),
                r.nnz.to_string(),
                opt(m.map(|m| m.test_mse)),
                opt(m.and_then(|m| m.excess_risk)),
                opt(m.and_then(|m| m.support.map(|s| s.f1))),
                if timing { r.elapsed_ms.to_string() } else { String::new() },
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Accumulates trace records across the stages of one run.
pub struct Recorder<'e> {
    evaluator: Option<&'e Evaluator>,
    records: Vec<TraceRecord>,
    boundaries: Vec<StageBoundary>,
    started: Instant,
    updates: usize,
}

impl<'e> Recorder<'e> {
    pub fn new(evaluator: Option<&'e Evaluator>) -> Self {
        Self {
            evaluator,
            records: Vec::new(),
            boundaries: Vec::new(),
            started: Instant::now(),
            updates: 0,
        }
    }

    /// Number of updates recorded so far.
    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn initial(&mut self, theta: &DenseVector, ledger: &ObservationLedger) -> Result<()> {
        self.push(theta, ledger, Stage::Initial, 0, 0)
    }

    pub fn update(
        &mut self,
        theta: &DenseVector,
        ledger: &ObservationLedger,
        stage: Stage,
        round: usize,
        batch: usize,
    ) -> Result<()> {
        self.updates += 1;
        self.push(theta, ledger, stage, round, batch)
    }

    fn push(
        &mut self,
        theta: &DenseVector,
        ledger: &ObservationLedger,
        stage: Stage,
        round: usize,
        batch: usize,
    ) -> Result<()> {
        let metrics = match self.evaluator {
            Some(ev) if self.updates % ev.every() == 0 => Some(ev.snapshot(theta)?),
            _ => None,
        };
        self.records.push(TraceRecord {
            update_index: self.updates,
            stage,
            round,
            batch,
            cum_examples: ledger.examples_drawn(),
            cum_attribute_reads: ledger.attribute_reads(),
            nnz: theta.nnz(),
            metrics,
            elapsed_ms: self.started.elapsed().as_secs_f64() * 1e3,
        });
        Ok(())
    }

    pub fn end_stage(&mut self, theta: &DenseVector, stage: Stage, round: usize) {
        self.boundaries.push(StageBoundary {
            round,
            stage,
            last_update: self.updates,
            support: support(theta).as_slice().to_vec(),
        });
    }

    /// Ensures the last record has metrics and packages the trace.
    pub fn finish(mut self, theta: &DenseVector) -> Result<RunTrace> {
        if let (Some(ev), Some(last)) = (self.evaluator, self.records.last_mut()) {
            if last.metrics.is_none() {
                last.metrics = Some(ev.snapshot(theta)?);
            }
        }
        Ok(RunTrace {
            records: self.records,
            boundaries: self.boundaries,
            final_theta: theta.as_slice().to_vec(),
            seed: None,
            config_hash: None,
            predicted_alpha: None,
        })
    }
}

impl StageBoundary {
    pub fn support_set(&self) -> SupportSet {
        SupportSet::new(self.support.clone(), usize::MAX).expect("sorted support")
    }
}
