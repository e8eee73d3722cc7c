use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::optim::RunTrace;

pub const AGGREGATE_HEADER: [&str; 6] = [
    "cum_examples",
    "trials",
    "mean_test_mse",
    "two_std_test_mse",
    "mean_excess_risk",
    "two_std_excess_risk",
];

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub cum_examples: u64,
    pub trials: usize,
    pub mean_test_mse: f64,
    pub two_std_test_mse: f64,
    pub mean_excess_risk: Option<f64>,
    pub two_std_excess_risk: Option<f64>,
}

/// Mean and twice the sample standard deviation (0 for a single value).
pub fn mean_two_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 2.0 * var.sqrt())
}

type Point = (u64, f64, Option<f64>);

fn metric_points(trace: &RunTrace) -> Vec<Point> {
    trace
        .records
        .iter()
        .filter_map(|r| {
            r.metrics
                .as_ref()
                .map(|m| (r.cum_examples, m.test_mse, m.excess_risk))
        })
        .collect()
}

/// Aligns trials on the union of their sample counts, carrying each trial's
/// last observation forward, then averages.
pub fn aggregate(traces: &[RunTrace]) -> Vec<AggregateRow> {
    let series: Vec<Vec<Point>> = traces.iter().map(metric_points).collect();
    let mut grid: Vec<u64> = series.iter().flatten().map(|p| p.0).collect();
    grid.sort_unstable();
    grid.dedup();
    let mut cursor = vec![0usize; series.len()];
    let mut out = Vec::with_capacity(grid.len());
    for x in grid {
        let mut mse = Vec::new();
        let mut excess = Vec::new();
        let mut all_excess = true;
        for (s, c) in series.iter().zip(cursor.iter_mut()) {
            while *c + 1 < s.len() && s[*c + 1].0 <= x {
                *c += 1;
            }
            if s.is_empty() || s[*c].0 > x {
                continue;
            }
            mse.push(s[*c].1);
            match s[*c].2 {
                Some(e) => excess.push(e),
                None => all_excess = false,
            }
        }
        if mse.is_empty() {
            continue;
        }
        let (m, sd) = mean_two_std(&mse);
        let (me, se) = if all_excess {
            let (a, b) = mean_two_std(&excess);
            (Some(a), Some(b))
        } else {
            (None, None)
        };
        out.push(AggregateRow {
            cum_examples: x,
            trials: mse.len(),
            mean_test_mse: m,
            two_std_test_mse: sd,
            mean_excess_risk: me,
            two_std_excess_risk: se,
        });
    }
    out
}

pub fn write_aggregate<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.cum_examples.to_string(),
            r.trials.to_string(),
            r.mean_test_mse.to_string(),
            r.two_std_test_mse.to_string(),
            opt(r.mean_excess_risk),
            opt(r.two_std_excess_risk),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `(cum_examples, mean_test_mse, two_std_test_mse)` from an aggregate CSV.
pub fn read_aggregate(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let bad = |reason: String| Error::MalformedAggregate {
        path: path.display().to_string(),
        reason,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column '{name}'")))
    };
    let (cx, cm, cs) = (col("cum_examples")?, col("mean_test_mse")?, col("two_std_test_mse")?);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("row {}: non-numeric value in column {}", i + 1, c + 1)))
        };
        out.push((num(cx)?, num(cm)?, num(cs)?));
    }
    if out.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(out)
}
