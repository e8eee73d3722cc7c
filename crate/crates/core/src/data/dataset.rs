use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Row-major feature matrix with one label per row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rows {
    dim: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Rows {
    pub fn with_capacity(dim: usize, n: usize) -> Self {
        Self {
            dim,
            x: Vec::with_capacity(dim * n),
            y: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, x: &[f64], y: f64) {
        assert_eq!(x.len(), self.dim, "row width");
        self.x.extend_from_slice(x);
        self.y.push(y);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.y[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    pub fn max_abs(&self) -> f64 {
        self.x.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    fn select(&self, idx: &[usize]) -> Rows {
        let mut out = Rows::with_capacity(self.dim, idx.len());
        for &i in idx {
            out.push(self.row(i), self.y[i]);
        }
        out
    }

    /// Per-column mean and population standard deviation.
    pub fn column_moments(&self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        (0..self.dim)
            .map(|j| {
                let mean = (0..self.len()).map(|i| self.row(i)[j]).sum::<f64>() / n;
                let var = (0..self.len())
                    .map(|i| (self.row(i)[j] - mean).powi(2))
                    .sum::<f64>()
                    / n;
                (mean, var.sqrt())
            })
            .collect()
    }

    fn apply_affine(&mut self, moments: &[(f64, f64)]) {
        let dim = self.dim;
        for row in self.x.chunks_mut(dim) {
            for (v, &(mean, std)) in row.iter_mut().zip(moments) {
                *v = if std > 0.0 { (*v - mean) / std } else { 0.0 };
            }
        }
    }
}

/// A finite dataset held as a train/test split.
#[derive(Clone, Debug)]
pub struct Dataset {
    train: Rows,
    test: Rows,
    feature_names: Vec<String>,
    split_seed: u64,
    split_ratio: f64,
    standardized: bool,
}

impl Dataset {
    /// Splits `rows`, optionally standardizing features with training-split
    /// moments. Constant columns become all zero.
    pub fn from_rows(
        rows: Rows,
        split_ratio: f64,
        split_seed: u64,
        standardize: bool,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let (train_idx, test_idx) = split_train_test(rows.len(), split_ratio, split_seed)?;
        let mut train = rows.select(&train_idx);
        let mut test = rows.select(&test_idx);
        if standardize {
            let moments = train.column_moments();
            train.apply_affine(&moments);
            test.apply_affine(&moments);
        }
        let feature_names = feature_names
            .unwrap_or_else(|| (1..=rows.dim()).map(|j| format!("x{j}")).collect());
        Ok(Self {
            train,
            test,
            feature_names,
            split_seed,
            split_ratio,
            standardized: standardize,
        })
    }

    pub fn dim(&self) -> usize {
        self.train.dim()
    }

    pub fn train(&self) -> &Rows {
        &self.train
    }

    pub fn test(&self) -> &Rows {
        &self.test
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn split_seed(&self) -> u64 {
        self.split_seed
    }

    pub fn split_ratio(&self) -> f64 {
        self.split_ratio
    }

    pub fn standardized(&self) -> bool {
        self.standardized
    }
}

/// Seeded random split of `0..n`. The training part has `round(ratio * n)`
/// rows, clamped so both parts are nonempty.
pub fn split_train_test(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::Data(format!("cannot split {n} rows")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!("split ratio {ratio} not in (0, 1)")));
    }
    let n_train = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = perm.split_off(n_train);
    Ok((perm, test))
}

/// Which CSV column holds the response.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    /// 1-based column position.
    Index(usize),
}

impl TargetColumn {
    /// Numeric strings select by position, anything else by header name.
    pub fn parse(spec: &str) -> Self {
        match spec.trim().parse::<usize>() {
            Ok(i) => TargetColumn::Index(i),
            Err(_) => TargetColumn::Name(spec.trim().to_string()),
        }
    }
}

/// Reads a numeric CSV with a header row. Every cell must parse as a finite
/// number.
pub fn read_csv_rows(path: &Path, target: &TargetColumn) -> Result<(Rows, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let target_col = match target {
        TargetColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("target column '{name}' not found")))?,
        TargetColumn::Index(i) => {
            if *i == 0 || *i > headers.len() {
                return Err(Error::Data(format!(
                    "target column {i} out of range 1..={}",
                    headers.len()
                )));
            }
            i - 1
        }
    };
    if headers.len() < 2 {
        return Err(Error::Data("need at least one feature column".into()));
    }
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != target_col)
        .map(|(_, h)| h.clone())
        .collect();
    let mut rows = Rows::with_capacity(names.len(), 0);
    let mut feat = Vec::with_capacity(names.len());
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = r + 2;
        if record.len() != headers.len() {
            return Err(Error::Data(format!(
                "line {line}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        feat.clear();
        let mut y = 0.0;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| {
                    Error::Data(format!(
                        "line {line}, column '{}': non-numeric cell '{cell}'",
                        headers[j]
                    ))
                })?;
            if j == target_col {
                y = v;
            } else {
                feat.push(v);
            }
        }
        rows.push(&feat, y);
    }
    Ok((rows, names))
}

pub fn load_csv_dataset(
    path: &Path,
    target: &TargetColumn,
    split_ratio: f64,
    split_seed: u64,
    standardize: bool,
) -> Result<Dataset> {
    let (rows, names) = read_csv_rows(path, target)?;
    Dataset::from_rows(rows, split_ratio, split_seed, standardize, Some(names))
}
