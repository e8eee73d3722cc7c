//! Dense parameter vectors, supports, and the hard-thresholding projection.
//!
//! Indices are 0-based inside the library. Every external format (CSV traces,
//! CLI output, the C ABI) converts to 1-based indices at the boundary.

use std::cmp::Ordering;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A parameter vector of the ambient dimension with only finite entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Builds a vector that is zero except on `entries`.
    pub fn from_entries(dim: usize, entries: &[(usize, f64)]) -> Result<Self> {
        let mut values = vec![0.0; dim];
        for &(i, v) in entries {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, dim });
            }
            values[i] = v;
        }
        Self::new(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    pub fn sq_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    /// `self - step * direction`, rejecting non-finite results.
    pub fn axpy_step(&self, step: f64, direction: &DenseVector) -> Result<DenseVector> {
        check_dims(self.len(), direction.len())?;
        let values = self
            .0
            .iter()
            .zip(&direction.0)
            .map(|(a, g)| a - step * g)
            .collect();
        Self::new(values)
    }

    pub fn scaled(&self, c: f64) -> Result<DenseVector> {
        Self::new(self.0.iter().map(|v| c * v).collect())
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Strictly increasing set of coordinate indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Validates that `indices` is strictly increasing and below `dim`.
    pub fn new(indices: Vec<usize>, dim: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedSupport);
        }
        if let Some(&index) = indices.last() {
            if index >= dim {
                return Err(Error::IndexOutOfRange { index, dim });
            }
        }
        Ok(Self(indices))
    }

    /// Sorts and deduplicates arbitrary indices.
    pub fn from_unsorted(mut indices: Vec<usize>, dim: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, dim)
    }

    /// Contiguous range `start..end`.
    pub fn range(start: usize, end: usize) -> Self {
        Self((start..end).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        SupportSet(out)
    }

    pub fn intersection_len(&self, other: &SupportSet) -> usize {
        self.iter().filter(|&i| other.contains(i)).count()
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }
}

/// Attribute values revealed for one example, sorted by index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observation {
    entries: Vec<(usize, f64)>,
}

impl Observation {
    /// Entries must be sorted by index without duplicates.
    pub(crate) fn from_sorted(entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Self { entries }
    }

    /// Builds an observation from arbitrary pairs; later duplicates win.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        let mut dedup: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for e in entries {
            match dedup.last_mut() {
                Some(last) if last.0 == e.0 => *last = e,
                _ => dedup.push(e),
            }
        }
        Self { entries: dedup }
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .ok()
            .map(|pos| self.entries[pos].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }
}

/// Indices of the nonzero entries of `v`, ascending.
pub fn support(v: &DenseVector) -> SupportSet {
    SupportSet(
        v.as_slice()
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(i, _)| i)
            .collect(),
    )
}

/// Ranking used by the projection: larger magnitude first, then smaller index.
fn magnitude_order(values: &[f64], a: usize, b: usize) -> Ordering {
    values[b]
        .abs()
        .total_cmp(&values[a].abs())
        .then_with(|| a.cmp(&b))
}

/// Projection onto `s`-sparse vectors: keeps the `s` largest magnitudes.
///
/// Ties in magnitude keep the smaller index, so the result is a deterministic
/// function of `v`. Selection is linear-time in expectation.
pub fn hard_threshold(v: &DenseVector, s: usize) -> Result<DenseVector> {
    let d = v.len();
    if s == 0 || s > d {
        return Err(Error::SparsityOutOfRange { s, d });
    }
    if v.nnz() <= s {
        return Ok(v.clone());
    }
    let values = v.as_slice();
    let mut order: Vec<usize> = (0..d).collect();
    order.select_nth_unstable_by(s - 1, |&a, &b| magnitude_order(values, a, b));
    let mut out = vec![0.0; d];
    for &i in &order[..s] {
        out[i] = values[i];
    }
    Ok(DenseVector(out))
}

/// `sum_{j in S} v_j * x_j`, reading only the coordinates in `S`.
pub fn restricted_dot(v: &DenseVector, x: &Observation, s: &SupportSet) -> Result<f64> {
    let mut acc = 0.0;
    for j in s.iter() {
        if j >= v.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                dim: v.len(),
            });
        }
        let xj = x.get(j).ok_or(Error::MissingCoordinate(j))?;
        acc += v[j] * xj;
    }
    Ok(acc)
}

pub fn sq_distance(a: &DenseVector, b: &DenseVector) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
