//! Quantile discretization of feature columns into small bin indices.
//!
//! Split search in the tree learner only considers candidate thresholds
//! at bin boundaries, so each feature column is mapped once to a vector
//! of bin indices plus an explicit table of raw-value thresholds. The
//! thresholds are midpoints between consecutive distinct values chosen
//! at approximately equally spaced sample quantiles, which keeps
//! predict-time routing independent of which training sample sat at a
//! quantile boundary.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// In-memory training data: a row-major feature matrix, a target vector
/// and one name per feature column. All values must be finite.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    targets: Vec<f64>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Build a dataset from a row-major `n_rows x n_cols` matrix.
    ///
    /// Rejects non-finite feature or target values with the offending
    /// row and column, empty feature sets, and fewer than two rows.
    pub fn new(
        features: Vec<f64>,
        n_cols: usize,
        targets: Vec<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if n_cols == 0 {
            return Err(Error::InvalidInput("need at least one feature".into()));
        }
        if !features.len().is_multiple_of(n_cols) {
            return Err(Error::InvalidInput(format!(
                "feature buffer length {} is not a multiple of {} columns",
                features.len(),
                n_cols
            )));
        }
        let n_rows = features.len() / n_cols;
        if n_rows < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 rows, got {n_rows}"
            )));
        }
        if targets.len() != n_rows {
            return Err(Error::InvalidInput(format!(
                "target length {} does not match {} rows",
                targets.len(),
                n_rows
            )));
        }
        if feature_names.len() != n_cols {
            return Err(Error::InvalidInput(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                n_cols
            )));
        }
        for (i, chunk) in features.chunks(n_cols).enumerate() {
            for (j, &v) in chunk.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        row: i,
                        column: j,
                        name: feature_names[j].clone(),
                    });
                }
            }
        }
        for (i, &y) in targets.iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::NonFinite {
                    row: i,
                    column: n_cols,
                    name: "target".into(),
                });
            }
        }
        Ok(Self {
            features,
            n_rows,
            n_cols,
            targets,
            feature_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.features[row * self.n_cols + col]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
}

/// Binned view of a dataset: per-feature bin indices plus the raw-value
/// threshold tables that define them. Immutable after construction.
#[derive(Debug, Clone)]
pub struct BinnedDataset {
    bins: Vec<Vec<u16>>,
    thresholds: Vec<Vec<f64>>,
    feature_names: Vec<String>,
    n_rows: usize,
}

impl BinnedDataset {
    /// Bin-index column for feature `f`, one entry per sample.
    pub fn column(&self, f: usize) -> &[u16] {
        &self.bins[f]
    }

    /// Sorted raw-value thresholds for feature `f`; bin `k` holds values
    /// in `[thresholds[k-1], thresholds[k])`.
    pub fn thresholds(&self, f: usize) -> &[f64] {
        &self.thresholds[f]
    }

    /// Number of bins for feature `f` (`thresholds.len() + 1`).
    pub fn n_bins(&self, f: usize) -> usize {
        self.thresholds[f].len() + 1
    }

    pub fn n_features(&self) -> usize {
        self.bins.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
}

/// Map a value to its bin index: the number of thresholds `<= v`.
///
/// `v < thresholds[0]` gives bin 0, `thresholds[k-1] <= v < thresholds[k]`
/// gives bin `k`, and `v >= last` gives the final bin.
pub fn bin_value(thresholds: &[f64], v: f64) -> Result<u16> {
    if !v.is_finite() {
        return Err(Error::InvalidInput(format!(
            "cannot bin non-finite value {v}"
        )));
    }
    Ok(thresholds.partition_point(|&t| t <= v) as u16)
}

/// Quantile-bin every feature column of `data` into at most `max_bins`
/// bins. Features with no more distinct values than `max_bins` get one
/// bin per distinct value; constant features collapse to a single bin.
pub fn build_bins(data: &Dataset, max_bins: usize) -> Result<BinnedDataset> {
    if !(2..=256).contains(&max_bins) {
        return Err(Error::InvalidInput(format!(
            "max_bins must be in [2, 256], got {max_bins}"
        )));
    }
    let n = data.n_rows();
    let d = data.n_cols();

    // Per-feature results are independent; merging by feature index keeps
    // the output deterministic for any thread count.
    let per_feature: Vec<(Vec<f64>, Vec<u16>)> = (0..d)
        .into_par_iter()
        .map(|f| {
            let column: Vec<f64> = (0..n).map(|i| data.value(i, f)).collect();
            let thresholds = feature_thresholds(&column, max_bins);
            let bins = column
                .iter()
                .map(|&v| thresholds.partition_point(|&t| t <= v) as u16)
                .collect();
            (thresholds, bins)
        })
        .collect();

    let mut thresholds = Vec::with_capacity(d);
    let mut bins = Vec::with_capacity(d);
    for (t, b) in per_feature {
        thresholds.push(t);
        bins.push(b);
    }
    Ok(BinnedDataset {
        bins,
        thresholds,
        feature_names: data.feature_names().to_vec(),
        n_rows: n,
    })
}

/// Threshold table for one column: midpoints between consecutive
/// distinct values, either all of them (few distinct values) or the ones
/// nearest to the `k*n/max_bins` sample quantiles.
fn feature_thresholds(column: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));

    // Distinct values with cumulative sample counts.
    let mut distinct: Vec<f64> = Vec::new();
    let mut cum_counts: Vec<usize> = Vec::new();
    for &v in &sorted {
        match distinct.last() {
            Some(&last) if last == v => *cum_counts.last_mut().expect("non-empty") += 1,
            _ => {
                let prev = cum_counts.last().copied().unwrap_or(0);
                distinct.push(v);
                cum_counts.push(prev + 1);
            }
        }
    }
    let u = distinct.len();
    if u <= 1 {
        return Vec::new();
    }
    if u <= max_bins {
        return (0..u - 1)
            .map(|j| midpoint(distinct[j], distinct[j + 1]))
            .collect();
    }

    // Boundary after distinct value j separates cum_counts[j] samples on
    // the left; pick the boundary closest to each quantile target, then
    // dedupe to keep thresholds strictly increasing.
    let n = column.len();
    let mut chosen: Vec<usize> = Vec::with_capacity(max_bins - 1);
    for k in 1..max_bins {
        let target = k as f64 * n as f64 / max_bins as f64;
        let mut best_j = 0usize;
        let mut best_dist = f64::INFINITY;
        for (j, &c) in cum_counts[..u - 1].iter().enumerate() {
            let dist = (c as f64 - target).abs();
            if dist < best_dist {
                best_dist = dist;
                best_j = j;
            }
        }
        if chosen.last() != Some(&best_j) {
            chosen.push(best_j);
        }
    }
    chosen.sort_unstable();
    chosen.dedup();
    chosen
        .into_iter()
        .map(|j| midpoint(distinct[j], distinct[j + 1]))
        .collect()
}

/// Midpoint that is guaranteed to lie strictly between two distinct
/// finite values.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m > a && m <= b {
        m
    } else {
        b
    }
}
