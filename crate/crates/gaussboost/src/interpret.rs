//! Feature importance over the expectation and variance tree sets.
//!
//! A model carries one tree set for `mu` (expectation) and one for
//! `psi` (variance). Importance is reported per set as Weight (number
//! of splits on the feature) and Gain (average gain per split); the two
//! sets can be blended into a single ranking for feature selection.

use crate::boosting::BoostModel;
use crate::error::{Error, Result};
use crate::tree::{tree_importance, RegressionTree, SplitStats};

/// Which tree set to inspect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSet {
    Mean,
    Variance,
}

/// Which importance flavor ranks features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImportanceKind {
    /// Split count across the set's trees.
    Weight,
    /// Average gain per split (0 for unused features).
    Gain,
}

/// Per-feature importance of one tree set. `total_gain` is the summed
/// gain behind the `gain` averages, exposed as a convenience column.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceTable {
    pub set: ParamSet,
    pub kind: ImportanceKind,
    pub feature_names: Vec<String>,
    pub weight: Vec<u64>,
    pub gain: Vec<f64>,
    pub total_gain: Vec<f64>,
}

impl ImportanceTable {
    /// The column selected by `kind`, as floats.
    pub fn primary_scores(&self) -> Vec<f64> {
        match self.kind {
            ImportanceKind::Weight => self.weight.iter().map(|&w| w as f64).collect(),
            ImportanceKind::Gain => self.gain.clone(),
        }
    }

    /// Feature indices sorted by descending primary score, ties by
    /// ascending feature index.
    pub fn ranking(&self) -> Vec<usize> {
        rank_descending(&self.primary_scores())
    }
}

fn trees_of<'a>(
    model: &'a BoostModel,
    set: ParamSet,
) -> impl Iterator<Item = &'a RegressionTree> + 'a {
    model.iterations.iter().map(move |record| match set {
        ParamSet::Mean => &record.tree_mu,
        ParamSet::Variance => &record.tree_psi,
    })
}

/// Accumulate split counts and gains for the chosen tree set.
pub fn feature_importance(
    model: &BoostModel,
    set: ParamSet,
    kind: ImportanceKind,
) -> ImportanceTable {
    let d = model.n_features();
    let mut stats = SplitStats::zeros(d);
    for tree in trees_of(model, set) {
        stats.absorb(&tree_importance(tree, d));
    }
    let gain: Vec<f64> = stats
        .split_count
        .iter()
        .zip(&stats.total_gain)
        .map(|(&c, &g)| if c == 0 { 0.0 } else { g / c as f64 })
        .collect();
    ImportanceTable {
        set,
        kind,
        feature_names: model.feature_names.clone(),
        weight: stats.split_count,
        gain,
        total_gain: stats.total_gain,
    }
}

/// One row of a combined ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeature {
    pub index: usize,
    pub name: String,
    pub score: f64,
}

/// Blend the mean-set and variance-set importances into one ranking.
///
/// Each set's importance vector (per `kind`) is normalized to unit sum
/// (an all-zero vector stays zero), then scored as
/// `alpha * mean + (1 - alpha) * variance` and sorted descending, ties
/// by feature index.
pub fn combined_ranking(
    model: &BoostModel,
    alpha: f64,
    kind: ImportanceKind,
) -> Result<Vec<RankedFeature>> {
    if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
        return Err(Error::InvalidInput(format!(
            "alpha must be in [0, 1], got {alpha}"
        )));
    }
    let mean = normalize(&feature_importance(model, ParamSet::Mean, kind).primary_scores());
    let variance = normalize(&feature_importance(model, ParamSet::Variance, kind).primary_scores());
    let scores: Vec<f64> = mean
        .iter()
        .zip(&variance)
        .map(|(m, v)| alpha * m + (1.0 - alpha) * v)
        .collect();
    Ok(rank_descending(&scores)
        .into_iter()
        .map(|index| RankedFeature {
            index,
            name: model.feature_names[index].clone(),
            score: scores[index],
        })
        .collect())
}

fn normalize(scores: &[f64]) -> Vec<f64> {
    let sum: f64 = scores.iter().sum();
    if sum == 0.0 {
        return scores.to_vec();
    }
    scores.iter().map(|s| s / sum).collect()
}

fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    order
}
