//! The boosting loop and the resulting predictive model.
//!
//! Each iteration computes the per-sample natural gradient at the
//! current `(mu, psi)`, fits one tree to the `mu` component and one to
//! the `psi` component against the same binned features (the two fits
//! run concurrently), picks a single scaling `rho` for both trees by a
//! halving line search on total NLL, and applies the shrunken step
//! `eta * rho`. Skipped iterations are recorded with `rho = 0` so
//! iteration indices stay stable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{build_bins, Dataset};
use crate::error::{Error, Result};
use crate::normal::{self, NormalParams, PSI_MAX, PSI_MIN};
use crate::tree::{fit_tree, predict_tree, RegressionTree, TreeConfig};

/// Version written into and accepted from model documents.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    /// Boosting iterations M.
    pub iterations: usize,
    /// Shrinkage eta applied on top of the line-search scaling.
    pub learning_rate: f64,
    pub tree: TreeConfig,
    pub max_bins: usize,
    /// Grid size of the line search: rho in {1, 1/2, ..., 2^-halvings}.
    pub line_search_halvings: usize,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            iterations: 300,
            learning_rate: 0.3,
            tree: TreeConfig::default(),
            max_bins: 64,
            line_search_halvings: 20,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidInput("iterations must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.line_search_halvings < 1 {
            return Err(Error::InvalidInput(
                "line_search_halvings must be >= 1".into(),
            ));
        }
        self.tree.validate()
    }
}

/// One boosting iteration: a shared scaling and the two fitted trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub rho: f64,
    pub tree_mu: RegressionTree,
    pub tree_psi: RegressionTree,
}

/// A trained model. Predictions follow
/// `mu(x) = init_mu - eta * sum_m rho_m * tree_mu_m(x)` and likewise for
/// `psi`, with the final `psi` clamped into `[-15, 15]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub format_version: u32,
    pub eta: f64,
    pub init_mu: f64,
    pub init_psi: f64,
    /// True when the target was log-transformed before training; tells
    /// consumers that `exp(mu)` is the original-scale point forecast.
    pub log_transform: bool,
    pub feature_names: Vec<String>,
    pub iterations: Vec<IterationRecord>,
}

/// Result of [`train`]: the model, the training-NLL trace (entry 0 is
/// the NLL at initialization, entry m the NLL after iteration m) and the
/// number of iterations skipped by the line search.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: BoostModel,
    pub nll_trace: Vec<f64>,
    pub skipped_iterations: usize,
}

/// Mean NLL over parameter vectors; the quantity the trace records.
fn mean_nll(mu: &[f64], psi: &[f64], y: &[f64]) -> f64 {
    let total: f64 = (0..y.len())
        .map(|i| normal::nll_point_unchecked(mu[i], psi[i], y[i]))
        .sum();
    total / y.len() as f64
}

/// Halving line search over `rho in {1, 1/2, ..., 2^-halvings}`.
///
/// Returns the first (largest) grid value whose total NLL at
/// `(mu - rho*f_mu, psi - rho*f_psi)` is strictly below the NLL at
/// `rho = 0`, or 0 when none improves; the returned step therefore never
/// increases the NLL.
pub fn line_search(
    mu: &[f64],
    psi: &[f64],
    f_mu: &[f64],
    f_psi: &[f64],
    y: &[f64],
    halvings: usize,
) -> Result<f64> {
    let n = y.len();
    if mu.len() != n || psi.len() != n || f_mu.len() != n || f_psi.len() != n {
        return Err(Error::InvalidInput(format!(
            "line search vectors must share one length, got {}/{}/{}/{}/{}",
            mu.len(),
            psi.len(),
            f_mu.len(),
            f_psi.len(),
            n
        )));
    }
    // Sums run in index order so results do not depend on thread count.
    let nll_at = |rho: f64| -> f64 {
        (0..n)
            .map(|i| {
                normal::nll_point_unchecked(mu[i] - rho * f_mu[i], psi[i] - rho * f_psi[i], y[i])
            })
            .sum()
    };
    let base = nll_at(0.0);
    for k in 0..=halvings as i32 {
        let rho = 0.5f64.powi(k);
        if nll_at(rho) < base {
            return Ok(rho);
        }
    }
    Ok(0.0)
}

/// Train a model on `data`.
///
/// Initializes `mu` at the target mean and `psi` at the log of the
/// sample standard deviation (floored at 1e-3), then runs
/// `cfg.iterations` boosting steps. The returned trace is non-increasing:
/// a step that fails to improve the mean training NLL after shrinkage is
/// recorded as skipped (`rho = 0`) and leaves the parameters untouched.
pub fn train(data: &Dataset, cfg: &BoostConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    let n = data.n_rows();
    let min_rows = (2 * cfg.tree.min_samples_leaf).max(10);
    if n < min_rows {
        return Err(Error::InvalidInput(format!(
            "need at least {min_rows} rows for this configuration, got {n}"
        )));
    }
    let y = data.targets();

    let init_mu = y.iter().sum::<f64>() / n as f64;
    let variance = y.iter().map(|v| (v - init_mu) * (v - init_mu)).sum::<f64>() / (n - 1) as f64;
    let init_psi = variance.sqrt().max(1e-3).ln();

    let binned = build_bins(data, cfg.max_bins)?;

    let mut mu = vec![init_mu; n];
    let mut psi = vec![init_psi; n];
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    trace.push(mean_nll(&mu, &psi, y));
    let mut iterations = Vec::with_capacity(cfg.iterations);
    let mut skipped = 0usize;

    for _ in 0..cfg.iterations {
        let mut g_mu = vec![0.0f64; n];
        let mut g_psi = vec![0.0f64; n];
        g_mu.par_iter_mut()
            .zip(g_psi.par_iter_mut())
            .enumerate()
            .for_each(|(i, (gm, gp))| {
                let (dm, dp) = normal::natural_gradient_unchecked(mu[i], psi[i], y[i]);
                *gm = dm;
                *gp = dp;
            });

        // The two fits are independent given the shared bins.
        let (tree_mu, tree_psi) = rayon::join(
            || fit_tree(&binned, &g_mu, &cfg.tree),
            || fit_tree(&binned, &g_psi, &cfg.tree),
        );
        let (tree_mu, tree_psi) = (tree_mu?, tree_psi?);

        let f_mu = predict_all(&tree_mu, data)?;
        let f_psi = predict_all(&tree_psi, data)?;

        let mut rho = line_search(&mu, &psi, &f_mu, &f_psi, y, cfg.line_search_halvings)?;
        if rho > 0.0 {
            let factor = cfg.learning_rate * rho;
            let cand_mu: Vec<f64> = (0..n).map(|i| mu[i] - factor * f_mu[i]).collect();
            let cand_psi: Vec<f64> = (0..n).map(|i| psi[i] - factor * f_psi[i]).collect();
            let cand_nll = mean_nll(&cand_mu, &cand_psi, y);
            // The grid accepts rho at full step; after shrinkage the step
            // must still not increase the NLL, otherwise skip it.
            if cand_nll <= *trace.last().expect("trace has the init entry") {
                mu = cand_mu;
                psi = cand_psi;
                trace.push(cand_nll);
            } else {
                rho = 0.0;
            }
        }
        if rho == 0.0 {
            skipped += 1;
            trace.push(*trace.last().expect("trace has the init entry"));
        }
        iterations.push(IterationRecord {
            rho,
            tree_mu,
            tree_psi,
        });
    }

    Ok(TrainOutput {
        model: BoostModel {
            format_version: MODEL_FORMAT_VERSION,
            eta: cfg.learning_rate,
            init_mu,
            init_psi,
            log_transform: false,
            feature_names: data.feature_names().to_vec(),
            iterations,
        },
        nll_trace: trace,
        skipped_iterations: skipped,
    })
}

fn predict_all(tree: &RegressionTree, data: &Dataset) -> Result<Vec<f64>> {
    (0..data.n_rows())
        .into_par_iter()
        .map(|i| predict_tree(tree, data.row(i)))
        .collect()
}

impl BoostModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Predict the Normal parameters for one feature row.
    pub fn predict_row(&self, row: &[f64]) -> Result<NormalParams> {
        if row.len() != self.n_features() {
            return Err(Error::InvalidInput(format!(
                "row has {} values, model expects {}",
                row.len(),
                self.n_features()
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value for feature `{}`",
                self.feature_names[j]
            )));
        }
        let mut mu = self.init_mu;
        let mut psi = self.init_psi;
        for record in &self.iterations {
            if record.rho == 0.0 {
                continue;
            }
            let factor = self.eta * record.rho;
            mu -= factor * predict_tree(&record.tree_mu, row)?;
            psi -= factor * predict_tree(&record.tree_psi, row)?;
        }
        Ok(NormalParams {
            mu,
            psi: psi.clamp(PSI_MIN, PSI_MAX),
        })
    }

    /// Predict for a row-major `n x d` matrix; one `NormalParams` per
    /// row, in input order.
    pub fn predict_matrix(&self, features: &[f64], n_cols: usize) -> Result<Vec<NormalParams>> {
        if n_cols != self.n_features() {
            return Err(Error::InvalidInput(format!(
                "input has {n_cols} columns, model expects {}",
                self.n_features()
            )));
        }
        if n_cols == 0 || !features.len().is_multiple_of(n_cols) {
            return Err(Error::InvalidInput(format!(
                "feature buffer length {} is not a multiple of {n_cols} columns",
                features.len()
            )));
        }
        features
            .par_chunks(n_cols)
            .map(|row| self.predict_row(row))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format_version {} (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.feature_names.is_empty() {
            return Err(Error::ModelFormat("feature_names is empty".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::ModelFormat(format!(
                "eta {} outside (0, 1]",
                self.eta
            )));
        }
        if !self.init_mu.is_finite() || !self.init_psi.is_finite() {
            return Err(Error::ModelFormat("non-finite initial parameters".into()));
        }
        let d = self.n_features();
        for (m, record) in self.iterations.iter().enumerate() {
            if !(record.rho >= 0.0 && record.rho.is_finite()) {
                return Err(Error::ModelFormat(format!(
                    "iterations[{m}].rho = {} is negative or non-finite",
                    record.rho
                )));
            }
            for (tree, label) in [(&record.tree_mu, "tree_mu"), (&record.tree_psi, "tree_psi")] {
                if let Some(f) = tree.max_feature() {
                    if f >= d {
                        return Err(Error::ModelFormat(format!(
                            "iterations[{m}].{label} splits on feature {f} but the model has {d} features"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Serialize a model to its JSON document. Floats use the shortest
/// decimal representation that round-trips, so reload is bit-exact.
pub fn save_model(model: &BoostModel) -> Result<String> {
    model.validate()?;
    serde_json::to_string(model).map_err(|e| Error::Internal(format!("serialize model: {e}")))
}

/// Parse and validate a model document produced by [`save_model`].
pub fn load_model(document: &str) -> Result<BoostModel> {
    #[derive(Deserialize)]
    struct VersionProbe {
        format_version: u32,
    }
    let probe: VersionProbe = serde_json::from_str(document)
        .map_err(|e| Error::ModelFormat(format!("cannot read format_version: {e}")))?;
    if probe.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format_version {} (expected {MODEL_FORMAT_VERSION})",
            probe.format_version
        )));
    }
    let model: BoostModel =
        serde_json::from_str(document).map_err(|e| Error::ModelFormat(e.to_string()))?;
    model.validate()?;
    Ok(model)
}
