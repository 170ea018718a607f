//! Seeded synthetic data generators.
//!
//! Two families back the end-to-end verification suites and the `synth`
//! CLI command: a heteroscedastic Normal target whose noise level is
//! driven by one designated feature, and its exponentiated
//! "revenue-like" variant whose log is that Normal. Both record the true
//! per-row `sigma` so tests can compare predicted against actual
//! uncertainty.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::binning::Dataset;
use crate::error::{Error, Result};

/// Generated sample set with the ground-truth noise level per row.
#[derive(Debug, Clone)]
pub struct SynthData {
    /// Row-major `n x d` feature matrix with entries in [0, 1).
    pub features: Vec<f64>,
    pub n_cols: usize,
    pub targets: Vec<f64>,
    /// True noise standard deviation per row (log scale for the
    /// revenue-like family).
    pub true_sigma: Vec<f64>,
    pub feature_names: Vec<String>,
}

impl SynthData {
    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// View as a training dataset.
    pub fn dataset(&self) -> Result<Dataset> {
        Dataset::new(
            self.features.clone(),
            self.n_cols,
            self.targets.clone(),
            self.feature_names.clone(),
        )
    }
}

fn validate(n: usize, d: usize) -> Result<()> {
    if n < 10 {
        return Err(Error::InvalidInput(format!(
            "synthetic data needs at least 10 rows, got {n}"
        )));
    }
    if d < 2 {
        return Err(Error::InvalidInput(format!(
            "synthetic data needs at least 2 features (x2 drives the noise), got {d}"
        )));
    }
    Ok(())
}

/// Noise level used by both generator families.
pub fn noise_sigma(x2: f64) -> f64 {
    0.1 + 0.9 * x2
}

/// Mean structure used by both generator families.
pub fn mean_value(x1: f64) -> f64 {
    (2.0 * std::f64::consts::PI * x1).sin()
}

/// `x ~ U(0,1)^d`, `y = sin(2*pi*x1) + N(0, (0.1 + 0.9*x2)^2)`.
pub fn heteroscedastic_normal(n: usize, d: usize, seed: u64) -> Result<SynthData> {
    validate(n, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n);
    let mut true_sigma = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        for _ in 0..d {
            features.push(rng.random::<f64>());
        }
        let x1 = features[start];
        let x2 = features[start + 1];
        let sigma = noise_sigma(x2);
        let eps: f64 = rng.sample(StandardNormal);
        targets.push(mean_value(x1) + sigma * eps);
        true_sigma.push(sigma);
    }
    Ok(SynthData {
        features,
        n_cols: d,
        targets,
        true_sigma,
        feature_names: (1..=d).map(|j| format!("x{j}")).collect(),
    })
}

/// Revenue-like positive target: `y = exp(z)` with `z` drawn from the
/// heteroscedastic Normal family, so `ln(y) ~ N(sin(2*pi*x1), sigma^2)`.
pub fn lognormal_revenue(n: usize, d: usize, seed: u64) -> Result<SynthData> {
    let mut data = heteroscedastic_normal(n, d, seed)?;
    for y in &mut data.targets {
        *y = y.exp();
    }
    Ok(data)
}

/// Homoscedastic variant: same mean structure, constant noise `sigma`.
pub fn homoscedastic_normal(n: usize, d: usize, sigma: f64, seed: u64) -> Result<SynthData> {
    validate(n, d)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sigma must be finite and > 0, got {sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        for _ in 0..d {
            features.push(rng.random::<f64>());
        }
        let eps: f64 = rng.sample(StandardNormal);
        targets.push(mean_value(features[start]) + sigma * eps);
    }
    Ok(SynthData {
        features,
        n_cols: d,
        targets,
        true_sigma: vec![sigma; n],
        feature_names: (1..=d).map(|j| format!("x{j}")).collect(),
    })
}
