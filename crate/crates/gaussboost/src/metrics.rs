//! Point and distributional evaluation.
//!
//! MAPE and ACCURACY compare the original-scale point forecast
//! `exp(mu)` against strictly positive original-scale targets, so they
//! are only available when the training target was log-transformed and
//! the original values are supplied; they fail loudly otherwise rather
//! than exponentiating model-scale targets. NLL is evaluated on the
//! model scale. The calibration report sorts samples by predicted
//! `sigma` and splits them into equal-count buckets to show how accuracy
//! decays with predicted uncertainty.

use crate::error::{Error, Result};
use crate::normal::{self, NormalParams};

/// Predictions plus targets for evaluation. `y_model_scale` is on the
/// scale the model was trained on; `y_original_scale` carries the
/// strictly positive raw targets when the model scale is their log.
#[derive(Debug, Clone)]
pub struct EvalInput {
    params: Vec<NormalParams>,
    y_model_scale: Vec<f64>,
    y_original_scale: Option<Vec<f64>>,
}

impl EvalInput {
    pub fn new(
        params: Vec<NormalParams>,
        y_model_scale: Vec<f64>,
        y_original_scale: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = params.len();
        if n == 0 {
            return Err(Error::InvalidInput("no samples to evaluate".into()));
        }
        if y_model_scale.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} predictions but {} targets",
                n,
                y_model_scale.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            if !p.mu.is_finite() || !p.psi.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite prediction at sample {i}"
                )));
            }
        }
        if let Some(pos) = y_model_scale.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite model-scale target at sample {pos}"
            )));
        }
        if let Some(orig) = &y_original_scale {
            if orig.len() != n {
                return Err(Error::InvalidInput(format!(
                    "{} predictions but {} original-scale targets",
                    n,
                    orig.len()
                )));
            }
            for (i, &v) in orig.iter().enumerate() {
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "original-scale target at sample {i} must be finite and > 0, got {v}"
                    )));
                }
            }
        }
        Ok(Self {
            params,
            y_model_scale,
            y_original_scale,
        })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[NormalParams] {
        &self.params
    }

    fn original_targets(&self) -> Result<&[f64]> {
        self.y_original_scale.as_deref().ok_or_else(|| {
            Error::InvalidInput(
                "original-scale targets required; only available for log-transformed targets"
                    .into(),
            )
        })
    }

    /// `|exp(mu_i) - y_i| / y_i` for sample `i` on the original scale.
    fn relative_error(&self, i: usize, y_orig: &[f64]) -> Result<f64> {
        let forecast = normal::point_prediction(self.params[i])?;
        Ok((forecast - y_orig[i]).abs() / y_orig[i])
    }
}

/// Mean absolute percentage error of `exp(mu)` against the
/// original-scale targets.
pub fn mape(input: &EvalInput) -> Result<f64> {
    let y_orig = input.original_targets()?;
    let mut total = 0.0;
    for i in 0..input.len() {
        total += input.relative_error(i, y_orig)?;
    }
    Ok(total / input.len() as f64)
}

/// Fraction of samples whose relative point-forecast error is at most
/// `tol` (0.3 reproduces the ACCURACY-within-30% metric).
pub fn accuracy_within(input: &EvalInput, tol: f64) -> Result<f64> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be finite and >= 0, got {tol}"
        )));
    }
    let y_orig = input.original_targets()?;
    let mut hits = 0usize;
    for i in 0..input.len() {
        if input.relative_error(i, y_orig)? <= tol {
            hits += 1;
        }
    }
    Ok(hits as f64 / input.len() as f64)
}

/// Mean per-sample NLL on the model scale.
pub fn nll_mean(input: &EvalInput) -> f64 {
    let total: f64 = input
        .params
        .iter()
        .zip(&input.y_model_scale)
        .map(|(p, &y)| normal::nll_point_unchecked(p.mu, p.psi, y))
        .sum();
    total / input.len() as f64
}

/// One uncertainty bucket: samples whose predicted `sigma` falls in
/// `[sigma_min, sigma_max]`, with their point and distributional scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBucket {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub count: usize,
    pub mape: f64,
    pub accuracy: f64,
    pub mean_nll: f64,
}

/// Equal-count uncertainty buckets ordered by ascending predicted
/// `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub buckets: Vec<CalibrationBucket>,
}

/// Sort samples by predicted `sigma` (ties by sample index), split them
/// into `k` contiguous buckets whose sizes differ by at most one, and
/// score each bucket.
pub fn calibration_report(input: &EvalInput, k: usize) -> Result<CalibrationReport> {
    let n = input.len();
    if !(2..=n).contains(&k) {
        return Err(Error::InvalidInput(format!(
            "bucket count must be in [2, {n}], got {k}"
        )));
    }
    let y_orig = input.original_targets()?;

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps sample-index order for tied sigmas.
    order.sort_by(|&a, &b| {
        input.params[a]
            .sigma()
            .partial_cmp(&input.params[b].sigma())
            .expect("finite sigmas")
    });

    let base = n / k;
    let remainder = n % k;
    let mut buckets = Vec::with_capacity(k);
    let mut start = 0usize;
    for b in 0..k {
        let size = if b < remainder { base + 1 } else { base };
        let members = &order[start..start + size];
        start += size;

        let mut err_sum = 0.0;
        let mut hits = 0usize;
        let mut nll_sum = 0.0;
        for &i in members {
            let err = input.relative_error(i, y_orig)?;
            err_sum += err;
            if err <= 0.3 {
                hits += 1;
            }
            let p = input.params[i];
            nll_sum += normal::nll_point_unchecked(p.mu, p.psi, input.y_model_scale[i]);
        }
        buckets.push(CalibrationBucket {
            sigma_min: input.params[members[0]].sigma(),
            sigma_max: input.params[*members.last().expect("non-empty bucket")].sigma(),
            count: size,
            mape: err_sum / size as f64,
            accuracy: hits as f64 / size as f64,
            mean_nll: nll_sum / size as f64,
        });
    }
    Ok(CalibrationReport { buckets })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "spearman needs two equal-length vectors of at least 2 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("spearman inputs must be finite".into()));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for i in 0..a.len() {
        let da = ra[i] - mean;
        let db = rb[i] - mean;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::InvalidInput(
            "spearman undefined for a constant vector".into(),
        ));
    }
    Ok(cov / (var_a.sqrt() * var_b.sqrt()))
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut pos = 0usize;
    while pos < order.len() {
        let mut end = pos + 1;
        while end < order.len() && values[order[end]] == values[order[pos]] {
            end += 1;
        }
        // 1-based ranks; tied values share the average rank of the run.
        let avg = (pos + 1 + end) as f64 / 2.0;
        for &idx in &order[pos..end] {
            ranks[idx] = avg;
        }
        pos = end;
    }
    ranks
}
