//! Per-sample Normal distribution math.
//!
//! The boosted model predicts a Normal distribution for every sample,
//! parametrized as `(mu, psi)` with `psi = ln(sigma)` so that both
//! parameters live on the whole real line. This module holds the
//! negative log-likelihood, its gradient, the Fisher information and the
//! closed-form natural gradient, plus the log-normal uncertainty score
//! used for reporting on the original target scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp for `psi`; keeps `exp(-2*psi)` representable.
pub const PSI_MIN: f64 = -15.0;
/// Upper clamp for `psi`.
pub const PSI_MAX: f64 = 15.0;
/// Floor for `sigma` inside likelihood evaluation.
pub const SIGMA_FLOOR: f64 = 1e-6;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Parameters of one predicted Normal distribution: location `mu` and
/// log standard deviation `psi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mu: f64,
    pub psi: f64,
}

impl NormalParams {
    pub fn new(mu: f64, psi: f64) -> Self {
        Self { mu, psi }
    }

    /// Standard deviation `exp(psi)`, unclamped.
    pub fn sigma(&self) -> f64 {
        self.psi.exp()
    }

    /// Copy with `psi` clamped into `[PSI_MIN, PSI_MAX]`.
    pub fn clamped(&self) -> Self {
        Self {
            mu: self.mu,
            psi: self.psi.clamp(PSI_MIN, PSI_MAX),
        }
    }
}

/// Gradient with respect to `(mu, psi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientPair {
    pub d_mu: f64,
    pub d_psi: f64,
}

/// 2x2 Fisher information matrix in `(mu, psi)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherMatrix {
    pub m: [[f64; 2]; 2],
}

fn check_finite(value: f64, what: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} must be finite, got {value}"
        )))
    }
}

/// Negative log-likelihood of `y` under `N(mu, sigma^2)` with
/// `sigma = exp(psi)` clamped and floored as documented on the constants.
pub fn nll_point(p: NormalParams, y: f64) -> Result<f64> {
    check_finite(y, "observation y")?;
    check_finite(p.mu, "mu")?;
    check_finite(p.psi, "psi")?;
    Ok(nll_point_unchecked(p.mu, p.psi, y))
}

/// `nll_point` without the finiteness checks; hot path for line search
/// and trace evaluation where inputs are already validated.
#[inline]
pub(crate) fn nll_point_unchecked(mu: f64, psi: f64, y: f64) -> f64 {
    let sigma = psi.clamp(PSI_MIN, PSI_MAX).exp().max(SIGMA_FLOOR);
    let z = (y - mu) / sigma;
    LN_SQRT_2PI + sigma.ln() + 0.5 * z * z
}

/// Ordinary gradient of the per-sample NLL: `[(mu-y)/sigma^2, 1-(mu-y)^2/sigma^2]`.
///
/// No clamping is applied here; callers pass `psi` as held by the
/// training state.
pub fn ordinary_gradient(p: NormalParams, y: f64) -> Result<GradientPair> {
    check_finite(y, "observation y")?;
    check_finite(p.mu, "mu")?;
    check_finite(p.psi, "psi")?;
    let s2 = (2.0 * p.psi).exp();
    let r = p.mu - y;
    Ok(GradientPair {
        d_mu: r / s2,
        d_psi: 1.0 - r * r / s2,
    })
}

/// Fisher information of the Normal in `(mu, psi)` coordinates:
/// `[[1/sigma^2, 0], [0, 2]]`.
pub fn fisher(p: NormalParams) -> Result<FisherMatrix> {
    check_finite(p.mu, "mu")?;
    check_finite(p.psi, "psi")?;
    let s2 = (2.0 * p.psi).exp();
    Ok(FisherMatrix {
        m: [[1.0 / s2, 0.0], [0.0, 2.0]],
    })
}

/// Closed-form natural gradient: `[mu - y, 0.5*(1 - (mu-y)^2*exp(-2*psi))]`.
///
/// This is the Fisher-preconditioned gradient with the proportionality
/// constant dropped; any global scale is absorbed by the line-search
/// scaling during training.
pub fn natural_gradient(p: NormalParams, y: f64) -> Result<GradientPair> {
    check_finite(y, "observation y")?;
    check_finite(p.mu, "mu")?;
    check_finite(p.psi, "psi")?;
    let (d_mu, d_psi) = natural_gradient_unchecked(p.mu, p.psi, y);
    Ok(GradientPair { d_mu, d_psi })
}

/// `natural_gradient` without the finiteness checks; hot path for the
/// training loop.
#[inline]
pub(crate) fn natural_gradient_unchecked(mu: f64, psi: f64, y: f64) -> (f64, f64) {
    let r = mu - y;
    (r, 0.5 * (1.0 - r * r * (-2.0 * psi).exp()))
}

/// Natural gradient via a direct 2x2 linear solve of
/// `fisher(p) * g = ordinary_gradient(p, y)`.
///
/// Kept as a correctness oracle for [`natural_gradient`]; the two must
/// agree within 1e-10 relative on every finite input.
pub fn natural_gradient_solve(p: NormalParams, y: f64) -> Result<GradientPair> {
    let b = ordinary_gradient(p, y)?;
    let f = fisher(p)?;
    let [[a11, a12], [a21, a22]] = f.m;
    let det = a11 * a22 - a12 * a21;
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Internal(format!(
            "singular Fisher matrix (det = {det}) at psi = {}",
            p.psi
        )));
    }
    Ok(GradientPair {
        d_mu: (b.d_mu * a22 - b.d_psi * a12) / det,
        d_psi: (a11 * b.d_psi - a21 * b.d_mu) / det,
    })
}

/// Relative standard deviation of a log-normal variable whose log has
/// variance `sigma^2 = exp(2*psi)`: `sqrt(exp(sigma^2) - 1)`.
///
/// Strictly increasing in `psi` and approximately `sigma` for small
/// `sigma`.
pub fn relative_std(p: NormalParams) -> Result<f64> {
    check_finite(p.mu, "mu")?;
    check_finite(p.psi, "psi")?;
    let s2 = (2.0 * p.psi).exp();
    if s2 > 700.0 {
        return Err(Error::Overflow(format!(
            "sigma^2 = {s2} too large for relative_std (limit 700)"
        )));
    }
    // exp_m1 keeps the small-sigma limit R ~ sigma accurate.
    Ok(s2.exp_m1().sqrt())
}

/// Point forecast on the original scale when the target was
/// log-transformed: `exp(mu)`, the log-normal median.
pub fn point_prediction(p: NormalParams) -> Result<f64> {
    check_finite(p.mu, "mu")?;
    check_finite(p.psi, "psi")?;
    if p.mu > 700.0 {
        return Err(Error::Overflow(format!(
            "mu = {} too large for exp-scale point prediction (limit 700)",
            p.mu
        )));
    }
    Ok(p.mu.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};

    fn params(mu: f64, psi: f64) -> NormalParams {
        NormalParams::new(mu, psi)
    }

    #[test]
    fn nll_standard_normal_at_mean() {
        let v = nll_point(params(0.0, 0.0), 0.0).unwrap();
        assert!((v - 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        assert!((v - 0.918939).abs() < 1e-6);
    }

    #[test]
    fn nll_translation_symmetry() {
        let a = nll_point(params(0.0, 0.0), 1.0).unwrap();
        let b = nll_point(params(1.0, 0.0), 0.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nll_unit_sigma_residual_three() {
        let v = nll_point(params(3.0, 0.0), 0.0).unwrap();
        assert!((v - (0.918_938_533_204_672_7 + 4.5)).abs() < 1e-12);
    }

    #[test]
    fn nll_quadrature_cross_check() {
        // Independent oracle: normalize exp(-(y-mu)^2/(2 sigma^2)) by
        // trapezoid quadrature and compare -log density.
        let (mu, psi, y) = (0.7f64, 0.3f64, -0.4f64);
        let sigma = psi.exp();
        let steps = 400_000usize;
        let (lo, hi) = (mu - 12.0 * sigma, mu + 12.0 * sigma);
        let h = (hi - lo) / steps as f64;
        let kernel = |t: f64| (-(t - mu) * (t - mu) / (2.0 * sigma * sigma)).exp();
        let mut integral = 0.5 * (kernel(lo) + kernel(hi));
        for i in 1..steps {
            integral += kernel(lo + i as f64 * h);
        }
        integral *= h;
        let oracle = -(kernel(y) / integral).ln();
        let v = nll_point(params(mu, psi), y).unwrap();
        assert!((v - oracle).abs() < 1e-9, "nll {v} vs quadrature {oracle}");
    }

    #[test]
    fn nll_rejects_non_finite() {
        assert!(nll_point(params(0.0, 0.0), f64::NAN).is_err());
        assert!(nll_point(params(0.0, 0.0), f64::INFINITY).is_err());
    }

    #[test]
    fn gradient_zero_residual() {
        let g = ordinary_gradient(params(2.0, 1.3), 2.0).unwrap();
        assert_eq!(g.d_mu, 0.0);
        assert_eq!(g.d_psi, 1.0);
    }

    #[test]
    fn gradient_hand_values() {
        let g = ordinary_gradient(params(3.0, 0.0), 0.0).unwrap();
        assert!((g.d_mu - 3.0).abs() < 1e-12);
        assert!((g.d_psi - (-8.0)).abs() < 1e-12);
    }

    #[test]
    fn gradient_residual_equals_sigma() {
        let g = ordinary_gradient(params(1.0, 0.0), 0.0).unwrap();
        assert!(g.d_psi.abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = SmallRng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..500 {
            let mu = rng.random_range(-10.0..10.0);
            let psi = rng.random_range(-2.0..2.0);
            let y = rng.random_range(-10.0..10.0);
            let g = ordinary_gradient(params(mu, psi), y).unwrap();
            let fd_mu = (nll_point_unchecked(mu + h, psi, y) - nll_point_unchecked(mu - h, psi, y))
                / (2.0 * h);
            let fd_psi = (nll_point_unchecked(mu, psi + h, y)
                - nll_point_unchecked(mu, psi - h, y))
                / (2.0 * h);
            assert!(
                (g.d_mu - fd_mu).abs() < 1e-5,
                "d_mu {} vs fd {fd_mu}",
                g.d_mu
            );
            assert!(
                (g.d_psi - fd_psi).abs() < 1e-5,
                "d_psi {} vs fd {fd_psi}",
                g.d_psi
            );
        }
    }

    #[test]
    fn fisher_unit_sigma() {
        let f = fisher(params(0.0, 0.0)).unwrap();
        assert_eq!(f.m, [[1.0, 0.0], [0.0, 2.0]]);
    }

    #[test]
    fn fisher_sigma_two() {
        let f = fisher(params(5.0, 2f64.ln())).unwrap();
        assert!((f.m[0][0] - 0.25).abs() < 1e-15);
        assert_eq!(f.m[0][1], 0.0);
        assert_eq!(f.m[1][0], 0.0);
        assert_eq!(f.m[1][1], 2.0);
    }

    #[test]
    fn natural_gradient_zero_residual() {
        let g = natural_gradient(params(4.0, -1.0), 4.0).unwrap();
        assert_eq!(g.d_mu, 0.0);
        assert_eq!(g.d_psi, 0.5);
    }

    #[test]
    fn natural_gradient_residual_equals_sigma() {
        // mu=2, y=0, psi=log 2: residual^2 == sigma^2 so the psi term vanishes.
        let g = natural_gradient(params(2.0, 2f64.ln()), 0.0).unwrap();
        assert!((g.d_mu - 2.0).abs() < 1e-12);
        assert!(g.d_psi.abs() < 1e-12);
    }

    #[test]
    fn natural_gradient_hand_values() {
        let g = natural_gradient(params(3.0, 0.0), 0.0).unwrap();
        assert!((g.d_mu - 3.0).abs() < 1e-12);
        assert!((g.d_psi - (-4.0)).abs() < 1e-12);
    }

    #[test]
    fn solve_hand_values() {
        // diag(1, 2) * g = (3, -8) -> g = (3, -4).
        let g = natural_gradient_solve(params(3.0, 0.0), 0.0).unwrap();
        assert!((g.d_mu - 3.0).abs() < 1e-12);
        assert!((g.d_psi - (-4.0)).abs() < 1e-12);

        let g = natural_gradient_solve(params(2.0, 0.0), 2.0).unwrap();
        assert_eq!(g.d_mu, 0.0);
        assert_eq!(g.d_psi, 0.5);
    }

    #[test]
    fn solve_matches_closed_form() {
        let mut rng = SmallRng::seed_from_u64(23);
        for _ in 0..1000 {
            let p = params(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let y = rng.random_range(-10.0..10.0);
            let a = natural_gradient(p, y).unwrap();
            let b = natural_gradient_solve(p, y).unwrap();
            let rel = |x: f64, z: f64| (x - z).abs() / x.abs().max(z.abs()).max(f64::MIN_POSITIVE);
            assert!(rel(a.d_mu, b.d_mu) < 1e-10 || (a.d_mu - b.d_mu).abs() < 1e-300);
            assert!(rel(a.d_psi, b.d_psi) < 1e-10 || (a.d_psi - b.d_psi).abs() < 1e-300);
        }
    }

    #[test]
    fn pre_scaled_mu_component_is_residual() {
        // The mu component of the natural gradient is exactly mu - y, the
        // squared-error boosting residual.
        let mut rng = SmallRng::seed_from_u64(5);
        for _ in 0..200 {
            let p = params(rng.random_range(-10.0..10.0), rng.random_range(-5.0..5.0));
            let y = rng.random_range(-10.0..10.0);
            let g = natural_gradient(p, y).unwrap();
            assert_eq!(g.d_mu, p.mu - y);
        }
    }

    #[test]
    fn relative_std_small_sigma_limit() {
        let p = params(0.0, -15.0);
        let r = relative_std(p).unwrap();
        let sigma = (-15f64).exp();
        assert!(r <= 1e-6);
        assert!(r / sigma >= 1.0 && r / sigma <= 1.01);
        // The limit holds over psi <= -3 generally.
        for k in 0..100 {
            let psi = -15.0 + 0.12 * k as f64;
            let ratio = relative_std(params(0.0, psi)).unwrap() / psi.exp();
            assert!((1.0..=1.01).contains(&ratio), "ratio {ratio} at psi {psi}");
        }
    }

    #[test]
    fn relative_std_log_two_is_one() {
        // sigma^2 = ln 2 -> sqrt(exp(ln 2) - 1) = 1.
        let psi = 0.5 * std::f64::consts::LN_2.ln();
        assert_eq!(relative_std(params(0.0, psi)).unwrap(), 1.0);
    }

    #[test]
    fn relative_std_unit_sigma() {
        let r = relative_std(params(0.0, 0.0)).unwrap();
        assert!((r - (std::f64::consts::E - 1.0).sqrt()).abs() < 1e-12);
        assert!((r - 1.31083).abs() < 1e-5);
    }

    #[test]
    fn relative_std_overflow() {
        assert!(matches!(
            relative_std(params(0.0, 4.0)),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn relative_std_monotone_in_psi() {
        let mut prev = f64::NEG_INFINITY;
        for k in 0..1000 {
            let psi = -15.0 + 18.2 * k as f64 / 999.0;
            let r = relative_std(params(0.0, psi)).unwrap();
            assert!(r > prev, "not increasing at psi={psi}");
            prev = r;
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn point_prediction_values() {
        assert_eq!(point_prediction(params(0.0, 0.0)).unwrap(), 1.0);
        assert!((point_prediction(params(5f64.ln(), 0.0)).unwrap() - 5.0).abs() < 1e-12);
        assert!((point_prediction(params(2.302585, 0.0)).unwrap() - 10.0).abs() < 1e-4);
        assert!(matches!(
            point_prediction(params(701.0, 0.0)),
            Err(Error::Overflow(_))
        ));
    }
}
