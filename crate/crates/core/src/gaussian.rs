//! Closed forms for a Gaussian source `X ~ N(0, σ²)` under
//! `d(x, y, ŷ) = (x − y)² + γ(x − ŷ)²`, and a finite discretization of the
//! same problem for cross-checking the finite-alphabet solvers.

use serde::{Deserialize, Serialize};

use crate::curve::{BoundCurve, BoundId, CurvePoint};
use crate::error::{Result, SrdError};
use crate::problem::{DistortionTensor, SourcePmf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub sigma2: f64,
    pub gamma: f64,
}

impl GaussianSpec {
    pub fn new(sigma2: f64, gamma: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(SrdError::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(SrdError::InvalidArgument(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { sigma2, gamma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFeasibility {
    /// Infimum of the feasible distortions, `(γ² + 2γ)/(1 + γ)·σ²`.
    pub d_min: f64,
    /// Zero rate suffices from `(1 + γ)·σ²` on.
    pub d_zero_rate: f64,
}

pub fn gaussian_feasibility(spec: &GaussianSpec) -> GaussianFeasibility {
    let g = spec.gamma;
    GaussianFeasibility {
        d_min: (g * g + 2.0 * g) / (1.0 + g) * spec.sigma2,
        d_zero_rate: (1.0 + g) * spec.sigma2,
    }
}

/// `½ log₂(σ²/(1+γ) / (D − d_min))` between the two thresholds, 0 above.
/// `None` for `D ≤ d_min`, where no finite rate reaches the target.
pub fn gaussian_rate_inner(spec: &GaussianSpec, d: f64) -> Option<f64> {
    let f = gaussian_feasibility(spec);
    if d.is_nan() || d <= f.d_min {
        return None;
    }
    if d >= f.d_zero_rate {
        return Some(0.0);
    }
    Some((0.5 * (spec.sigma2 / (1.0 + spec.gamma) / (d - f.d_min)).log2()).max(0.0))
}

/// Closed-form `R_I2` on `grid`.
pub fn gaussian_curve(spec: &GaussianSpec, grid: &[f64]) -> Result<BoundCurve> {
    let points = grid.iter().map(|&d| CurvePoint::new(d, gaussian_rate_inner(spec, d))).collect();
    let mut curve = BoundCurve::new(BoundId::RI2, points)?;
    curve.notes.push(format!("closed form, sigma2={}, gamma={}", spec.sigma2, spec.gamma));
    Ok(curve)
}

/// Source quantized into `x_bins` equal bins on `±5σ` with bin masses
/// renormalized, and `y_points` reconstruction levels evenly spaced on
/// `±y_half_width·σ`.
pub fn discretize(
    spec: &GaussianSpec,
    x_bins: usize,
    y_points: usize,
    y_half_width: f64,
) -> Result<(SourcePmf, DistortionTensor, Vec<f64>, Vec<f64>)> {
    if x_bins == 0 || y_points < 2 || !(y_half_width > 0.0) {
        return Err(SrdError::InvalidArgument("discretization needs bins, ≥ 2 levels and a positive width".into()));
    }
    let sigma = spec.sigma2.sqrt();
    let edge = 5.0 * sigma;
    let width = 2.0 * edge / x_bins as f64;
    let cdf = |v: f64| 0.5 * (1.0 + libm::erf(v / (sigma * std::f64::consts::SQRT_2)));
    let mut probs: Vec<f64> = (0..x_bins)
        .map(|i| {
            let a = -edge + i as f64 * width;
            cdf(a + width) - cdf(a)
        })
        .collect();
    let s: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|v| *v /= s);
    let xs: Vec<f64> = (0..x_bins).map(|i| -edge + (i as f64 + 0.5) * width).collect();
    let span = y_half_width * sigma;
    let ys: Vec<f64> = (0..y_points)
        .map(|j| -span + 2.0 * span * j as f64 / (y_points - 1) as f64)
        .collect();
    let g = spec.gamma;
    let d = DistortionTensor::from_fn(x_bins, y_points, |x, y, yh| {
        (xs[x] - ys[y]).powi(2) + g * (xs[x] - ys[yh]).powi(2)
    })?;
    Ok((SourcePmf::new(probs)?, d, xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn feasibility_examples() {
        let f = gaussian_feasibility(&GaussianSpec::new(1.0, 1.0).unwrap());
        assert_abs_diff_eq!(f.d_min, 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.d_zero_rate, 2.0, epsilon = 1e-15);
        let f = gaussian_feasibility(&GaussianSpec::new(2.0, 0.5).unwrap());
        assert_abs_diff_eq!(f.d_min, 5.0 / 3.0, epsilon = 1e-14);
        let f = gaussian_feasibility(&GaussianSpec::new(1.0, 1e-12).unwrap());
        assert!(f.d_min < 1e-11 && (f.d_zero_rate - 1.0).abs() < 1e-11);
    }

    #[test]
    fn rate_examples() {
        let s = GaussianSpec::new(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(gaussian_rate_inner(&s, 1.75).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(gaussian_rate_inner(&s, 2.0), Some(0.0));
        assert_eq!(gaussian_rate_inner(&s, 1.4), None);
        assert_abs_diff_eq!(gaussian_rate_inner(&s, 2.0 - 1e-12).unwrap(), 0.0, epsilon = 1e-11);
    }

    #[test]
    fn spec_validation() {
        assert!(GaussianSpec::new(0.0, 1.0).is_err());
        assert!(GaussianSpec::new(1.0, 0.0).is_err());
    }

    #[test]
    fn discretized_moments() {
        let s = GaussianSpec::new(1.0, 1.0).unwrap();
        let (p, _, xs, _) = discretize(&s, 201, 11, 3.0).unwrap();
        let var: f64 = p.probs().iter().zip(&xs).map(|(a, x)| a * x * x).sum();
        assert!((var - 1.0).abs() < 1e-3, "{var}");
    }
}
