//! Log-linear and log-log decay fits.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::tv::Binning;
use crate::error::{invalid, Result};
use crate::stats::linear_fit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// `v ≈ C e^{-λ t}`, fitted on `(t, log v)`.
    Exponential,
    /// `v ≈ C (1 + t)^{-p}`, fitted on `(log(1 + t), log v)`.
    Power,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub kind: FitKind,
    pub slope: f64,
    /// `λ` for exponential fits, `p` for power fits (both `-slope`).
    pub rate_or_exponent: f64,
    pub intercept: f64,
    /// RMS residual of `log v`.
    pub residual: f64,
    /// Half-width of the 95% interval on the slope.
    pub half_width: f64,
    pub window: (usize, usize),
    pub t_range: (f64, f64),
}

impl FitRecord {
    pub fn none() -> Self {
        FitRecord {
            kind: FitKind::None,
            slope: f64::NAN,
            rate_or_exponent: f64::NAN,
            intercept: f64::NAN,
            residual: f64::NAN,
            half_width: f64::NAN,
            window: (0, 0),
            t_range: (f64::NAN, f64::NAN),
        }
    }

    /// Fitted curve at `t`.
    pub fn predict(&self, t: f64) -> f64 {
        match self.kind {
            FitKind::Exponential => (self.intercept + self.slope * t).exp(),
            FitKind::Power => (self.intercept + self.slope * (1.0 + t).ln()).exp(),
            FitKind::None => f64::NAN,
        }
    }
}

/// Least-squares decay fit on `window`.
pub fn decay_fit(times: &[f64], values: &[f64], kind: FitKind, window: Range<usize>) -> Result<FitRecord> {
    if times.len() != values.len() {
        return invalid("times and values differ in length");
    }
    if kind == FitKind::None {
        return Ok(FitRecord::none());
    }
    if window.end > times.len() || window.len() < 5 {
        return invalid(format!(
            "fit window {:?} needs at least 5 points within the curve",
            window
        ));
    }
    let (t, v) = (&times[window.clone()], &values[window.clone()]);
    if let Some(bad) = v.iter().position(|a| !(*a > 0.0 && a.is_finite())) {
        return invalid(format!(
            "non-positive value {} at t = {} in the fit window; shrink the window above the noise floor",
            v[bad], t[bad]
        ));
    }
    let x: Vec<f64> = match kind {
        FitKind::Exponential => t.to_vec(),
        _ => t.iter().map(|a| (1.0 + a).ln()).collect(),
    };
    let y: Vec<f64> = v.iter().map(|a| a.ln()).collect();
    let f = linear_fit(&x, &y);
    Ok(FitRecord {
        kind,
        slope: f.slope,
        rate_or_exponent: -f.slope,
        intercept: f.intercept,
        residual: f.rms_residual,
        half_width: f.slope_half_width,
        window: (window.start, window.end),
        t_range: (t[0], t[t.len() - 1]),
    })
}

/// Indices from the first positive time in `[t_lo, t_hi]` up to (excluding)
/// the first value below `factor` times its noise estimate.
pub fn noise_window(times: &[f64], values: &[f64], noise: &[f64], factor: f64, t_lo: f64, t_hi: f64) -> Range<usize> {
    let start = times
        .iter()
        .position(|t| *t > 0.0 && *t >= t_lo)
        .unwrap_or(times.len());
    let mut end = start;
    while end < values.len() && times[end] <= t_hi && values[end] >= factor * noise[end] && values[end] > 0.0 {
        end += 1;
    }
    start..end
}

/// Measured decay curve with its estimator record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    /// Weighted L¹ distances.
    pub tv_values: Vec<f64>,
    /// Unweighted L¹ distances (the `φ ≡ 1` cross-check).
    pub l1_values: Vec<f64>,
    pub noise: Vec<f64>,
    pub clipped: Vec<f64>,
    pub phi_tag: String,
    pub weight_fingerprint: String,
    pub reference: String,
    pub binning: Binning,
    pub fit: FitRecord,
    /// Fit of the other family on the same window, for model comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alternative_fit: Option<FitRecord>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_exponential() {
        let t: Vec<f64> = (0..20).map(|i| 0.5 * i as f64).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let f = decay_fit(&t, &v, FitKind::Exponential, 0..20).unwrap();
        assert!((f.rate_or_exponent - 0.7).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert!((f.predict(2.0) - 3.0 * (-1.4f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn noiseless_power() {
        let t: Vec<f64> = (0..20).map(|i| 1.5f64.powi(i) - 1.0).collect();
        let v: Vec<f64> = t.iter().map(|t| (1.0 + t).powi(-2)).collect();
        let f = decay_fit(&t, &v, FitKind::Power, 0..20).unwrap();
        assert!((f.rate_or_exponent - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_or_nonpositive_windows() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let v = [1.0, 0.5, 0.0, 0.1, 0.1, 0.1];
        assert!(decay_fit(&t, &v, FitKind::Exponential, 0..4).is_err());
        assert!(decay_fit(&t, &v, FitKind::Exponential, 0..6).is_err());
    }

    #[test]
    fn window_stops_at_noise() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let v = [2.0, 1.0, 0.5, 0.02, 0.4];
        let n = [0.01; 5];
        assert_eq!(noise_window(&t, &v, &n, 3.0, 0.0, f64::INFINITY), 1..3);
        assert_eq!(noise_window(&t, &v, &n, 3.0, 2.0, 2.0), 2..3);
    }
}
