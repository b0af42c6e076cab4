//! Measured decay against a theoretical envelope.

use serde::Serialize;

use super::fit::{DecayCurve, FitKind};
use crate::error::{Error, Result};
use crate::rate_calculus::RateBound;
use crate::verification::DriftReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// The bound lies above every measurement past the noise floor.
    Dominates,
    Violated,
    /// No measurement lies above the noise floor.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub verdict: Verdict,
    /// Initial weighted distance the bound is scaled by.
    pub initial_distance: f64,
    pub times: Vec<f64>,
    pub measured: Vec<f64>,
    pub predicted: Vec<f64>,
    /// `measured / predicted`.
    pub ratio: Vec<f64>,
    pub bound: RateBound,
    /// Geometric bounds: `λ_theory ≤ λ̂ + half-width`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_consistent: Option<bool>,
    pub fitted: f64,
    pub fitted_half_width: f64,
}

/// Compares `curve` with `bound(t) · curve(0)` at every time at or above
/// three times the noise estimate. Refuses when the drift certificate
/// behind the bound failed.
pub fn compare_to_theory(curve: &DecayCurve, bound: &RateBound, drift: Option<&DriftReport>) -> Result<Comparison> {
    if let Some(r) = drift {
        if !r.passed {
            return Err(Error::NoCertifiedConstants(format!(
                "drift check for weight `{}` did not pass: {}",
                r.weight.tag,
                r.reason.clone().unwrap_or_else(|| "margin below tolerance".into())
            )));
        }
    }
    if curve.fit.kind == FitKind::None {
        return Err(Error::InvalidInput("curve has no fit".into()));
    }
    let d0 = curve.tv_values[0];
    let (mut times, mut measured, mut predicted, mut ratio) = (vec![], vec![], vec![], vec![]);
    for i in 0..curve.times.len() {
        if curve.tv_values[i] < 3.0 * curve.noise[i] {
            continue;
        }
        let p = bound.eval(curve.times[i]) * d0;
        times.push(curve.times[i]);
        measured.push(curve.tv_values[i]);
        predicted.push(p);
        ratio.push(curve.tv_values[i] / p);
    }
    let verdict = if times.is_empty() {
        Verdict::Inconclusive
    } else if measured.iter().zip(&predicted).all(|(m, p)| p >= m) {
        Verdict::Dominates
    } else {
        Verdict::Violated
    };
    let rate_consistent = bound
        .lambda()
        .filter(|_| curve.fit.kind == FitKind::Exponential)
        .map(|l| l <= curve.fit.rate_or_exponent + curve.fit.half_width);
    Ok(Comparison {
        verdict,
        initial_distance: d0,
        times,
        measured,
        predicted,
        ratio,
        bound: bound.clone(),
        rate_consistent,
        fitted: curve.fit.rate_or_exponent,
        fitted_half_width: curve.fit.half_width,
    })
}
