//! Concave rate functions `V` and the map `H_V(t) = ∫₁ᵗ ds / V(s)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::adaptive_simpson;

const HV_TOL: f64 = 1e-9;
const CONCAVITY_TOL: f64 = 1e-12;

/// A concave, increasing rate function on `[1, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConcaveRateFn {
    /// `V(s) = 1 + s^xi`.
    Power { xi: f64 },
    /// Piecewise-linear interpolation of `(s, V(s))` nodes, extended linearly
    /// past the last node with the last slope.
    Tabulated { nodes: Vec<(f64, f64)> },
}

impl ConcaveRateFn {
    pub fn power(xi: f64) -> Result<Self> {
        let v = ConcaveRateFn::Power { xi };
        v.validate()?;
        Ok(v)
    }

    pub fn tabulated(nodes: Vec<(f64, f64)>) -> Result<Self> {
        let v = ConcaveRateFn::Tabulated { nodes };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConcaveRateFn::Power { xi } => {
                if !(*xi > 0.0 && *xi < 1.0) {
                    return invalid(format!("xi must satisfy 0 < xi < 1 (got {xi})"));
                }
            }
            ConcaveRateFn::Tabulated { nodes } => {
                if nodes.len() < 2 {
                    return invalid("tabulated V needs at least two nodes");
                }
                if nodes[0].0 != 1.0 {
                    return invalid(format!(
                        "tabulated V must start at s = 1 (got {})",
                        nodes[0].0
                    ));
                }
                if !(nodes[0].1 >= 1.0) {
                    return invalid(format!("V(1) must be >= 1 (got {})", nodes[0].1));
                }
                let mut prev_slope = f64::INFINITY;
                for w in nodes.windows(2) {
                    let (s0, v0) = w[0];
                    let (s1, v1) = w[1];
                    if !(s1 > s0) || !s1.is_finite() {
                        return invalid("tabulated V nodes must have strictly increasing s");
                    }
                    if !(v1 > v0) || !v1.is_finite() {
                        return invalid("tabulated V must be strictly increasing");
                    }
                    let slope = (v1 - v0) / (s1 - s0);
                    if slope - prev_slope > CONCAVITY_TOL {
                        return invalid(format!("tabulated V is not concave near s = {s0}"));
                    }
                    prev_slope = slope;
                }
            }
        }
        Ok(())
    }

    /// Evaluates `V(s)` for `s ≥ 1`.
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ConcaveRateFn::Power { xi } => 1.0 + s.powf(*xi),
            ConcaveRateFn::Tabulated { nodes } => {
                let n = nodes.len();
                let idx = match nodes.iter().position(|(si, _)| *si > s) {
                    Some(0) => 0,
                    Some(i) => i - 1,
                    None => n - 2,
                };
                let (s0, v0) = nodes[idx];
                let (s1, v1) = nodes[idx + 1];
                v0 + (v1 - v0) * (s - s0) / (s1 - s0)
            }
        }
    }

    fn breakpoints(&self) -> &[(f64, f64)] {
        match self {
            ConcaveRateFn::Power { .. } => &[],
            ConcaveRateFn::Tabulated { nodes } => nodes,
        }
    }

    /// `∫_a^b ds / V(s)` for `1 ≤ a ≤ b`, split at table nodes.
    fn segment(&self, a: f64, b: f64, tol: f64) -> f64 {
        let f = |s: f64| 1.0 / self.eval(s);
        let mut cuts = vec![a];
        cuts.extend(
            self.breakpoints()
                .iter()
                .map(|(s, _)| *s)
                .filter(|s| *s > a && *s < b),
        );
        cuts.push(b);
        let pieces = (cuts.len() - 1) as f64;
        cuts.windows(2)
            .map(|w| adaptive_simpson(&f, w[0], w[1], tol / pieces))
            .sum()
    }
}

/// `H_V(t) = ∫₁ᵗ ds / V(s)`, absolute error below 1e-9.
pub fn hv(v: &ConcaveRateFn, t: f64) -> Result<f64> {
    v.validate()?;
    if !(t >= 1.0) || !t.is_finite() {
        return invalid(format!("hv requires finite t >= 1 (got {t})"));
    }
    Ok(hv_unchecked(v, t))
}

pub(crate) fn hv_unchecked(v: &ConcaveRateFn, t: f64) -> f64 {
    // doubling segments keep the per-piece integrand variation bounded
    let mut acc = 0.0;
    let mut a = 1.0;
    let n_seg = (t.log2().ceil() as usize).max(1) as f64;
    while a < t {
        let b = (2.0 * a).min(t);
        acc += v.segment(a, b, 0.1 * HV_TOL / n_seg);
        a = b;
    }
    acc
}

/// Inverse of [`hv`]: the `t ≥ 1` with `H_V(t) = u`.
pub fn hv_inverse(v: &ConcaveRateFn, u: f64) -> Result<f64> {
    v.validate()?;
    if !(u >= 0.0) || !u.is_finite() {
        return invalid(format!("hv_inverse requires finite u >= 0 (got {u})"));
    }
    Ok(hv_inverse_unchecked(v, u))
}

pub(crate) fn hv_inverse_unchecked(v: &ConcaveRateFn, u: f64) -> f64 {
    if u == 0.0 {
        return 1.0;
    }
    let seg_tol = 1e-12;
    let mut acc = 0.0;
    let mut a: f64 = 1.0;
    // bracket expansion by doubling
    loop {
        let b = 2.0 * a;
        if !b.is_finite() {
            return f64::INFINITY;
        }
        let seg = v.segment(a, b, seg_tol);
        if acc + seg >= u {
            break;
        }
        acc += seg;
        a = b;
    }
    // safeguarded Newton inside [a, 2a]; dH/dt = 1/V(t)
    let target = u - acc;
    let (mut lo, mut hi) = (a, 2.0 * a);
    let mut t = a + (hi - lo) * 0.5;
    for _ in 0..200 {
        let g = v.segment(a, t, seg_tol) - target;
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        if g.abs() <= 1e-15 * u.max(1.0) || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let newton = t - g * v.eval(t);
        t = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_case() {
        let v = ConcaveRateFn::tabulated(vec![(1.0, 1.0), (10.0, 10.0)]).unwrap();
        assert!((hv(&v, std::f64::consts::E).unwrap() - 1.0).abs() < 1e-9);
        let t = hv_inverse(&v, 1.0).unwrap();
        assert!((t - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_concave_table() {
        let err = ConcaveRateFn::tabulated(vec![(1.0, 1.0), (2.0, 2.0), (3.0, 4.0)]);
        assert!(err.is_err());
        let err = ConcaveRateFn::tabulated(vec![(1.0, 0.5), (2.0, 2.0)]);
        assert!(err.is_err());
        let err = ConcaveRateFn::tabulated(vec![(1.0, 2.0), (2.0, 1.5)]);
        assert!(err.is_err());
    }

    #[test]
    fn hv_zero_at_one_and_inverse_zero() {
        let v = ConcaveRateFn::power(0.5).unwrap();
        assert_eq!(hv(&v, 1.0).unwrap(), 0.0);
        assert_eq!(hv_inverse(&v, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let v = ConcaveRateFn::power(0.5).unwrap();
        assert!(hv(&v, 0.5).is_err());
        assert!(hv_inverse(&v, -1.0).is_err());
        assert!(ConcaveRateFn::power(1.0).is_err());
    }
}
