//! Collision frequency of the linear Boltzmann operator against a standard
//! Maxwellian background.

use statrs::function::gamma::ln_gamma;

use crate::numerics::norm2;

/// `Λ_γ(v) = ∫ |v - v*|^γ M(v*) dv*` for the standard Maxwellian in `d = v.len()`.
///
/// `|v - v*|²` is noncentral chi-square with `d` degrees of freedom and
/// noncentrality `|v|²`, so the fractional moment is the Poisson mixture
/// `Σⱼ Pois(j; |v|²/2) 2^{γ/2} Γ(d/2 + j + γ/2) / Γ(d/2 + j)`.
pub fn collision_frequency(v: &[f64], gamma_hard: f64) -> f64 {
    if gamma_hard == 0.0 {
        return 1.0;
    }
    let half_d = v.len() as f64 / 2.0;
    let lam = norm2(v) / 2.0;
    let g2 = gamma_hard / 2.0;
    let term = |j: f64| {
        let log_pois = if lam > 0.0 {
            -lam + j * lam.ln() - ln_gamma(j + 1.0)
        } else if j == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        };
        (log_pois + ln_gamma(half_d + j + g2) - ln_gamma(half_d + j)).exp()
    };
    let centre = lam.floor();
    let spread = 12.0 * lam.sqrt() + 40.0;
    let lo = (centre - spread).max(0.0) as usize;
    let hi = (centre + spread) as usize;
    let sum: f64 = (lo..=hi).map(|j| term(j as f64)).sum();
    2f64.powf(g2) * sum
}

/// `E|v*|^γ` under the standard Maxwellian in dimension `d`.
pub fn maxwellian_abs_moment(d: usize, gamma: f64) -> f64 {
    let h = d as f64 / 2.0;
    2f64.powf(gamma / 2.0) * (ln_gamma(h + gamma / 2.0) - ln_gamma(h)).exp()
}

/// Upper bound `(d + |v|²)^{γ/2} ≥ Λ_γ(v)` from Jensen's inequality.
pub fn collision_frequency_bound(v: &[f64], gamma_hard: f64) -> f64 {
    (v.len() as f64 + norm2(v)).powf(gamma_hard / 2.0)
}
