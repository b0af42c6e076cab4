//! Closed-form constants of the Doeblin, Harris and subgeometric Harris
//! theorems.
//!
//! All functions here are pure. Geometric bounds carry `(C, λ)` with envelope
//! `C e^{-λt}`; subgeometric bounds carry the rate function `V` and evaluate
//! `C μ(φ) / H_V⁻¹(t) + C / V(H_V⁻¹(t))`.

mod hv;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use hv::{hv, hv_inverse, ConcaveRateFn};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoeblinInput {
    pub alpha: f64,
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarrisInput {
    pub gamma: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub tau: f64,
    pub alpha0: f64,
    pub gamma0: f64,
}

/// Continuous-time drift constants for `L*φ ≤ -ζφ + D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftConstants {
    pub zeta: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub tau: f64,
}

/// Discrete-time drift constants `S_τ φ ≤ γ φ + K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDrift {
    pub gamma: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// The looser constant `D/ζ`.
    #[serde(rename = "K_loose")]
    pub k_loose: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub theorem: String,
    pub inputs: BTreeMap<String, f64>,
    /// Set when the constants reproduce a published formula whose `C` is not
    /// a norm-equivalence constant.
    pub verbatim: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub caveat: Option<String>,
}

impl Provenance {
    fn new(theorem: &str, inputs: &[(&str, f64)]) -> Self {
        Self {
            theorem: theorem.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            verbatim: false,
            caveat: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateBound {
    Geometric {
        #[serde(rename = "C")]
        c: f64,
        lambda: f64,
        provenance: Provenance,
    },
    Subgeometric {
        #[serde(rename = "C")]
        c: f64,
        mu_phi: f64,
        #[serde(rename = "V")]
        v: ConcaveRateFn,
        provenance: Provenance,
    },
}

impl RateBound {
    pub fn c(&self) -> f64 {
        match self {
            RateBound::Geometric { c, .. } | RateBound::Subgeometric { c, .. } => *c,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            RateBound::Geometric { lambda, .. } => Some(*lambda),
            RateBound::Subgeometric { .. } => None,
        }
    }

    pub fn provenance(&self) -> &Provenance {
        match self {
            RateBound::Geometric { provenance, .. }
            | RateBound::Subgeometric { provenance, .. } => provenance,
        }
    }

    /// Evaluates the envelope at time `t`; negative times are clamped to 0.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            RateBound::Geometric { c, lambda, .. } => c * (-lambda * t).exp(),
            RateBound::Subgeometric { c, mu_phi, v, .. } => {
                let s = hv::hv_inverse_unchecked(v, t);
                if s.is_infinite() {
                    return 0.0;
                }
                c * mu_phi / s + c / v.eval(s)
            }
        }
    }
}

fn check_open_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        invalid(format!("{name} must satisfy 0 < {name} < 1 (got {x})"))
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be finite and > 0 (got {x})"))
    }
}

fn geometric_from_alpha(alpha: f64, tau: f64, provenance: Provenance) -> RateBound {
    RateBound::Geometric {
        c: 1.0 / (1.0 - alpha),
        lambda: -(-alpha).ln_1p() / tau,
        provenance,
    }
}

/// Doeblin constants `C = 1/(1-α)`, `λ = -log(1-α)/τ`.
pub fn doeblin_rate(input: DoeblinInput) -> Result<RateBound> {
    check_open_unit("alpha", input.alpha)?;
    check_positive("tau", input.tau)?;
    let prov = Provenance::new("doeblin", &[("alpha", input.alpha), ("tau", input.tau)]);
    Ok(geometric_from_alpha(input.alpha, input.tau, prov))
}

/// Converts `L*φ ≤ -ζφ + D` into `S_τφ ≤ γφ + K` with `γ = e^{-ζτ}`,
/// `K = (D/ζ)(1 - e^{-ζτ})`.
pub fn drift_to_discrete(input: DriftConstants) -> Result<DiscreteDrift> {
    check_positive("zeta", input.zeta)?;
    check_positive("tau", input.tau)?;
    if !(input.d >= 0.0) || !input.d.is_finite() {
        return invalid(format!("D must be finite and >= 0 (got {})", input.d));
    }
    let x = input.zeta * input.tau;
    let k_loose = input.d / input.zeta;
    Ok(DiscreteDrift {
        gamma: (-x).exp(),
        k: k_loose * -(-x).exp_m1(),
        k_loose,
    })
}

/// Harris constants in their published form:
/// `β = α₀/K`, `ᾱ = min{α + α₀, (2 + Rβ(2-γ₀))/(2 + Rβ)}`, `C = 1 - ᾱ`,
/// `λ = -log(1-ᾱ)/τ`.
pub fn harris_rate(input: HarrisInput) -> Result<RateBound> {
    let HarrisInput {
        gamma,
        k,
        alpha,
        r,
        tau,
        alpha0,
        gamma0,
    } = input;
    check_open_unit("gamma", gamma)?;
    check_open_unit("alpha", alpha)?;
    check_positive("tau", tau)?;
    if !(k >= 0.0) || !k.is_finite() {
        return invalid(format!("K must be finite and >= 0 (got {k})"));
    }
    if k == 0.0 {
        return doeblin_rate(DoeblinInput { alpha, tau });
    }
    if !(alpha0 > 0.0 && alpha0 < alpha) {
        return invalid(format!(
            "alpha0 must satisfy 0 < alpha0 < alpha = {alpha} (got {alpha0})"
        ));
    }
    if !(r > 2.0 * k / (1.0 - alpha)) {
        return invalid(format!(
            "R must satisfy R > 2K/(1 - alpha) = {} (got {r})",
            2.0 * k / (1.0 - alpha)
        ));
    }
    let g0_min = gamma + 2.0 * k / r;
    if !(gamma0 >= g0_min && gamma0 < 1.0) {
        return invalid(format!(
            "gamma0 must satisfy gamma + 2K/R = {g0_min} <= gamma0 < 1 (got {gamma0})"
        ));
    }
    let beta = alpha0 / k;
    let second = (2.0 + r * beta * (2.0 - gamma0)) / (2.0 + r * beta);
    let alpha_bar = (alpha + alpha0).min(second);
    if alpha_bar >= 1.0 {
        return Err(Error::ConstantsOutOfRange(format!(
            "alpha_bar = min(alpha + alpha0, (2 + R beta (2 - gamma0))/(2 + R beta)) = {alpha_bar} >= 1, \
             so log(1 - alpha_bar) is undefined; the published choice C = 1 - alpha_bar is \
             reproduced verbatim and no correction is guessed"
        )));
    }
    let mut prov = Provenance::new(
        "harris",
        &[
            ("gamma", gamma),
            ("K", k),
            ("alpha", alpha),
            ("R", r),
            ("tau", tau),
            ("alpha0", alpha0),
            ("gamma0", gamma0),
            ("beta", beta),
            ("alpha_bar", alpha_bar),
        ],
    );
    prov.verbatim = true;
    prov.caveat = Some(
        "C = 1 - alpha_bar reproduces the published formula; it is below 1 and must not be \
         read as a norm-equivalence constant"
            .into(),
    );
    Ok(RateBound::Geometric {
        c: 1.0 - alpha_bar,
        lambda: -(-alpha_bar).ln_1p() / tau,
        provenance: prov,
    })
}

/// Subgeometric envelope `C μ(φ)/H_V⁻¹(t) + C/V(H_V⁻¹(t))`.
pub fn subgeometric_envelope(v: ConcaveRateFn, c: f64, mu_phi: f64) -> Result<RateBound> {
    v.validate()?;
    check_positive("C", c)?;
    if !(mu_phi >= 1.0) || !mu_phi.is_finite() {
        return invalid(format!("mu_phi must be finite and >= 1 (got {mu_phi})"));
    }
    let mut inputs = vec![("C", c), ("mu_phi", mu_phi)];
    if let ConcaveRateFn::Power { xi } = v {
        inputs.push(("xi", xi));
    }
    Ok(RateBound::Subgeometric {
        c,
        mu_phi,
        v,
        provenance: Provenance::new("subgeometric_harris", &inputs),
    })
}

/// Degenerate-scattering constants with `α_eff = β κ² e^{-τ‖σ‖∞}`:
/// `C = 1/(1-α_eff)`, `λ = -log(1-α_eff)/τ`.
pub fn degenerate_boltzmann_rate(
    beta: f64,
    kappa: f64,
    tau: f64,
    sigma_inf: f64,
) -> Result<RateBound> {
    check_open_unit("beta", beta)?;
    check_positive("kappa", kappa)?;
    check_positive("tau", tau)?;
    if !(sigma_inf >= 0.0) || sigma_inf.is_nan() {
        return invalid(format!("sigma_inf must be >= 0 (got {sigma_inf})"));
    }
    let alpha_eff = beta * kappa * kappa * (-tau * sigma_inf).exp();
    if !(alpha_eff > 0.0 && alpha_eff < 1.0) {
        return invalid(format!(
            "effective alpha = beta kappa^2 exp(-tau sigma_inf) must lie in (0, 1) (got {alpha_eff})"
        ));
    }
    let prov = Provenance::new(
        "degenerate_boltzmann",
        &[
            ("beta", beta),
            ("kappa", kappa),
            ("tau", tau),
            ("sigma_inf", sigma_inf),
            ("alpha_eff", alpha_eff),
        ],
    );
    Ok(geometric_from_alpha(alpha_eff, tau, prov))
}
