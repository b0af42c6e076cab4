//! Lyapunov weights `φ ≥ 1`, one family per model regime.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::boundary::{first_collision_time, Geometry};
use super::potential::PotentialSpec;
use super::spec::{ModelSpec, PsiSpec, SignalSpec};
use super::PhaseState;
use crate::error::{invalid, Error, Result};
use crate::numerics::{bracket, dot, gauss_legendre_on, norm, norm2};

/// Value and derivatives of a weight at one phase-space point.
#[derive(Clone, Debug)]
pub struct WeightDerivs {
    pub value: f64,
    pub grad_x: Vec<f64>,
    pub grad_v: Vec<f64>,
    pub lap_v: f64,
}

type CustomFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Constant,
    BgkR2 { pot: PotentialSpec },
    BgkR3 { pot: PotentialSpec, xi: f64 },
    KfpR2 { pot: PotentialSpec, chi: f64, eps: f64, a: f64 },
    KfpR3 { k: f64 },
    BoltzmannR1 { pot: PotentialSpec },
    BoltzmannR2 { pot: PotentialSpec },
    BoltzmannR3 { pot: PotentialSpec, alpha: f64, beta: f64 },
    KnudsenCl { geom: Geometry, eps: f64 },
    KnudsenMaxwell { geom: Geometry, alpha1: f64 },
    AbsorbingExp { geom: Geometry },
    AbsorbingPoly { geom: Geometry, xi: f64 },
    RtMoment { signal: SignalSpec, psi: PsiSpec, gamma: f64, beta: f64 },
    RtPosition { omega: f64 },
    FhnGauss { chi: f64 },
    Custom(CustomFn),
}

/// An evaluatable Lyapunov weight with its parameter record.
#[derive(Clone)]
pub struct WeightFn {
    tag: String,
    kind: Kind,
    params: BTreeMap<String, f64>,
    provenance: String,
    note: Option<String>,
}

/// Serialisable description of a weight.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WeightRecord {
    pub tag: String,
    pub params: BTreeMap<String, f64>,
    pub provenance: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl fmt::Debug for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFn")
            .field("tag", &self.tag)
            .field("params", &self.params)
            .finish()
    }
}

/// Regime tags accepted by [`weight_catalog`] for a model.
pub fn valid_tags(model: &ModelSpec) -> Vec<&'static str> {
    let mut tags = vec!["constant"];
    tags.extend(match model {
        ModelSpec::LinearBgk { .. } => vec!["bgk_r1", "bgk_r2", "bgk_r3"],
        ModelSpec::KineticFokkerPlanck { .. } => vec!["kfp_r2", "kfp_r3"],
        ModelSpec::LinearBoltzmann { .. } => vec!["boltzmann_r1", "boltzmann_r2", "boltzmann_r3"],
        ModelSpec::KnudsenGas { .. } => vec![
            "knudsen_maxwell",
            "knudsen_cl",
            "absorbing_exp",
            "absorbing_poly",
        ],
        ModelSpec::DegenerateBoltzmann { .. } => vec!["degenerate_tv"],
        ModelSpec::RunTumble { .. } => vec!["rt_exp_moment", "rt_exp_position"],
        ModelSpec::FitzHughNagumo { .. } => vec!["fhn_gauss"],
    });
    tags
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// Constants of the run-and-tumble drift certificate.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct RunTumbleConstants {
    /// `χ/(1+χ)`.
    pub beta: f64,
    /// Largest admissible `γ`.
    pub gamma_max: f64,
    pub lambda_tilde: f64,
    pub k: u32,
    pub xi: f64,
    /// Lower bound of `|∇M|` outside the ball of radius `r_a3`.
    pub c_tilde: f64,
    pub r_a3: f64,
    pub grad_sup: f64,
}

/// Mean of `ψ(g s) g s` for `s` the projection of a uniform point of the
/// velocity ball of radius `r0` onto a fixed unit vector.
fn projected_mean(psi: PsiSpec, g: f64, r0: f64, d: usize) -> f64 {
    // s = r0 sin θ, density ∝ cos^d θ on (-π/2, π/2); halves split at the kink of sign
    let half = 0.5 * std::f64::consts::PI;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in [(-half, 0.0), (0.0, half)] {
        let (th, w) = gauss_legendre_on(64, a, b);
        for (t, wi) in th.iter().zip(&w) {
            let dens = t.cos().powi(d as i32);
            let s = r0 * t.sin();
            num += wi * dens * psi.eval(g * s) * g * s;
            den += wi * dens;
        }
    }
    num / den
}

/// Computes `β = χ/(1+χ)`, the exponent `k` and constant `λ̃` of the moment
/// hypothesis, and the admissible `γ` range
/// `γ ≤ min{λ̃χ(1-χ)ξ/(8(1+χ)), (1+χ)/(2(2+χ)R₀‖∇M‖∞)}`.
pub fn run_tumble_constants(model: &ModelSpec, r_a3: f64) -> Result<RunTumbleConstants> {
    let ModelSpec::RunTumble {
        chi,
        psi,
        signal,
        r0,
        d,
    } = model
    else {
        return invalid("run_tumble_constants requires a run_tumble model");
    };
    if !(r_a3 >= 0.0) {
        return invalid("R must be >= 0");
    }
    let (chi, r0) = (*chi, *r0);
    let grad_sup = signal.grad_sup();
    let k: u32 = match psi {
        PsiSpec::Sign => 1,
        PsiSpec::Tanh => 2,
    };
    // ratio is non-increasing in g for both shipped ψ; scan to be safe
    let mut lambda_tilde = f64::INFINITY;
    for i in 1..=200 {
        let g = grad_sup * i as f64 / 200.0;
        let ratio = projected_mean(*psi, g, r0, *d) / g.powi(k as i32);
        lambda_tilde = lambda_tilde.min(ratio);
    }
    let c_tilde = signal.grad_norm_at(r_a3);
    let xi = match k.cmp(&2) {
        std::cmp::Ordering::Less => c_tilde.powi(k as i32 - 2),
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Greater => grad_sup.powi(k as i32 - 2),
    };
    if k < 2 && c_tilde <= 0.0 {
        return invalid("R must be > 0 so that |grad M| is bounded below outside B(0, R)");
    }
    let g1 = lambda_tilde * chi * (1.0 - chi) * xi / (8.0 * (1.0 + chi));
    let g2 = (1.0 + chi) / (2.0 * (2.0 + chi) * r0 * grad_sup);
    Ok(RunTumbleConstants {
        beta: chi / (1.0 + chi),
        gamma_max: g1.min(g2),
        lambda_tilde,
        k,
        xi,
        c_tilde,
        r_a3,
        grad_sup,
    })
}

/// Returns the weight for `model` and regime `tag`; free parameters come from
/// `params` with documented defaults.
pub fn weight_catalog(
    model: &ModelSpec,
    tag: &str,
    params: &BTreeMap<String, f64>,
) -> Result<WeightFn> {
    model.validate()?;
    let valid = valid_tags(model);
    if !valid.contains(&tag) {
        return Err(Error::UnknownRegime {
            tag: tag.to_string(),
            valid: valid.iter().map(|s| s.to_string()).collect(),
        });
    }
    let pot = model.potential();
    let mut rec: BTreeMap<String, f64> = BTreeMap::new();
    let mut note = None;
    let (kind, provenance): (Kind, &str) = match (tag, model) {
        ("constant", _) | ("bgk_r1", _) | ("degenerate_tv", _) => {
            (Kind::Constant, "total variation weight phi = 1")
        }
        ("bgk_r2", _) => {
            rec.insert("coef_xv".into(), 0.25);
            rec.insert("coef_xx".into(), 0.125);
            (
                Kind::BgkR2 { pot },
                "linear BGK confining regime: phi = 1 + H + x.v/4 + |x|^2/8",
            )
        }
        ("bgk_r3", _) => {
            let xi = param(params, "xi", 0.5);
            if !(xi > 0.0 && xi < 1.0) {
                return invalid(format!("xi must lie in (0, 1) (got {xi})"));
            }
            rec.insert("xi".into(), xi);
            note = Some("uses (1 + varphi)^xi so that phi >= 1".to_string());
            (
                Kind::BgkR3 { pot, xi },
                "linear BGK weak-confinement regime: phi = (1 + H + x.v/4 + |x|^2/8)^xi",
            )
        }
        ("kfp_r2", ModelSpec::KineticFokkerPlanck { gamma_exp, .. }) => {
            let chi = param(params, "chi", 0.1);
            let eps = param(params, "eps", 0.1);
            let a = param(params, "v_coeff", 1.0);
            if !(chi > 0.0) {
                return invalid(format!("chi must be > 0 (got {chi})"));
            }
            if !(a > 0.0) {
                return invalid(format!("v_coeff must be > 0 (got {a})"));
            }
            if !(eps >= 0.0 && eps * eps <= 4.0 * a / gamma_exp) {
                return invalid(format!(
                    "eps must satisfy 0 <= eps <= 2 sqrt(v_coeff/gamma_exp) so that phi >= 1 (got {eps})"
                ));
            }
            rec.insert("chi".into(), chi);
            rec.insert("eps".into(), eps);
            rec.insert("v_coeff".into(), a);
            if a != 1.0 {
                note = Some(format!("velocity coefficient {a} in place of 1"));
            }
            (
                Kind::KfpR2 { pot, chi, eps, a },
                "kinetic Fokker-Planck: phi = exp(chi (a|v|^2 + Phi + eps v.grad<x>)), a = v_coeff",
            )
        }
        ("kfp_r3", _) => {
            let k = param(params, "k", 1.0);
            if !(k >= 1.0) {
                return invalid(format!("k must be >= 1 (got {k})"));
            }
            rec.insert("k".into(), k);
            (
                Kind::KfpR3 { k },
                "kinetic Fokker-Planck polynomial regime: phi = (1 + |x|^2 + |v|^2)^k",
            )
        }
        ("boltzmann_r1", _) => (
            Kind::BoltzmannR1 { pot },
            "linear Boltzmann torus regime: phi = 1 + H",
        ),
        ("boltzmann_r2", _) => (
            Kind::BoltzmannR2 { pot },
            "linear Boltzmann confining regime: phi = 1 + H + |x|^2",
        ),
        ("boltzmann_r3", _) => {
            let alpha = param(params, "alpha", 0.1);
            let beta = param(params, "beta", 0.1);
            if !(alpha > 0.0 && beta > 0.0 && 4.0 * alpha * alpha < beta) {
                return invalid("boltzmann_r3 needs alpha, beta > 0 with 4 alpha^2 < beta");
            }
            rec.insert("alpha".into(), alpha);
            rec.insert("beta".into(), beta);
            note = Some("adds 1 so that phi >= 1".to_string());
            (
                Kind::BoltzmannR3 { pot, alpha, beta },
                "linear Boltzmann weak-confinement regime: phi = 1 + H + alpha x.v/<x> + beta <x>",
            )
        }
        ("knudsen_cl", ModelSpec::KnudsenGas { geometry, .. }) => {
            let eps = param(params, "eps", 0.25);
            if !(eps > 0.0 && eps < 0.5) {
                return invalid(format!("eps must lie in (0, 1/2) (got {eps})"));
            }
            rec.insert("eps".into(), eps);
            (
                Kind::KnudsenCl {
                    geom: geometry.clone(),
                    eps,
                },
                "Cercignani-Lampis walls: phi = (1 + tau(x,v) + sqrt|v|)^(d - eps)",
            )
        }
        ("knudsen_maxwell", ModelSpec::KnudsenGas { geometry, .. }) => {
            let alpha1 = param(params, "alpha1", 0.5);
            if !(alpha1 > 0.0 && alpha1 < 1.0) {
                return invalid(format!("alpha1 must lie in (0, 1) (got {alpha1})"));
            }
            rec.insert("alpha1".into(), alpha1);
            (
                Kind::KnudsenMaxwell {
                    geom: geometry.clone(),
                    alpha1,
                },
                "Maxwell walls: phi = b^d log(b)^(-1.6 d/(d+1)), b = e^2 + diam/(alpha1 |v|) - tau(x,-v)",
            )
        }
        ("absorbing_exp", ModelSpec::KnudsenGas { geometry, .. }) => (
            Kind::AbsorbingExp {
                geom: geometry.clone(),
            },
            "absorbing walls: phi = exp(tau(x,v))",
        ),
        ("absorbing_poly", ModelSpec::KnudsenGas { geometry, .. }) => {
            let xi = param(params, "xi", 2.0);
            if !(xi > 1.0) {
                return invalid(format!("xi must be > 1 (got {xi})"));
            }
            rec.insert("xi".into(), xi);
            (
                Kind::AbsorbingPoly {
                    geom: geometry.clone(),
                    xi,
                },
                "absorbing walls: phi = (1 + tau(x,v))^xi",
            )
        }
        (
            "rt_exp_moment",
            ModelSpec::RunTumble {
                psi, signal, ..
            },
        ) => {
            let consts = run_tumble_constants(model, param(params, "R", 1.0))?;
            let gamma = param(params, "gamma", consts.gamma_max);
            if !(gamma > 0.0 && gamma <= consts.gamma_max * (1.0 + 1e-12)) {
                return invalid(format!(
                    "gamma must lie in (0, {}] (got {gamma})",
                    consts.gamma_max
                ));
            }
            rec.insert("gamma".into(), gamma);
            rec.insert("beta".into(), consts.beta);
            rec.insert("gamma_max".into(), consts.gamma_max);
            rec.insert("lambda_tilde".into(), consts.lambda_tilde);
            rec.insert("k".into(), consts.k as f64);
            rec.insert("xi".into(), consts.xi);
            rec.insert("R".into(), consts.r_a3);
            note = Some("scaled by 2 so that phi >= 1".to_string());
            (
                Kind::RtMoment {
                    signal: *signal,
                    psi: *psi,
                    gamma,
                    beta: consts.beta,
                },
                "run and tumble: phi = 2 (1 - gamma m - beta gamma psi(m) m) exp(-gamma M(x)), m = v.grad M",
            )
        }
        ("rt_exp_position", _) => {
            let omega = param(params, "omega", 0.1);
            if !(omega > 0.0) {
                return invalid(format!("omega must be > 0 (got {omega})"));
            }
            rec.insert("omega".into(), omega);
            note = Some("positive omega so that phi >= 1".to_string());
            (
                Kind::RtPosition { omega },
                "run and tumble: phi = exp(omega <x>)",
            )
        }
        ("fhn_gauss", _) => {
            let chi = param(params, "chi", 0.75);
            if !(chi > 0.0) {
                return invalid(format!("chi must be > 0 (got {chi})"));
            }
            rec.insert("chi".into(), chi);
            note = Some("reads |v^2| as |v|^2".to_string());
            (
                Kind::FhnGauss { chi },
                "FitzHugh-Nagumo: phi = exp(chi (|x|^2 + |v|^2))",
            )
        }
        _ => {
            return Err(Error::UnknownRegime {
                tag: tag.to_string(),
                valid: valid.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    Ok(WeightFn {
        tag: tag.to_string(),
        kind,
        params: rec,
        provenance: provenance.to_string(),
        note,
    })
}

fn bgk_varphi(pot: &PotentialSpec, x: &[f64], v: &[f64]) -> f64 {
    pot.value(x) + 0.5 * norm2(v) + 0.25 * dot(x, v) + 0.125 * norm2(x)
}

fn bgk_varphi_derivs(pot: &PotentialSpec, x: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let g = pot.grad(x);
    let gx = (0..x.len())
        .map(|i| g[i] + 0.25 * v[i] + 0.25 * x[i])
        .collect();
    let gv = (0..x.len()).map(|i| v[i] + 0.25 * x[i]).collect();
    (gx, gv)
}

/// Backward exit time `τ̃(x, -v)`; positions are assumed inside the closed domain.
fn tau_back(geom: &Geometry, x: &[f64], v: &[f64]) -> f64 {
    let mv: Vec<f64> = v.iter().map(|a| -a).collect();
    first_collision_time(x, &mv, geom).unwrap_or(f64::NAN)
}

fn tau_fwd(geom: &Geometry, x: &[f64], v: &[f64]) -> f64 {
    first_collision_time(x, v, geom).unwrap_or(f64::NAN)
}

fn maxwell_base(geom: &Geometry, alpha1: f64, x: &[f64], v: &[f64]) -> f64 {
    E * E + geom.diameter() / (alpha1 * norm(v)) - tau_back(geom, x, v)
}

impl WeightFn {
    /// Wraps a user function; derivatives are taken by finite differences.
    pub fn custom(
        tag: &str,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        WeightFn {
            tag: tag.to_string(),
            kind: Kind::Custom(Arc::new(f)),
            params: BTreeMap::new(),
            provenance: "user supplied".to_string(),
            note: None,
        }
    }

    pub fn constant() -> Self {
        WeightFn {
            tag: "constant".into(),
            kind: Kind::Constant,
            params: BTreeMap::new(),
            provenance: "total variation weight phi = 1".into(),
            note: None,
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn record(&self) -> WeightRecord {
        WeightRecord {
            tag: self.tag.clone(),
            params: self.params.clone(),
            provenance: self.provenance.clone(),
            note: self.note.clone(),
        }
    }

    /// Hex SHA-256 of the weight record.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(&self.record()).expect("record serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant)
    }

    /// True when `φ` depends on the first-collision time and is only
    /// differentiable along free-flight lines.
    pub fn is_transport_only(&self) -> bool {
        matches!(
            self.kind,
            Kind::KnudsenCl { .. }
                | Kind::KnudsenMaxwell { .. }
                | Kind::AbsorbingExp { .. }
                | Kind::AbsorbingPoly { .. }
        )
    }

    pub fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        match &self.kind {
            Kind::Constant => 1.0,
            Kind::BgkR2 { pot } => 1.0 + bgk_varphi(pot, x, v),
            Kind::BgkR3 { pot, xi } => (1.0 + bgk_varphi(pot, x, v)).powf(*xi),
            Kind::KfpR2 { pot, chi, eps, a } => {
                let b = bracket(x);
                let phi = a * norm2(v) + pot.value(x) + eps * dot(v, x) / b;
                (chi * phi).exp()
            }
            Kind::KfpR3 { k } => (1.0 + norm2(x) + norm2(v)).powf(*k),
            Kind::BoltzmannR1 { pot } => 1.0 + pot.value(x) + 0.5 * norm2(v),
            Kind::BoltzmannR2 { pot } => 1.0 + pot.value(x) + 0.5 * norm2(v) + norm2(x),
            Kind::BoltzmannR3 { pot, alpha, beta } => {
                let b = bracket(x);
                1.0 + pot.value(x) + 0.5 * norm2(v) + alpha * dot(x, v) / b + beta * b
            }
            Kind::KnudsenCl { geom, eps } => {
                let d = geom.dim() as f64;
                (1.0 + tau_fwd(geom, x, v) + norm(v).sqrt()).powf(d - eps)
            }
            Kind::KnudsenMaxwell { geom, alpha1 } => {
                let d = geom.dim() as f64;
                let b = maxwell_base(geom, *alpha1, x, v);
                b.powf(d) * b.ln().powf(-1.6 * d / (d + 1.0))
            }
            Kind::AbsorbingExp { geom } => tau_fwd(geom, x, v).exp(),
            Kind::AbsorbingPoly { geom, xi } => (1.0 + tau_fwd(geom, x, v)).powf(*xi),
            Kind::RtMoment {
                signal,
                psi,
                gamma,
                beta,
            } => {
                let m = dot(v, &signal.grad(x));
                2.0 * (1.0 - gamma * m - beta * gamma * psi.eval(m) * m)
                    * (-gamma * signal.value(x)).exp()
            }
            Kind::RtPosition { omega } => (omega * bracket(x)).exp(),
            Kind::FhnGauss { chi } => (chi * (norm2(x) + norm2(v))).exp(),
            Kind::Custom(f) => f(x, v),
        }
    }

    pub fn eval_state(&self, z: &PhaseState) -> f64 {
        self.eval(&z.x, &z.v)
    }

    /// Analytic value, gradients and velocity Laplacian where available.
    pub fn analytic_derivs(&self, x: &[f64], v: &[f64]) -> Option<WeightDerivs> {
        let d = x.len();
        let df = d as f64;
        let value = self.eval(x, v);
        let out = |gx: Vec<f64>, gv: Vec<f64>, lap: f64| WeightDerivs {
            value,
            grad_x: gx,
            grad_v: gv,
            lap_v: lap,
        };
        match &self.kind {
            Kind::Constant => Some(out(vec![0.0; d], vec![0.0; d], 0.0)),
            Kind::BgkR2 { pot } => {
                let (gx, gv) = bgk_varphi_derivs(pot, x, v);
                Some(out(gx, gv, df))
            }
            Kind::BgkR3 { pot, xi } => {
                let base = 1.0 + bgk_varphi(pot, x, v);
                let (gx, gv) = bgk_varphi_derivs(pot, x, v);
                let c1 = xi * base.powf(xi - 1.0);
                let c2 = xi * (xi - 1.0) * base.powf(xi - 2.0);
                let lap = c2 * norm2(&gv) + c1 * df;
                Some(out(
                    gx.iter().map(|a| c1 * a).collect(),
                    gv.iter().map(|a| c1 * a).collect(),
                    lap,
                ))
            }
            Kind::KfpR2 { pot, chi, eps, a } => {
                let b = bracket(x);
                let xv = dot(x, v);
                let gp = pot.grad(x);
                // ∇ₓ(v·x/⟨x⟩) = v/⟨x⟩ - (x·v) x/⟨x⟩³
                let gphi_x: Vec<f64> = (0..d)
                    .map(|i| gp[i] + eps * (v[i] / b - xv * x[i] / (b * b * b)))
                    .collect();
                let gphi_v: Vec<f64> = (0..d).map(|i| 2.0 * a * v[i] + eps * x[i] / b).collect();
                let lap = value * (chi * chi * norm2(&gphi_v) + chi * 2.0 * a * df);
                Some(out(
                    gphi_x.iter().map(|a| chi * value * a).collect(),
                    gphi_v.iter().map(|a| chi * value * a).collect(),
                    lap,
                ))
            }
            Kind::KfpR3 { k } => {
                let q = 1.0 + norm2(x) + norm2(v);
                let c1 = 2.0 * k * q.powf(k - 1.0);
                let c2 = 4.0 * k * (k - 1.0) * q.powf(k - 2.0);
                Some(out(
                    x.iter().map(|a| c1 * a).collect(),
                    v.iter().map(|a| c1 * a).collect(),
                    c1 * df + c2 * norm2(v),
                ))
            }
            Kind::BoltzmannR1 { pot } => Some(out(pot.grad(x), v.to_vec(), df)),
            Kind::BoltzmannR2 { pot } => {
                let g = pot.grad(x);
                Some(out(
                    (0..d).map(|i| g[i] + 2.0 * x[i]).collect(),
                    v.to_vec(),
                    df,
                ))
            }
            Kind::BoltzmannR3 { pot, alpha, beta } => {
                let b = bracket(x);
                let xv = dot(x, v);
                let g = pot.grad(x);
                Some(out(
                    (0..d)
                        .map(|i| {
                            g[i] + alpha * (v[i] / b - xv * x[i] / (b * b * b)) + beta * x[i] / b
                        })
                        .collect(),
                    (0..d).map(|i| v[i] + alpha * x[i] / b).collect(),
                    df,
                ))
            }
            Kind::FhnGauss { chi } => Some(out(
                x.iter().map(|a| 2.0 * chi * a * value).collect(),
                v.iter().map(|a| 2.0 * chi * a * value).collect(),
                value * (2.0 * chi * df + 4.0 * chi * chi * norm2(v)),
            )),
            Kind::RtPosition { omega } => {
                let b = bracket(x);
                Some(out(
                    x.iter().map(|a| omega * a / b * value).collect(),
                    vec![0.0; d],
                    0.0,
                ))
            }
            _ => None,
        }
    }

    /// Directional derivative `v·∇ₓφ` along free flight, analytic for the
    /// collision-time weights and run-and-tumble weight.
    pub fn flight_derivative(&self, x: &[f64], v: &[f64]) -> Option<f64> {
        match &self.kind {
            Kind::KnudsenCl { geom, eps } => {
                let d = geom.dim() as f64;
                let base = 1.0 + tau_fwd(geom, x, v) + norm(v).sqrt();
                Some(-(d - eps) * base.powf(d - eps - 1.0))
            }
            Kind::KnudsenMaxwell { geom, alpha1 } => {
                let d = geom.dim() as f64;
                let p = 1.6 * d / (d + 1.0);
                let b = maxwell_base(geom, *alpha1, x, v);
                let l = b.ln();
                Some(-b.powf(d - 1.0) * l.powf(-p) * (d - p / l))
            }
            Kind::AbsorbingExp { geom } => Some(-tau_fwd(geom, x, v).exp()),
            Kind::AbsorbingPoly { geom, xi } => {
                Some(-xi * (1.0 + tau_fwd(geom, x, v)).powf(xi - 1.0))
            }
            Kind::RtMoment {
                signal,
                psi,
                gamma,
                beta,
            } => {
                let gm = signal.grad(x);
                let m = dot(v, &gm);
                let u = 1.0 - gamma * m - beta * gamma * psi.eval(m) * m;
                let du = -gamma - beta * gamma * psi.d_psi_m(m);
                let e = (-gamma * signal.value(x)).exp();
                Some(2.0 * e * (du * signal.hess_quad(x, v) - gamma * u * m))
            }
            _ => None,
        }
    }

    /// Checks `φ ≥ 1` and finiteness on the given states.
    pub fn check_on<'a>(&self, states: impl IntoIterator<Item = &'a PhaseState>) -> Result<()> {
        for z in states {
            let p = self.eval_state(z);
            if !p.is_finite() || p < 1.0 - 1e-12 {
                return Err(Error::InvalidWeight {
                    value: p,
                    state: format!("x={:?} v={:?}", z.x, z.v),
                });
            }
        }
        Ok(())
    }
}

/// Central finite-difference derivatives with step `h = 1e-4 (1 + |z|)`.
pub fn fd_derivs(phi: &WeightFn, x: &[f64], v: &[f64]) -> WeightDerivs {
    let d = x.len();
    let h = 1e-4 * (1.0 + (norm2(x) + norm2(v)).sqrt());
    let value = phi.eval(x, v);
    let mut grad_x = vec![0.0; d];
    let mut grad_v = vec![0.0; d];
    let mut lap_v = 0.0;
    let mut xp = x.to_vec();
    let mut vp = v.to_vec();
    for i in 0..d {
        xp[i] = x[i] + h;
        let a = phi.eval(&xp, v);
        xp[i] = x[i] - h;
        let b = phi.eval(&xp, v);
        xp[i] = x[i];
        grad_x[i] = (a - b) / (2.0 * h);
        vp[i] = v[i] + h;
        let a = phi.eval(x, &vp);
        vp[i] = v[i] - h;
        let b = phi.eval(x, &vp);
        vp[i] = v[i];
        grad_v[i] = (a - b) / (2.0 * h);
        lap_v += (a - 2.0 * value + b) / (h * h);
    }
    WeightDerivs {
        value,
        grad_x,
        grad_v,
        lap_v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::spec::Domain;
    use crate::rng::RngStream;
    use rand::Rng;

    fn empty() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    fn models() -> Vec<(ModelSpec, Vec<&'static str>)> {
        vec![
            (
                ModelSpec::LinearBgk {
                    domain: Domain::WholeSpace { d: 2 },
                    potential: PotentialSpec::Power { gamma_exp: 1.5 },
                },
                vec!["bgk_r2", "bgk_r3"],
            ),
            (
                ModelSpec::KineticFokkerPlanck {
                    gamma_exp: 1.5,
                    beta_friction: 2.0,
                    d: 2,
                },
                vec!["kfp_r2", "kfp_r3"],
            ),
            (
                ModelSpec::LinearBoltzmann {
                    gamma_hard: 1.0,
                    b_const: 1.0,
                    potential: PotentialSpec::Power { gamma_exp: 3.0 },
                    d: 3,
                    torus: false,
                },
                vec!["boltzmann_r1", "boltzmann_r2", "boltzmann_r3"],
            ),
            (ModelSpec::FitzHughNagumo { a: 1.0, b: 1.0, c: 1.0 }, vec!["fhn_gauss"]),
            (
                ModelSpec::RunTumble {
                    chi: 0.5,
                    psi: PsiSpec::Tanh,
                    signal: SignalSpec::NegBracket { alpha: 1.0 },
                    r0: 1.0,
                    d: 2,
                },
                vec!["rt_exp_position"],
            ),
        ]
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let mut rng = RngStream::new(9, 0);
        for (m, tags) in models() {
            let d = m.dim();
            for tag in tags {
                let w = weight_catalog(&m, tag, &empty()).unwrap();
                for _ in 0..20 {
                    let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
                    let a = w.analytic_derivs(&x, &v).unwrap();
                    let f = fd_derivs(&w, &x, &v);
                    let scale = a.value.abs().max(1.0);
                    for i in 0..d {
                        assert!((a.grad_x[i] - f.grad_x[i]).abs() < 1e-6 * scale, "{tag} gx");
                        assert!((a.grad_v[i] - f.grad_v[i]).abs() < 1e-6 * scale, "{tag} gv");
                    }
                    assert!((a.lap_v - f.lap_v).abs() < 1e-4 * scale, "{tag} lap");
                }
            }
        }
    }

    #[test]
    fn bgk_r2_origin_value() {
        let m = ModelSpec::LinearBgk {
            domain: Domain::WholeSpace { d: 2 },
            potential: PotentialSpec::Power { gamma_exp: 2.0 },
        };
        let w = weight_catalog(&m, "bgk_r2", &empty()).unwrap();
        assert_eq!(w.eval(&[0.0, 0.0], &[0.0, 0.0]), 1.0 + 0.5);
    }

    #[test]
    fn unknown_tag_lists_valid_ones() {
        let m = ModelSpec::FitzHughNagumo { a: 1.0, b: 1.0, c: 1.0 };
        let e = weight_catalog(&m, "bgk_r2", &empty()).unwrap_err();
        let s = e.to_string();
        assert!(s.contains("fhn_gauss") && s.contains("constant"));
    }

    #[test]
    fn run_tumble_constants_for_sign() {
        let m = ModelSpec::RunTumble {
            chi: 0.5,
            psi: PsiSpec::Sign,
            signal: SignalSpec::NegBracket { alpha: 1.0 },
            r0: 1.0,
            d: 1,
        };
        let c = run_tumble_constants(&m, 1.0).unwrap();
        // uniform on [-1, 1]: E|s| = 1/2
        assert!((c.lambda_tilde - 0.5).abs() < 1e-10);
        assert_eq!(c.k, 1);
        assert!((c.beta - 1.0 / 3.0).abs() < 1e-15);
        let c_tilde = 1.0 / 2f64.sqrt();
        let g1 = 0.5 * 0.5 * 0.5 * (1.0 / c_tilde) / (8.0 * 1.5);
        let g2 = 1.5 / (2.0 * 2.5);
        assert!((c.gamma_max - g1.min(g2)).abs() < 1e-12);
    }
}
