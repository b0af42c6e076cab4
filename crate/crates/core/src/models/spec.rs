use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::boundary::Geometry;
use super::potential::PotentialSpec;
use crate::error::{invalid, Result};
use crate::numerics::bracket;

/// Spatial domain for transport-type models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// Unit torus `[0,1)^d`.
    Torus { d: usize },
    WholeSpace { d: usize },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Torus { d } | Domain::WholeSpace { d } => *d,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Domain::Torus { .. })
    }
}

/// A scalar field on the boundary or on the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant {
        value: f64,
    },
    /// `low` where `x[axis] < split`, `high` elsewhere.
    TwoSided {
        low: f64,
        high: f64,
        #[serde(default)]
        axis: usize,
        #[serde(default = "half")]
        split: f64,
    },
    /// `mean + amplitude cos(2π x[axis] / period)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        axis: usize,
        #[serde(default = "unit")]
        period: f64,
    },
}

fn half() -> f64 {
    0.5
}

fn unit() -> f64 {
    1.0
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant { value }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::TwoSided {
                low,
                high,
                axis,
                split,
            } => {
                if x[*axis] < *split {
                    *low
                } else {
                    *high
                }
            }
            ScalarField::Cosine {
                mean,
                amplitude,
                axis,
                period,
            } => mean + amplitude * (2.0 * PI * x[*axis] / period).cos(),
        }
    }

    /// `(inf, sup)` of the field.
    pub fn range(&self) -> (f64, f64) {
        match self {
            ScalarField::Constant { value } => (*value, *value),
            ScalarField::TwoSided { low, high, .. } => (low.min(*high), low.max(*high)),
            ScalarField::Cosine {
                mean, amplitude, ..
            } => (mean - amplitude.abs(), mean + amplitude.abs()),
        }
    }

    pub fn is_constant(&self) -> bool {
        let (a, b) = self.range();
        a == b
    }

    fn axis(&self) -> usize {
        match self {
            ScalarField::Constant { .. } => 0,
            ScalarField::TwoSided { axis, .. } | ScalarField::Cosine { axis, .. } => *axis,
        }
    }

    fn validate(&self, name: &str, d: usize, lo: f64, hi: f64, open_low: bool) -> Result<()> {
        if self.axis() >= d {
            return invalid(format!("{name}.axis must be < {d}"));
        }
        if let ScalarField::Cosine { period, .. } = self {
            if !(*period > 0.0) {
                return invalid(format!("{name}.period must be > 0"));
            }
        }
        let (a, b) = self.range();
        let low_ok = if open_low { a > lo } else { a >= lo };
        if !low_ok || !(b <= hi) || !a.is_finite() || !b.is_finite() {
            return invalid(format!(
                "{name} must take values in {}{lo}, {hi}] (range [{a}, {b}])",
                if open_low { "(" } else { "[" }
            ));
        }
        Ok(())
    }
}

/// Boundary rule for the Knudsen gas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundarySpec {
    /// Mixture of specular reflection (weight `1-α(x)`) and diffuse re-emission.
    Maxwell { accommodation: ScalarField },
    CercignaniLampis { r_perp: f64, r_par: f64 },
    Absorbing,
    Diffuse,
}

/// Scattering coefficient `σ(x) ≥ 0` on the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaSpec {
    Constant {
        value: f64,
    },
    /// `height · cos⁴(π δ / (2 w))` for periodic distance `δ = |x[axis] - center| < w`, else 0.
    Bump {
        center: f64,
        half_width: f64,
        height: f64,
        #[serde(default)]
        axis: usize,
    },
    /// `mean + amplitude cos(2π x[axis])`, requires `|amplitude| ≤ mean`.
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        axis: usize,
    },
}

impl SigmaSpec {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            SigmaSpec::Constant { value } => *value,
            SigmaSpec::Bump {
                center,
                half_width,
                height,
                axis,
            } => {
                let mut dlt = (x[*axis] - center).rem_euclid(1.0);
                if dlt > 0.5 {
                    dlt = 1.0 - dlt;
                }
                if dlt >= *half_width {
                    0.0
                } else {
                    height * (0.5 * PI * dlt / half_width).cos().powi(4)
                }
            }
            SigmaSpec::Cosine {
                mean,
                amplitude,
                axis,
            } => mean + amplitude * (2.0 * PI * x[*axis]).cos(),
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            SigmaSpec::Constant { value } => *value,
            SigmaSpec::Bump { height, .. } => *height,
            SigmaSpec::Cosine {
                mean, amplitude, ..
            } => mean + amplitude.abs(),
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        match self {
            SigmaSpec::Constant { value } if *value >= 0.0 && value.is_finite() => Ok(()),
            SigmaSpec::Constant { value } => invalid(format!("sigma.value must be >= 0 (got {value})")),
            SigmaSpec::Bump {
                half_width,
                height,
                axis,
                ..
            } => {
                if *axis >= d {
                    return invalid(format!("sigma.axis must be < {d}"));
                }
                if !(*half_width > 0.0 && *half_width <= 0.5) {
                    return invalid("sigma.half_width must lie in (0, 0.5]");
                }
                if !(*height >= 0.0) {
                    return invalid("sigma.height must be >= 0");
                }
                Ok(())
            }
            SigmaSpec::Cosine {
                mean,
                amplitude,
                axis,
            } => {
                if *axis >= d {
                    return invalid(format!("sigma.axis must be < {d}"));
                }
                if !(amplitude.abs() <= *mean) {
                    return invalid("sigma.cosine needs |amplitude| <= mean so that sigma >= 0");
                }
                Ok(())
            }
        }
    }
}

/// Post-scattering velocity law for the degenerate Boltzmann model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scatter {
    /// Uniform on the ball of radius `v_radius`.
    Uniform { v_radius: f64 },
    Maxwellian,
}

/// Odd, bounded, increasing response `ψ` for the tumbling rate `1 - χψ(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiSpec {
    Sign,
    Tanh,
}

impl PsiSpec {
    pub fn eval(&self, m: f64) -> f64 {
        match self {
            PsiSpec::Sign => {
                if m > 0.0 {
                    1.0
                } else if m < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            PsiSpec::Tanh => m.tanh(),
        }
    }

    /// Derivative of `ψ(m)m`.
    pub fn d_psi_m(&self, m: f64) -> f64 {
        match self {
            PsiSpec::Sign => self.eval(m),
            PsiSpec::Tanh => {
                let t = m.tanh();
                t + m * (1.0 - t * t)
            }
        }
    }
}

/// Chemical signal `M(x) = log S(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSpec {
    /// `M(x) = -α⟨x⟩`.
    NegBracket { alpha: f64 },
}

impl SignalSpec {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            SignalSpec::NegBracket { alpha } => -alpha * bracket(x),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SignalSpec::NegBracket { alpha } => {
                let b = bracket(x);
                x.iter().map(|xi| -alpha * xi / b).collect()
            }
        }
    }

    /// `vᵀ Hess M v`.
    pub fn hess_quad(&self, x: &[f64], v: &[f64]) -> f64 {
        match self {
            SignalSpec::NegBracket { alpha } => {
                let b = bracket(x);
                let vv: f64 = v.iter().map(|a| a * a).sum();
                let xv: f64 = x.iter().zip(v).map(|(a, c)| a * c).sum();
                -alpha * (vv / b - xv * xv / (b * b * b))
            }
        }
    }

    /// `sup |∇M|`.
    pub fn grad_sup(&self) -> f64 {
        match self {
            SignalSpec::NegBracket { alpha } => *alpha,
        }
    }

    /// `|∇M|` at radius `r`.
    pub fn grad_norm_at(&self, r: f64) -> f64 {
        match self {
            SignalSpec::NegBracket { alpha } => alpha * r / (1.0 + r * r).sqrt(),
        }
    }
}

/// One kinetic process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    LinearBgk {
        domain: Domain,
        #[serde(default)]
        potential: PotentialSpec,
    },
    KineticFokkerPlanck {
        gamma_exp: f64,
        beta_friction: f64,
        d: usize,
    },
    LinearBoltzmann {
        gamma_hard: f64,
        b_const: f64,
        #[serde(default)]
        potential: PotentialSpec,
        d: usize,
        #[serde(default)]
        torus: bool,
    },
    KnudsenGas {
        geometry: Geometry,
        boundary: BoundarySpec,
        wall_temp: ScalarField,
    },
    DegenerateBoltzmann {
        sigma: SigmaSpec,
        scatter: Scatter,
        #[serde(default)]
        potential: PotentialSpec,
        d: usize,
    },
    RunTumble {
        chi: f64,
        psi: PsiSpec,
        signal: SignalSpec,
        r0: f64,
        d: usize,
    },
    #[serde(rename = "fitzhugh_nagumo")]
    FitzHughNagumo { a: f64, b: f64, c: f64 },
}

fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        invalid(format!("d must be 1, 2 or 3 (got {d})"))
    }
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::LinearBgk { .. } => "linear_bgk",
            ModelSpec::KineticFokkerPlanck { .. } => "kinetic_fokker_planck",
            ModelSpec::LinearBoltzmann { .. } => "linear_boltzmann",
            ModelSpec::KnudsenGas { .. } => "knudsen_gas",
            ModelSpec::DegenerateBoltzmann { .. } => "degenerate_boltzmann",
            ModelSpec::RunTumble { .. } => "run_tumble",
            ModelSpec::FitzHughNagumo { .. } => "fitzhugh_nagumo",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::LinearBgk { domain, .. } => domain.dim(),
            ModelSpec::KineticFokkerPlanck { d, .. }
            | ModelSpec::LinearBoltzmann { d, .. }
            | ModelSpec::DegenerateBoltzmann { d, .. }
            | ModelSpec::RunTumble { d, .. } => *d,
            ModelSpec::KnudsenGas { geometry, .. } => geometry.dim(),
            ModelSpec::FitzHughNagumo { .. } => 1,
        }
    }

    /// Positions live on the unit torus.
    pub fn is_torus(&self) -> bool {
        match self {
            ModelSpec::LinearBgk { domain, .. } => domain.is_torus(),
            ModelSpec::LinearBoltzmann { torus, .. } => *torus,
            ModelSpec::DegenerateBoltzmann { .. } => true,
            _ => false,
        }
    }

    pub fn potential(&self) -> PotentialSpec {
        match self {
            ModelSpec::LinearBgk { potential, .. }
            | ModelSpec::LinearBoltzmann { potential, .. }
            | ModelSpec::DegenerateBoltzmann { potential, .. } => potential.clone(),
            ModelSpec::KineticFokkerPlanck { gamma_exp, .. } => PotentialSpec::Power {
                gamma_exp: *gamma_exp,
            },
            _ => PotentialSpec::None,
        }
    }

    /// True for models stepped by a stochastic integrator.
    pub fn is_diffusion(&self) -> bool {
        matches!(
            self,
            ModelSpec::KineticFokkerPlanck { .. } | ModelSpec::FitzHughNagumo { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::LinearBgk { domain, potential } => {
                check_dim(domain.dim())?;
                potential.validate()?;
                if domain.is_torus() && !potential.is_periodic() {
                    return invalid("potential on a torus must be none or periodic");
                }
                if !domain.is_torus() && matches!(potential, PotentialSpec::Periodic { .. }) {
                    return invalid("periodic potential requires a toroidal domain");
                }
            }
            ModelSpec::KineticFokkerPlanck {
                gamma_exp,
                beta_friction,
                d,
            } => {
                check_dim(*d)?;
                if !(*gamma_exp > 0.0 && gamma_exp.is_finite()) {
                    return invalid(format!("gamma_exp must be > 0 (got {gamma_exp})"));
                }
                if !(*beta_friction >= 2.0 && beta_friction.is_finite()) {
                    return invalid(format!("beta_friction must be >= 2 (got {beta_friction})"));
                }
            }
            ModelSpec::LinearBoltzmann {
                gamma_hard,
                b_const,
                potential,
                d,
                torus,
            } => {
                check_dim(*d)?;
                potential.validate()?;
                if !(0.0..=1.0).contains(gamma_hard) {
                    return invalid(format!("gamma_hard must lie in [0, 1] (got {gamma_hard})"));
                }
                if !(*b_const > 0.0 && b_const.is_finite()) {
                    return invalid(format!("b_const must be > 0 (got {b_const})"));
                }
                if *torus && !potential.is_periodic() {
                    return invalid("potential on a torus must be none or periodic");
                }
                if !*torus && matches!(potential, PotentialSpec::Periodic { .. }) {
                    return invalid("periodic potential requires torus = true");
                }
            }
            ModelSpec::KnudsenGas {
                geometry,
                boundary,
                wall_temp,
            } => {
                geometry.validate()?;
                let d = geometry.dim();
                wall_temp.validate("wall_temp", d, 0.0, f64::INFINITY, true)?;
                match boundary {
                    BoundarySpec::Maxwell { accommodation } => {
                        accommodation.validate("accommodation", d, 0.0, 1.0, false)?
                    }
                    BoundarySpec::CercignaniLampis { r_perp, r_par } => {
                        if !(*r_perp > 0.0 && *r_perp <= 1.0) {
                            return invalid(format!("r_perp must lie in (0, 1] (got {r_perp})"));
                        }
                        if !(*r_par > 0.0 && *r_par < 2.0) {
                            return invalid(format!("r_par must lie in (0, 2) (got {r_par})"));
                        }
                    }
                    BoundarySpec::Absorbing | BoundarySpec::Diffuse => {}
                }
            }
            ModelSpec::DegenerateBoltzmann {
                sigma,
                scatter,
                potential,
                d,
            } => {
                check_dim(*d)?;
                sigma.validate(*d)?;
                potential.validate()?;
                if !potential.is_periodic() {
                    return invalid("potential on a torus must be none or periodic");
                }
                if let Scatter::Uniform { v_radius } = scatter {
                    if !(*v_radius > 0.0 && v_radius.is_finite()) {
                        return invalid("scatter.v_radius must be > 0");
                    }
                    if !potential.is_none() {
                        return invalid(
                            "uniform scattering on a bounded velocity set requires potential none",
                        );
                    }
                }
            }
            ModelSpec::RunTumble {
                chi, signal, r0, d, ..
            } => {
                check_dim(*d)?;
                if !(*chi > 0.0 && *chi < 1.0) {
                    return invalid(format!("chi must lie in (0, 1) (got {chi})"));
                }
                if !(*r0 > 0.0 && r0.is_finite()) {
                    return invalid(format!("r0 must be > 0 (got {r0})"));
                }
                let SignalSpec::NegBracket { alpha } = signal;
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return invalid(format!("signal.alpha must be > 0 (got {alpha})"));
                }
            }
            ModelSpec::FitzHughNagumo { a, b, c } => {
                for (n, v) in [("a", a), ("b", b), ("c", c)] {
                    if !(*v > 0.0 && v.is_finite()) {
                        return invalid(format!("{n} must be > 0 (got {v})"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("model serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_tagging() {
        let m = ModelSpec::LinearBgk {
            domain: Domain::Torus { d: 1 },
            potential: PotentialSpec::None,
        };
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"model\":\"linear_bgk\""));
        let back: ModelSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let parsed: ModelSpec =
            serde_json::from_str(r#"{"model":"fitzhugh_nagumo","a":1,"b":1,"c":1}"#).unwrap();
        assert_eq!(parsed.dim(), 1);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let m = ModelSpec::RunTumble {
            chi: 1.5,
            psi: PsiSpec::Tanh,
            signal: SignalSpec::NegBracket { alpha: 1.0 },
            r0: 1.0,
            d: 2,
        };
        assert!(m.validate().unwrap_err().to_string().contains("chi"));
        let m = ModelSpec::KineticFokkerPlanck {
            gamma_exp: 2.0,
            beta_friction: 1.0,
            d: 1,
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn bump_sigma_is_periodic_and_compact() {
        let s = SigmaSpec::Bump {
            center: 0.0,
            half_width: 0.2,
            height: 2.0,
            axis: 0,
        };
        assert_eq!(s.eval(&[0.0]), 2.0);
        assert!((s.eval(&[0.95]) - s.eval(&[0.05])).abs() < 1e-15);
        assert_eq!(s.eval(&[0.5]), 0.0);
    }

    #[test]
    fn signal_derivatives() {
        let m = SignalSpec::NegBracket { alpha: 0.7 };
        let x = [0.4, -1.1];
        let v = [0.3, 0.8];
        let h = 1e-5;
        let g = m.grad(&x);
        for i in 0..2 {
            let mut a = x;
            let mut b = x;
            a[i] += h;
            b[i] -= h;
            assert!(((m.value(&a) - m.value(&b)) / (2.0 * h) - g[i]).abs() < 1e-9);
        }
        // d²/ds² M(x + s v) at s = 0
        let f = |s: f64| m.value(&[x[0] + s * v[0], x[1] + s * v[1]]);
        let fd = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        assert!((fd - m.hess_quad(&x, &v)).abs() < 1e-5);
    }
}
