//! Exact samplers for the explicit equilibria `f∞ ∝ e^{-Φ(x)} M(v)`.
//!
//! Position proposals:
//! * torus: uniform, accepted with `e^{-(Φ - inf Φ)}`;
//! * quadratic `k|x|²/2`: exact Gaussian `N(0, 1/k)`;
//! * power `⟨x⟩^γ/γ`: `|x|^γ/γ ~ Gamma(d/γ, 1)` with uniform direction,
//!   accepted with `exp(-(⟨x⟩^γ - |x|^γ)/γ)` (exact Gaussian when `γ = 2`).

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use super::dynamics::{gaussian, uniform_ball, unit_vector};
use super::potential::PotentialSpec;
use super::spec::{ModelSpec, Scatter};
use super::PhaseState;
use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, bessel_i0_scaled};

fn unsupported(model: &ModelSpec) -> Error {
    Error::Unsupported(format!(
        "{} has no closed-form equilibrium",
        model.name()
    ))
}

/// Position potential and velocity law of the explicit equilibrium.
fn equilibrium_parts(model: &ModelSpec) -> Result<(PotentialSpec, bool, Option<f64>)> {
    model.validate()?;
    match model {
        ModelSpec::LinearBgk { potential, .. } | ModelSpec::LinearBoltzmann { potential, .. } => {
            if !model.is_torus() && potential.is_none() {
                return Err(Error::Unsupported(
                    "whole-space model without confinement has no equilibrium".into(),
                ));
            }
            Ok((potential.clone(), model.is_torus(), None))
        }
        ModelSpec::KineticFokkerPlanck { beta_friction, .. } if *beta_friction == 2.0 => {
            Ok((model.potential(), false, None))
        }
        ModelSpec::DegenerateBoltzmann {
            scatter, potential, ..
        } => {
            let radius = match scatter {
                Scatter::Uniform { v_radius } => Some(*v_radius),
                Scatter::Maxwellian => None,
            };
            Ok((potential.clone(), true, radius))
        }
        _ => Err(unsupported(model)),
    }
}

fn sample_position<R: Rng + ?Sized>(
    pot: &PotentialSpec,
    torus: bool,
    d: usize,
    rng: &mut R,
) -> (Vec<f64>, u64) {
    let mut tries = 0u64;
    if torus {
        let floor = pot.infimum(d);
        loop {
            tries += 1;
            let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            if pot.is_none() || rng.random::<f64>() < (-(pot.value(&x) - floor)).exp() {
                return (x, tries);
            }
        }
    }
    match pot {
        PotentialSpec::Quadratic { k } => (
            gaussian(d, rng).into_iter().map(|a| a / k.sqrt()).collect(),
            1,
        ),
        PotentialSpec::Power { gamma_exp } if *gamma_exp == 2.0 => (gaussian(d, rng), 1),
        PotentialSpec::Power { gamma_exp } => {
            let g = *gamma_exp;
            let law = Gamma::new(d as f64 / g, 1.0).expect("valid shape");
            loop {
                tries += 1;
                let w: f64 = law.sample(rng);
                let r = (g * w).powf(1.0 / g);
                let excess = ((1.0 + r * r).powf(g / 2.0) - r.powf(g)) / g;
                if rng.random::<f64>() < (-excess).exp() {
                    let u = unit_vector(d, rng);
                    return (u.into_iter().map(|a| r * a).collect(), tries);
                }
            }
        }
        _ => unreachable!("validated above"),
    }
}

/// One exact draw from the model's equilibrium.
pub fn equilibrium_sampler<R: Rng + ?Sized>(model: &ModelSpec, rng: &mut R) -> Result<PhaseState> {
    Ok(sample_equilibrium(model, 1, rng)?.0.remove(0))
}

/// `n` equilibrium draws and the empirical position acceptance rate.
pub fn sample_equilibrium<R: Rng + ?Sized>(
    model: &ModelSpec,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<PhaseState>, f64)> {
    let (pot, torus, radius) = equilibrium_parts(model)?;
    let d = model.dim();
    let mut tries = 0u64;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, t) = sample_position(&pot, torus, d, rng);
        tries += t;
        let v = match radius {
            Some(r) => uniform_ball(d, r, rng),
            None => gaussian(d, rng),
        };
        out.push(PhaseState::new(x, v));
    }
    let rate = if n == 0 { 1.0 } else { n as f64 / tries as f64 };
    Ok((out, rate))
}

/// Exact acceptance probability of the position proposal.
pub fn equilibrium_acceptance(model: &ModelSpec) -> Result<f64> {
    let (pot, torus, _) = equilibrium_parts(model)?;
    let d = model.dim();
    Ok(match (&pot, torus) {
        (PotentialSpec::None, _) => 1.0,
        (PotentialSpec::Periodic { amplitude }, true) => bessel_i0_scaled(amplitude.abs()).powi(d as i32),
        (PotentialSpec::Quadratic { .. }, false) => 1.0,
        (PotentialSpec::Power { gamma_exp }, false) if *gamma_exp == 2.0 => 1.0,
        (PotentialSpec::Power { gamma_exp }, false) => {
            // ratio of ∫ r^{d-1} e^{-⟨r⟩^γ/γ} dr to ∫ r^{d-1} e^{-r^γ/γ} dr
            let g = *gamma_exp;
            let df = d as f64;
            let num = adaptive_simpson(
                &|r: f64| r.powf(df - 1.0) * (-(1.0 + r * r).powf(g / 2.0) / g).exp(),
                0.0,
                200f64.max(4.0 * (40.0 * g).powf(1.0 / g)),
                1e-13,
            );
            let den = ((df / g - 1.0) * g.ln() + ln_gamma(df / g)).exp();
            num / den
        }
        _ => return Err(Error::Unsupported("potential incompatible with the domain".into())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::spec::Domain;
    use crate::rng::RngStream;

    #[test]
    fn power_acceptance_matches_measurement() {
        let m = ModelSpec::LinearBgk {
            domain: Domain::WholeSpace { d: 1 },
            potential: PotentialSpec::Power { gamma_exp: 1.0 },
        };
        let exact = equilibrium_acceptance(&m).unwrap();
        let mut rng = RngStream::new(3, 0);
        let (_, rate) = sample_equilibrium(&m, 200_000, &mut rng).unwrap();
        assert!(exact > 0.1);
        assert!((rate - exact).abs() < 0.01, "{rate} vs {exact}");
    }

    #[test]
    fn periodic_acceptance_matches_measurement() {
        let m = ModelSpec::LinearBgk {
            domain: Domain::Torus { d: 2 },
            potential: PotentialSpec::Periodic { amplitude: 0.5 },
        };
        let exact = equilibrium_acceptance(&m).unwrap();
        let mut rng = RngStream::new(4, 0);
        let (_, rate) = sample_equilibrium(&m, 100_000, &mut rng).unwrap();
        assert!((rate - exact).abs() < 0.01, "{rate} vs {exact}");
    }

    #[test]
    fn fhn_has_no_equilibrium() {
        let m = ModelSpec::FitzHughNagumo { a: 1.0, b: 1.0, c: 1.0 };
        let mut rng = RngStream::new(4, 0);
        assert!(matches!(
            equilibrium_sampler(&m, &mut rng),
            Err(Error::Unsupported(_))
        ));
    }
}
