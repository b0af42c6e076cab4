//! Named model instances used by the command line and the shipped experiments.

use std::collections::BTreeMap;

use serde::Serialize;

use super::boundary::Geometry;
use super::potential::PotentialSpec;
use super::spec::{
    BoundarySpec, Domain, ModelSpec, PsiSpec, ScalarField, Scatter, SigmaSpec, SignalSpec,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub model: ModelSpec,
    /// Default weight tag and parameters for drift checks and weighted distances.
    pub weight: &'static str,
    pub weight_params: BTreeMap<String, f64>,
}

pub const PRESET_NAMES: &[&str] = &[
    "torus_bgk",
    "linear_bgk_r2",
    "linear_bgk_r3",
    "kfp_quadratic",
    "linear_boltzmann_torus",
    "knudsen_disk",
    "knudsen_interval_cl",
    "knudsen_absorbing",
    "degenerate_strip",
    "run_tumble",
    "run_tumble_sign",
    "fhn",
];

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn preset(name: &str) -> Result<Preset> {
    let (description, model, weight, wp) = match name {
        "torus_bgk" => (
            "linear BGK on the one-dimensional torus, no potential",
            ModelSpec::LinearBgk {
                domain: Domain::Torus { d: 1 },
                potential: PotentialSpec::None,
            },
            "bgk_r1",
            params(&[]),
        ),
        "linear_bgk_r2" => (
            "linear BGK in R with Phi = <x>^2/2",
            ModelSpec::LinearBgk {
                domain: Domain::WholeSpace { d: 1 },
                potential: PotentialSpec::Power { gamma_exp: 2.0 },
            },
            "bgk_r2",
            params(&[]),
        ),
        "linear_bgk_r3" => (
            "linear BGK in R with Phi = <x>, weak confinement",
            ModelSpec::LinearBgk {
                domain: Domain::WholeSpace { d: 1 },
                potential: PotentialSpec::Power { gamma_exp: 1.0 },
            },
            "bgk_r3",
            params(&[("xi", 0.5)]),
        ),
        "kfp_quadratic" => (
            "kinetic Fokker-Planck, linear friction, Phi = <x>^2/2",
            ModelSpec::KineticFokkerPlanck {
                gamma_exp: 2.0,
                beta_friction: 2.0,
                d: 1,
            },
            "kfp_r2",
            params(&[("chi", 0.1), ("eps", 0.1)]),
        ),
        "linear_boltzmann_torus" => (
            "linear Boltzmann with hard spheres on the two-dimensional torus",
            ModelSpec::LinearBoltzmann {
                gamma_hard: 1.0,
                b_const: 1.0,
                potential: PotentialSpec::None,
                d: 2,
                torus: true,
            },
            "boltzmann_r1",
            params(&[]),
        ),
        "knudsen_disk" => (
            "free gas in the unit disk with diffuse walls at T = 1",
            ModelSpec::KnudsenGas {
                geometry: Geometry::Disk { radius: 1.0 },
                boundary: BoundarySpec::Diffuse,
                wall_temp: ScalarField::constant(1.0),
            },
            "knudsen_maxwell",
            params(&[("alpha1", 0.5)]),
        ),
        "knudsen_interval_cl" => (
            "free gas in (0, 1) with Cercignani-Lampis walls",
            ModelSpec::KnudsenGas {
                geometry: Geometry::Interval,
                boundary: BoundarySpec::CercignaniLampis {
                    r_perp: 0.5,
                    r_par: 0.5,
                },
                wall_temp: ScalarField::constant(1.0),
            },
            "knudsen_cl",
            params(&[("eps", 0.25)]),
        ),
        "knudsen_absorbing" => (
            "free gas in (0, 1) with absorbing walls",
            ModelSpec::KnudsenGas {
                geometry: Geometry::Interval,
                boundary: BoundarySpec::Absorbing,
                wall_temp: ScalarField::constant(1.0),
            },
            "absorbing_exp",
            params(&[]),
        ),
        "degenerate_strip" => (
            "linear Boltzmann on the 1D torus with scattering confined to a strip",
            ModelSpec::DegenerateBoltzmann {
                sigma: SigmaSpec::Bump {
                    center: 0.5,
                    half_width: 0.25,
                    height: 1.0,
                    axis: 0,
                },
                scatter: Scatter::Maxwellian,
                potential: PotentialSpec::None,
                d: 1,
            },
            "degenerate_tv",
            params(&[]),
        ),
        "run_tumble" => (
            "run and tumble in R^2, tanh response, signal M = -<x>",
            ModelSpec::RunTumble {
                chi: 0.5,
                psi: PsiSpec::Tanh,
                signal: SignalSpec::NegBracket { alpha: 1.0 },
                r0: 1.0,
                d: 2,
            },
            "rt_exp_moment",
            params(&[("R", 1.0)]),
        ),
        "run_tumble_sign" => (
            "run and tumble in R, sign response, signal M = -<x>",
            ModelSpec::RunTumble {
                chi: 0.5,
                psi: PsiSpec::Sign,
                signal: SignalSpec::NegBracket { alpha: 1.0 },
                r0: 1.0,
                d: 1,
            },
            "rt_exp_moment",
            params(&[("R", 1.0)]),
        ),
        "fhn" => (
            "FitzHugh-Nagumo with (a, b, c) = (1, 1, 1)",
            ModelSpec::FitzHughNagumo {
                a: 1.0,
                b: 1.0,
                c: 1.0,
            },
            "fhn_gauss",
            params(&[("chi", 0.75)]),
        ),
        _ => {
            return Err(Error::UnknownRegime {
                tag: name.to_string(),
                valid: PRESET_NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    Ok(Preset {
        name: PRESET_NAMES.iter().find(|n| **n == name).copied().unwrap(),
        description,
        model,
        weight,
        weight_params: wp,
    })
}
