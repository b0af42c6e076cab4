//! Kinetic process catalogue: specifications, simulators, Lyapunov weights,
//! generator evaluation and equilibrium samplers.

pub mod boundary;
pub mod collision;
pub mod dynamics;
pub mod equilibrium;
pub mod generator;
pub mod potential;
pub mod presets;
pub mod spec;
pub mod weights;

use serde::{Deserialize, Serialize};

pub use boundary::{
    first_collision_time, sample_cl_kernel, sample_diffuse, sample_maxwell_boundary, specular,
    Geometry,
};
pub use collision::collision_frequency;
pub use dynamics::{step, Dynamics};
pub use equilibrium::{equilibrium_acceptance, equilibrium_sampler};
pub use generator::{generator_apply, Generator};
pub use potential::PotentialSpec;
pub use spec::{
    BoundarySpec, Domain, ModelSpec, PsiSpec, ScalarField, Scatter, SigmaSpec, SignalSpec,
};
pub use weights::{run_tumble_constants, weight_catalog, WeightFn};

fn alive_default() -> bool {
    true
}

/// A point `(x, v)` of phase space at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
    /// False once an absorbing wall has removed the particle.
    #[serde(default = "alive_default")]
    pub alive: bool,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Self {
        PhaseState {
            x,
            v,
            t: 0.0,
            alive: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|a| a.is_finite()) && self.t.is_finite()
    }

    /// Checks the state against the model's phase space.
    pub fn validate_for(&self, model: &ModelSpec) -> crate::error::Result<()> {
        use crate::error::invalid;
        let d = model.dim();
        if self.x.len() != d || self.v.len() != d {
            return invalid(format!(
                "state has dimension {} but the model needs {d}",
                self.x.len()
            ));
        }
        if !self.is_finite() {
            return invalid("state components must be finite");
        }
        if model.is_torus() && self.x.iter().any(|a| !(0.0..1.0).contains(a)) {
            return invalid("torus positions must lie in [0, 1)");
        }
        if let ModelSpec::KnudsenGas { geometry, .. } = model {
            if !geometry.contains(&self.x) {
                return invalid("position lies outside the Knudsen domain");
            }
        }
        if let ModelSpec::RunTumble { r0, .. } = model {
            if crate::numerics::norm(&self.v) > r0 * (1.0 + 1e-12) {
                return invalid("velocity lies outside the run-and-tumble velocity ball");
            }
        }
        Ok(())
    }
}
