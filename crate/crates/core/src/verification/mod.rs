//! Numerical checks of the drift, minorisation and geometric-control hypotheses.

pub mod drift;
pub mod gcc;
pub mod minorisation;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::models::{Geometry, ModelSpec, PhaseState, WeightFn};
use crate::numerics::norm;

pub use drift::{bgk_r2_drift_constants, drift_verify, DriftOptions, DriftReport, SamplerSpec};
pub use gcc::{gcc_check, GccReport};
pub use minorisation::{minorisation_estimate, MinorisationOptions, MinorisationReport};

/// Axis-aligned box in phase space; positions and velocities have separate
/// bounds, and velocities may additionally be restricted to a ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBox {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub v_lo: Vec<f64>,
    pub v_hi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_ball: Option<f64>,
}

impl PhaseBox {
    pub fn symmetric(d: usize, lx: f64, lv: f64) -> Self {
        PhaseBox {
            x_lo: vec![-lx; d],
            x_hi: vec![lx; d],
            v_lo: vec![-lv; d],
            v_hi: vec![lv; d],
            v_ball: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.x_lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.x_lo.len();
        if self.x_hi.len() != d || self.v_lo.len() != d || self.v_hi.len() != d {
            return invalid("box bounds must all have the model dimension");
        }
        let ok = self
            .x_lo
            .iter()
            .zip(&self.x_hi)
            .chain(self.v_lo.iter().zip(&self.v_hi))
            .all(|(a, b)| a.is_finite() && b.is_finite() && a < b);
        if !ok {
            return invalid("box bounds must be finite with lo < hi");
        }
        Ok(())
    }

    /// Lower and upper bounds of the `2d` coordinates `(x, v)`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.x_lo.iter().chain(&self.v_lo).copied().collect();
        let hi = self.x_hi.iter().chain(&self.v_hi).copied().collect();
        (lo, hi)
    }

    pub fn volume(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.iter().zip(&hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, z: &PhaseState) -> bool {
        let (lo, hi) = self.bounds();
        z.x.iter()
            .chain(&z.v)
            .zip(lo.iter().zip(&hi))
            .all(|(c, (a, b))| *c >= *a && *c < *b)
    }

    /// Box scaled by `factor` about its centre, clipped to the model's
    /// position domain and velocity ball.
    pub fn scaled(&self, model: &ModelSpec, factor: f64) -> Self {
        let scale = |lo: &[f64], hi: &[f64]| -> (Vec<f64>, Vec<f64>) {
            lo.iter()
                .zip(hi)
                .map(|(a, b)| {
                    let c = 0.5 * (a + b);
                    let h = 0.5 * (b - a) * factor;
                    (c - h, c + h)
                })
                .unzip()
        };
        let (x_lo, x_hi) = if fixed_position_domain(model) {
            (self.x_lo.clone(), self.x_hi.clone())
        } else {
            scale(&self.x_lo, &self.x_hi)
        };
        let (v_lo, v_hi) = if self.v_ball.is_some() {
            (self.v_lo.clone(), self.v_hi.clone())
        } else {
            scale(&self.v_lo, &self.v_hi)
        };
        PhaseBox {
            x_lo,
            x_hi,
            v_lo,
            v_hi,
            v_ball: self.v_ball,
        }
    }

    /// Uniform point of the box intersected with the model's phase space.
    pub fn sample<R: Rng + ?Sized>(&self, model: &ModelSpec, rng: &mut R) -> PhaseState {
        loop {
            let x: Vec<f64> = self
                .x_lo
                .iter()
                .zip(&self.x_hi)
                .map(|(a, b)| a + (b - a) * rng.random::<f64>())
                .collect();
            let v: Vec<f64> = self
                .v_lo
                .iter()
                .zip(&self.v_hi)
                .map(|(a, b)| a + (b - a) * rng.random::<f64>())
                .collect();
            let z = PhaseState::new(x, v);
            if admissible(model, self, &z) {
                return z;
            }
        }
    }
}

fn fixed_position_domain(model: &ModelSpec) -> bool {
    model.is_torus() || matches!(model, ModelSpec::KnudsenGas { .. })
}

/// True if `z` lies in the model's phase space and the box's velocity ball.
pub(crate) fn admissible(model: &ModelSpec, b: &PhaseBox, z: &PhaseState) -> bool {
    if let Some(r) = b.v_ball {
        if norm(&z.v) > r {
            return false;
        }
    }
    match model {
        ModelSpec::KnudsenGas { geometry, .. } => geometry.contains(&z.x) && norm(&z.v) > 0.0,
        _ if model.is_torus() => z.x.iter().all(|a| (0.0..1.0).contains(a)),
        _ => true,
    }
}

fn geometry_box(g: &Geometry) -> (Vec<f64>, Vec<f64>) {
    match g {
        Geometry::Interval => (vec![0.0], vec![1.0]),
        Geometry::Disk { radius } => (vec![-radius; 2], vec![*radius; 2]),
        Geometry::Box { sides } => (vec![0.0; sides.len()], sides.clone()),
    }
}

/// Largest `r ≤ cap` with `f(r) ≤ level`, assuming `f` grows along the ray;
/// `None` if `f` stays below `level` up to `cap`.
fn ray_extent<F: Fn(f64) -> f64>(f: F, level: f64, cap: f64) -> Option<f64> {
    if f(0.0) > level {
        return Some(0.0);
    }
    let mut hi = 1.0;
    while f(hi) <= level {
        hi *= 2.0;
        if hi > cap {
            return None;
        }
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Box enclosing the sub-level set `{φ ≤ level}` along the coordinate axes,
/// restricted to the model's position domain and velocity ball.
pub fn sublevel_box(model: &ModelSpec, phi: &WeightFn, level: f64) -> PhaseBox {
    const CAP: f64 = 1e4;
    const FALLBACK_X: f64 = 10.0;
    const FALLBACK_V: f64 = 5.0;
    let d = model.dim();
    let e1 = |r: f64| {
        let mut u = vec![0.0; d];
        u[0] = r;
        u
    };
    let (x_lo, x_hi, x_centre) = match model {
        ModelSpec::KnudsenGas { geometry, .. } => {
            let (lo, hi) = geometry_box(geometry);
            let c: Vec<f64> = match geometry {
                Geometry::Disk { .. } => vec![0.0; d],
                _ => lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect(),
            };
            (lo, hi, c)
        }
        _ if model.is_torus() => (vec![0.0; d], vec![1.0; d], vec![0.5; d]),
        _ => {
            let lx = ray_extent(|r| phi.eval(&e1(r), &vec![0.0; d]), level, CAP)
                .unwrap_or(FALLBACK_X)
                .max(1e-3);
            (vec![-lx; d], vec![lx; d], vec![0.0; d])
        }
    };
    let (lv, ball) = match model {
        ModelSpec::RunTumble { r0, .. } => (*r0, Some(*r0)),
        ModelSpec::KnudsenGas { wall_temp, .. } => (6.0 * wall_temp.range().1.sqrt(), None),
        _ => (
            ray_extent(|r| phi.eval(&x_centre, &e1(r)), level, CAP)
                .unwrap_or(FALLBACK_V)
                .max(1e-3),
            None,
        ),
    };
    PhaseBox {
        x_lo,
        x_hi,
        v_lo: vec![-lv; d],
        v_hi: vec![lv; d],
        v_ball: ball,
    }
}

/// Cell-centred tensor grid with `per_axis` nodes per coordinate, filtered to
/// the model's phase space.
pub fn grid_points(model: &ModelSpec, b: &PhaseBox, per_axis: usize) -> Vec<PhaseState> {
    let (lo, hi) = b.bounds();
    let dims = lo.len();
    let d = dims / 2;
    let total = per_axis.pow(dims as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims];
    for _ in 0..total {
        let c: Vec<f64> = (0..dims)
            .map(|k| lo[k] + (hi[k] - lo[k]) * (idx[k] as f64 + 0.5) / per_axis as f64)
            .collect();
        let z = PhaseState::new(c[..d].to_vec(), c[d..].to_vec());
        if admissible(model, b, &z) {
            out.push(z);
        }
        for i in idx.iter_mut() {
            *i += 1;
            if *i < per_axis {
                break;
            }
            *i = 0;
        }
    }
    out
}
