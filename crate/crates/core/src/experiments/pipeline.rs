//! End-to-end distance-to-equilibrium experiment: simulate, bin, measure, fit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ensemble::{initial_states, reference_ensemble, simulate_ensemble_with, EnsembleSnapshot, InitSpec, ReferenceKind};
use super::fit::{decay_fit, noise_window, DecayCurve, FitKind, FitRecord};
use super::tv::{weighted_tv, Binning, Projection};
use crate::error::{invalid, Result};
use crate::models::{ModelSpec, WeightFn};

/// Observation times, always starting at 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeGrid {
    /// `n` equal steps on `[0, t_max]`.
    Linear { t_max: f64, n: usize },
    /// `0` followed by `n` log-spaced times from `t_first` to `t_max`.
    Log { t_max: f64, n: usize, t_first: f64 },
    Explicit { times: Vec<f64> },
}

impl TimeGrid {
    pub fn times(&self) -> Result<Vec<f64>> {
        let out = match self {
            TimeGrid::Linear { t_max, n } => {
                if !(*t_max > 0.0) || *n == 0 {
                    return invalid("linear grid needs t_max > 0 and n > 0");
                }
                (0..=*n).map(|i| t_max * i as f64 / *n as f64).collect()
            }
            TimeGrid::Log { t_max, n, t_first } => {
                if !(*t_first > 0.0 && t_max > t_first) || *n < 2 {
                    return invalid("log grid needs 0 < t_first < t_max and n >= 2");
                }
                let r = (t_max / t_first).ln();
                let mut v = vec![0.0];
                v.extend((0..*n).map(|i| t_first * (r * i as f64 / (*n - 1) as f64).exp()));
                v
            }
            TimeGrid::Explicit { times } => times.clone(),
        };
        Ok(out)
    }

    pub fn t_max(&self) -> f64 {
        match self {
            TimeGrid::Linear { t_max, .. } | TimeGrid::Log { t_max, .. } => *t_max,
            TimeGrid::Explicit { times } => times.last().copied().unwrap_or(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TvDecayConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub grid: TimeGrid,
    pub init: Option<InitSpec>,
    /// Weight tag from the catalog; `None` for `φ ≡ 1`.
    pub weight: Option<String>,
    pub weight_params: BTreeMap<String, f64>,
    pub projection: Projection,
    pub bins_per_axis: usize,
    pub fit: FitKind,
    /// Time bounds on the fit window; the window still ends at the noise floor.
    pub window: Option<(f64, f64)>,
    pub noise_factor: f64,
    pub dt_max: f64,
    pub seed: u64,
}

impl Default for TvDecayConfig {
    fn default() -> Self {
        TvDecayConfig {
            n: 100_000,
            grid: TimeGrid::Linear { t_max: 20.0, n: 100 },
            init: None,
            weight: None,
            weight_params: BTreeMap::new(),
            projection: Projection::Full,
            bins_per_axis: 32,
            fit: FitKind::Exponential,
            window: None,
            noise_factor: 3.0,
            dt_max: 1e-2,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TvDecayOutput {
    pub curve: DecayCurve,
    pub reference: ReferenceKind,
    pub init: InitSpec,
    pub n: usize,
    pub seed: u64,
    /// Largest clipped-mass fraction over the curve.
    pub max_clipped: f64,
    pub warnings: Vec<String>,
}

/// Default starting point: the origin at rest, moved into the domain when
/// the origin is not admissible.
pub fn default_init(model: &ModelSpec) -> InitSpec {
    let d = model.dim();
    let (x, v) = match model {
        ModelSpec::KnudsenGas { geometry, .. } => {
            let x = match geometry {
                crate::models::Geometry::Disk { .. } => vec![0.0; d],
                crate::models::Geometry::Interval => vec![0.5],
                crate::models::Geometry::Box { sides } => sides.iter().map(|s| s / 2.0).collect(),
            };
            let mut v = vec![0.0; d];
            v[0] = 1.0;
            (x, v)
        }
        _ if model.is_torus() => (vec![0.5; d], vec![0.0; d]),
        _ => (vec![0.0; d], vec![0.0; d]),
    };
    InitSpec::Dirac { x, v }
}

pub fn run_tv_decay(model: &ModelSpec, phi: &WeightFn, cfg: &TvDecayConfig) -> Result<TvDecayOutput> {
    let times = cfg.grid.times()?;
    let init = cfg.init.clone().unwrap_or_else(|| default_init(model));
    let t_long = 4.0 * cfg.grid.t_max();
    let (reference, kind) = reference_ensemble(model, &init, cfg.n, t_long, cfg.seed, cfg.dt_max)?;
    let start = EnsembleSnapshot::from_states(0.0, &initial_states(model, &init, cfg.n, cfg.seed)?, cfg.seed, model);
    let binning = Binning::auto(model, &[&reference, &start], cfg.projection, cfg.bins_per_axis)?;
    let (mut tv, mut l1, mut noise, mut clipped) = (vec![], vec![], vec![], vec![]);
    let mut warnings = vec![];
    let one = WeightFn::constant();
    simulate_ensemble_with(model, &init, cfg.n, &times, cfg.seed, cfg.dt_max, |snap| {
        let e = weighted_tv(snap, &reference, phi, &binning)?;
        let u = if phi.is_constant() { e.l1 } else { weighted_tv(snap, &reference, &one, &binning)?.l1 };
        if let Some(w) = e.warning {
            warnings.push(format!("t = {}: {w}", snap.t));
        }
        tv.push(e.weighted_l1);
        l1.push(u);
        noise.push(e.noise);
        clipped.push(e.clipped_a.max(e.clipped_b));
        Ok(())
    })?;
    let (a, b) = cfg.window.unwrap_or((0.0, f64::INFINITY));
    let window = noise_window(&times, &tv, &noise, cfg.noise_factor, a, b);
    let fit = if cfg.fit == FitKind::None {
        FitRecord::none()
    } else {
        decay_fit(&times, &tv, cfg.fit, window.clone())?
    };
    let alternative_fit = match cfg.fit {
        FitKind::Exponential => Some(decay_fit(&times, &tv, FitKind::Power, window)?),
        FitKind::Power => Some(decay_fit(&times, &tv, FitKind::Exponential, window)?),
        FitKind::None => None,
    };
    let max_clipped = clipped.iter().copied().fold(0.0, f64::max);
    Ok(TvDecayOutput {
        curve: DecayCurve {
            times,
            tv_values: tv,
            l1_values: l1,
            noise,
            clipped,
            phi_tag: phi.tag().to_string(),
            weight_fingerprint: phi.fingerprint(),
            reference: kind.label(),
            binning,
            fit,
            alternative_fit,
        },
        reference: kind,
        init,
        n: cfg.n,
        seed: cfg.seed,
        max_clipped,
        warnings,
    })
}
