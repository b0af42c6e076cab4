//! Ensembles of independent trajectories observed on a time grid.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::dynamics::gaussian;
use crate::models::{equilibrium_sampler, BoundarySpec, Dynamics, ModelSpec, PhaseState};
use crate::rng::{derive_seed, salts, RngStream};

/// Initial law of an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    /// Every trajectory starts at `(x, v)`.
    Dirac { x: Vec<f64>, v: Vec<f64> },
    /// Exact draws from the model's explicit equilibrium.
    Equilibrium,
    /// Explicit starting states, cycled if fewer than `N`.
    Custom { states: Vec<PhaseState> },
}

/// `N` states at a common time, stored as flat coordinate arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSnapshot {
    pub t: f64,
    pub n: usize,
    pub d: usize,
    /// `n × d` positions, row-major.
    pub x: Vec<f64>,
    /// `n × d` velocities, row-major.
    pub v: Vec<f64>,
    /// `false` for absorbed trajectories.
    pub alive: Vec<bool>,
    pub master_seed: u64,
    pub model_fingerprint: String,
}

impl EnsembleSnapshot {
    pub fn from_states(t: f64, states: &[PhaseState], master_seed: u64, model: &ModelSpec) -> Self {
        let d = model.dim();
        let mut x = Vec::with_capacity(states.len() * d);
        let mut v = Vec::with_capacity(states.len() * d);
        for s in states {
            x.extend_from_slice(&s.x);
            v.extend_from_slice(&s.v);
        }
        EnsembleSnapshot {
            t,
            n: states.len(),
            d,
            x,
            v,
            alive: states.iter().map(|s| s.alive).collect(),
            master_seed,
            model_fingerprint: model.fingerprint(),
        }
    }

    pub fn state(&self, i: usize) -> PhaseState {
        let r = i * self.d..(i + 1) * self.d;
        PhaseState {
            x: self.x[r.clone()].to_vec(),
            v: self.v[r].to_vec(),
            t: self.t,
            alive: self.alive[i],
        }
    }

    pub fn states(&self) -> Vec<PhaseState> {
        (0..self.n).map(|i| self.state(i)).collect()
    }

    pub fn alive_fraction(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.alive.iter().filter(|a| **a).count() as f64 / self.n as f64
    }
}

/// Explicit invariant law of a Knudsen gas with constant wall temperature
/// and mass-conserving walls: uniform position, `N(0, T)` velocity.
pub fn knudsen_reference<R: Rng + ?Sized>(model: &ModelSpec, rng: &mut R) -> Option<PhaseState> {
    let ModelSpec::KnudsenGas {
        geometry,
        boundary,
        wall_temp,
    } = model
    else {
        return None;
    };
    if matches!(boundary, BoundarySpec::Absorbing) || !wall_temp.is_constant() {
        return None;
    }
    if let BoundarySpec::Maxwell { accommodation } = boundary {
        if !accommodation.is_constant() {
            return None;
        }
    }
    let sd = wall_temp.range().0.sqrt();
    let d = geometry.dim();
    let (lo, hi): (Vec<f64>, Vec<f64>) = match geometry {
        crate::models::Geometry::Interval => (vec![0.0], vec![1.0]),
        crate::models::Geometry::Disk { radius } => (vec![-radius; 2], vec![*radius; 2]),
        crate::models::Geometry::Box { sides } => (vec![0.0; d], sides.clone()),
    };
    let x = loop {
        let x: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| a + (b - a) * rng.random::<f64>())
            .collect();
        if geometry.contains(&x) {
            break x;
        }
    };
    let v = gaussian(d, rng).into_iter().map(|a| sd * a).collect();
    Some(PhaseState::new(x, v))
}

/// Draw from the explicit stationary law, if the model has one.
pub fn stationary_draw<R: Rng + ?Sized>(model: &ModelSpec, rng: &mut R) -> Result<PhaseState> {
    if let ModelSpec::KnudsenGas { .. } = model {
        return knudsen_reference(model, rng).ok_or_else(|| {
            Error::Unsupported("this Knudsen gas has no explicit stationary law".into())
        });
    }
    equilibrium_sampler(model, rng)
}

/// True if [`stationary_draw`] succeeds for `model`.
pub fn has_explicit_stationary_law(model: &ModelSpec) -> bool {
    let mut rng = RngStream::new(0, 0);
    stationary_draw(model, &mut rng).is_ok()
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid[0] != 0.0 {
        return invalid("t_grid must start at 0");
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || !t_grid.iter().all(|t| t.is_finite()) {
        return invalid("t_grid must be finite and strictly increasing");
    }
    Ok(())
}

/// Initial states; trajectory `i` draws from `RngStream(seed', i)` with a
/// seed derived from the master seed.
pub fn initial_states(model: &ModelSpec, init: &InitSpec, n: usize, master_seed: u64) -> Result<Vec<PhaseState>> {
    let states: Vec<PhaseState> = match init {
        InitSpec::Dirac { x, v } => {
            let s = PhaseState::new(x.clone(), v.clone());
            s.validate_for(model)?;
            vec![s; n]
        }
        InitSpec::Equilibrium => {
            let seed = derive_seed(master_seed, salts::INITIAL_LAW);
            stationary_draw(model, &mut RngStream::new(seed, 0))?;
            (0..n)
                .into_par_iter()
                .map(|i| stationary_draw(model, &mut RngStream::new(seed, i as u64)))
                .collect::<Result<_>>()?
        }
        InitSpec::Custom { states } => {
            if states.is_empty() {
                return invalid("custom init needs at least one state");
            }
            for s in states {
                s.validate_for(model)?;
            }
            (0..n).map(|i| states[i % states.len()].clone()).collect()
        }
    };
    Ok(states)
}

/// Runs `n` trajectories from `init` and hands the snapshot at every grid
/// time to `observe`, without retaining past snapshots. Trajectory `i`
/// uses `RngStream(master_seed, i)`.
pub fn simulate_ensemble_with<F>(
    model: &ModelSpec,
    init: &InitSpec,
    n: usize,
    t_grid: &[f64],
    master_seed: u64,
    dt_max: f64,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(&EnsembleSnapshot) -> Result<()>,
{
    check_grid(t_grid)?;
    if n == 0 {
        return invalid("N must be positive");
    }
    let dynamics = Dynamics::new(model)?;
    if let Some(limit) = dynamics.stability_limit() {
        if dt_max > limit {
            return Err(Error::StabilityLimit { dt: dt_max, limit });
        }
    }
    let mut states = initial_states(model, init, n, master_seed)?;
    let mut rngs: Vec<RngStream> = (0..n).map(|i| RngStream::new(master_seed, i as u64)).collect();
    observe(&EnsembleSnapshot::from_states(0.0, &states, master_seed, model))?;
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        states
            .par_iter_mut()
            .zip(rngs.par_iter_mut())
            .try_for_each(|(s, r)| dynamics.advance(s, dt, dt_max, r))?;
        observe(&EnsembleSnapshot::from_states(w[1], &states, master_seed, model))?;
    }
    Ok(())
}

/// Collects every snapshot of [`simulate_ensemble_with`].
pub fn simulate_ensemble(
    model: &ModelSpec,
    init: &InitSpec,
    n: usize,
    t_grid: &[f64],
    master_seed: u64,
    dt_max: f64,
) -> Result<Vec<EnsembleSnapshot>> {
    let mut out = Vec::with_capacity(t_grid.len());
    simulate_ensemble_with(model, init, n, t_grid, master_seed, dt_max, |s| {
        out.push(s.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Final snapshot only.
pub fn simulate_to(
    model: &ModelSpec,
    init: &InitSpec,
    n: usize,
    t_end: f64,
    master_seed: u64,
    dt_max: f64,
) -> Result<EnsembleSnapshot> {
    let mut last = None;
    simulate_ensemble_with(model, init, n, &[0.0, t_end], master_seed, dt_max, |s| {
        last = Some(s.clone());
        Ok(())
    })?;
    Ok(last.unwrap())
}

/// Reference ensemble for "distance to equilibrium": exact stationary draws
/// when available, else a long run to `t_long` from `init` (a proxy).
pub fn reference_ensemble(
    model: &ModelSpec,
    init: &InitSpec,
    n: usize,
    t_long: f64,
    master_seed: u64,
    dt_max: f64,
) -> Result<(EnsembleSnapshot, ReferenceKind)> {
    if let ModelSpec::KnudsenGas {
        boundary: BoundarySpec::Absorbing,
        ..
    } = model
    {
        let z = initial_states(model, init, 1, master_seed)?.remove(0);
        let mut dead = vec![z; n];
        for s in &mut dead {
            s.alive = false;
        }
        let seed = derive_seed(master_seed, salts::EQUILIBRIUM_REFERENCE);
        return Ok((
            EnsembleSnapshot::from_states(f64::INFINITY, &dead, seed, model),
            ReferenceKind::Extinct,
        ));
    }
    if has_explicit_stationary_law(model) {
        let seed = derive_seed(master_seed, salts::EQUILIBRIUM_REFERENCE);
        let states: Vec<PhaseState> = (0..n)
            .into_par_iter()
            .map(|i| stationary_draw(model, &mut RngStream::new(seed, i as u64)))
            .collect::<Result<_>>()?;
        return Ok((
            EnsembleSnapshot::from_states(f64::INFINITY, &states, seed, model),
            ReferenceKind::Equilibrium,
        ));
    }
    let seed = derive_seed(master_seed, salts::LONG_RUN);
    let snap = simulate_to(model, init, n, t_long, seed, dt_max)?;
    Ok((snap, ReferenceKind::LongRunProxy { t: t_long }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Fresh exact draws from the stationary law.
    Equilibrium,
    /// Ensemble run to time `t` from the same initial law; a proxy for the
    /// unknown stationary law.
    LongRunProxy { t: f64 },
    /// Absorbing walls: the limit is the zero measure.
    Extinct,
}

impl ReferenceKind {
    pub fn label(&self) -> String {
        match self {
            ReferenceKind::Equilibrium => "equilibrium".into(),
            ReferenceKind::LongRunProxy { t } => format!("long-run proxy at t = {t}"),
            ReferenceKind::Extinct => "zero measure (absorbing walls)".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::presets::preset;

    #[test]
    fn snapshot_roundtrip() {
        let p = preset("knudsen_disk").unwrap();
        let s = vec![PhaseState::new(vec![0.1, 0.2], vec![1.0, -1.0]); 3];
        let snap = EnsembleSnapshot::from_states(0.5, &s, 7, &p.model);
        assert_eq!(snap.state(2).x, vec![0.1, 0.2]);
        assert_eq!(snap.alive_fraction(), 1.0);
    }

    #[test]
    fn grid_must_start_at_zero() {
        let p = preset("torus_bgk").unwrap();
        let init = InitSpec::Dirac {
            x: vec![0.5],
            v: vec![0.0],
        };
        assert!(simulate_ensemble(&p.model, &init, 4, &[0.5, 1.0], 0, 1e-2).is_err());
    }

    #[test]
    fn knudsen_reference_is_inside() {
        let p = preset("knudsen_disk").unwrap();
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            let z = knudsen_reference(&p.model, &mut rng).unwrap();
            assert!(z.x[0].hypot(z.x[1]) < 1.0);
        }
        assert!(knudsen_reference(&preset("knudsen_absorbing").unwrap().model, &mut rng).is_none());
    }
}
