//! One-step simulators. Jump processes are integrated exactly (thinning
//! against explicit rate bounds), the Knudsen gas event by event, diffusions
//! by Euler–Maruyama.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use super::boundary::{sample_cl_kernel, sample_diffuse, sample_maxwell_boundary};
use super::collision::maxwellian_abs_moment;
use super::potential::PotentialSpec;
use super::spec::{BoundarySpec, ModelSpec, Scatter};
use super::PhaseState;
use crate::error::{invalid, Error, Result};
use crate::numerics::{bracket, dot, norm, norm2};

const VERLET_H: f64 = 1e-2;
const MAX_WALL_HITS: usize = 10_000_000;

#[derive(Clone, Debug)]
enum Flow {
    Free { torus: bool },
    Harmonic { omega: f64 },
    Verlet { pot: PotentialSpec, torus: bool },
}

/// Validated model plus precomputed constants for repeated stepping.
#[derive(Clone, Debug)]
pub struct Dynamics {
    model: ModelSpec,
    flow: Flow,
    sigma_sup: f64,
    m_gamma: f64,
    phi_inf: f64,
}

fn wrap(x: &mut [f64]) {
    for a in x.iter_mut() {
        *a = a.rem_euclid(1.0);
        if *a >= 1.0 {
            *a = 0.0;
        }
    }
}

/// Uniform unit vector in `d` dimensions.
pub(crate) fn unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&g);
        if n > 1e-300 {
            return g.into_iter().map(|a| a / n).collect();
        }
    }
}

/// Uniform point of the ball of radius `r`.
pub(crate) fn uniform_ball<R: Rng + ?Sized>(d: usize, r: f64, rng: &mut R) -> Vec<f64> {
    let u: f64 = rng.random();
    let rad = r * u.powf(1.0 / d as f64);
    unit_vector(d, rng).into_iter().map(|a| rad * a).collect()
}

pub(crate) fn gaussian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn flow_for(model: &ModelSpec) -> Flow {
    let torus = model.is_torus();
    match model.potential() {
        PotentialSpec::None => Flow::Free { torus },
        PotentialSpec::Quadratic { k } if !torus => Flow::Harmonic { omega: k.sqrt() },
        PotentialSpec::Power { gamma_exp } if gamma_exp == 2.0 && !torus => {
            Flow::Harmonic { omega: 1.0 }
        }
        pot => Flow::Verlet { pot, torus },
    }
}

impl Dynamics {
    pub fn new(model: &ModelSpec) -> Result<Self> {
        model.validate()?;
        let (sigma_sup, m_gamma) = match model {
            ModelSpec::DegenerateBoltzmann { sigma, .. } => (sigma.sup(), 0.0),
            ModelSpec::LinearBoltzmann { gamma_hard, d, .. } => {
                (0.0, maxwellian_abs_moment(*d, *gamma_hard))
            }
            _ => (0.0, 0.0),
        };
        Ok(Dynamics {
            model: model.clone(),
            flow: flow_for(model),
            sigma_sup,
            m_gamma,
            phi_inf: model.potential().infimum(model.dim()),
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    /// Largest admissible integrator step for diffusions, `None` for exact simulators.
    ///
    /// For the kinetic Fokker–Planck process with linear friction and
    /// `Φ'' ≤ 1` this is the Euler–Maruyama linear-stability bound `1/L` with
    /// `L = sup ‖∇²Φ‖`; tamed schemes use a fixed accuracy cap.
    pub fn stability_limit(&self) -> Option<f64> {
        match &self.model {
            ModelSpec::KineticFokkerPlanck {
                gamma_exp,
                beta_friction,
                ..
            } => {
                if *beta_friction == 2.0 && *gamma_exp <= 2.0 {
                    Some(1.0)
                } else {
                    Some(0.1)
                }
            }
            ModelSpec::FitzHughNagumo { .. } => Some(0.1),
            _ => None,
        }
    }

    fn flow(&self, x: &mut [f64], v: &mut [f64], t: f64) {
        if t <= 0.0 {
            return;
        }
        match &self.flow {
            Flow::Free { torus } => {
                for (a, b) in x.iter_mut().zip(v.iter()) {
                    *a += b * t;
                }
                if *torus {
                    wrap(x);
                }
            }
            Flow::Harmonic { omega } => {
                let (s, c) = (omega * t).sin_cos();
                for (a, b) in x.iter_mut().zip(v.iter_mut()) {
                    let (x0, v0) = (*a, *b);
                    *a = x0 * c + v0 / omega * s;
                    *b = -x0 * omega * s + v0 * c;
                }
            }
            Flow::Verlet { pot, torus } => {
                let n = (t / VERLET_H).ceil().max(1.0) as usize;
                let h = t / n as f64;
                let mut g = pot.grad(x);
                for _ in 0..n {
                    for i in 0..x.len() {
                        v[i] -= 0.5 * h * g[i];
                        x[i] += h * v[i];
                    }
                    g = pot.grad(x);
                    for i in 0..x.len() {
                        v[i] -= 0.5 * h * g[i];
                    }
                }
                if *torus {
                    wrap(x);
                }
            }
        }
    }

    /// Speed bound along the current flight from energy conservation.
    fn speed_bound(&self, s: &PhaseState) -> f64 {
        match &self.flow {
            Flow::Free { .. } => norm(&s.v),
            _ => {
                let pot = self.model.potential();
                let h = pot.value(&s.x) + 0.5 * norm2(&s.v) - self.phi_inf;
                (2.0 * h.max(0.0)).sqrt() * 1.01 + 1e-9
            }
        }
    }

    /// Advances `s` by `dt`: exactly for jump processes and the Knudsen gas,
    /// one integrator step for diffusions.
    pub fn step<R: Rng + ?Sized>(&self, s: &mut PhaseState, dt: f64, rng: &mut R) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("dt must be > 0 and finite (got {dt})"));
        }
        if let Some(limit) = self.stability_limit() {
            if dt > limit {
                return Err(Error::StabilityLimit { dt, limit });
            }
        }
        if !s.alive {
            s.t += dt;
            return Ok(());
        }
        match &self.model {
            ModelSpec::LinearBgk { .. } => self.step_bgk(s, dt, rng),
            ModelSpec::LinearBoltzmann {
                gamma_hard, b_const, ..
            } => self.step_boltzmann(s, dt, *gamma_hard, *b_const, rng),
            ModelSpec::DegenerateBoltzmann { sigma, scatter, .. } => {
                let mut rem = dt;
                if self.sigma_sup <= 0.0 {
                    self.flow(&mut s.x, &mut s.v, rem);
                } else {
                    loop {
                        let tau: f64 = rng.sample::<f64, _>(Exp1) / self.sigma_sup;
                        if tau >= rem {
                            self.flow(&mut s.x, &mut s.v, rem);
                            break;
                        }
                        self.flow(&mut s.x, &mut s.v, tau);
                        rem -= tau;
                        if rng.random::<f64>() * self.sigma_sup < sigma.eval(&s.x) {
                            s.v = match scatter {
                                Scatter::Uniform { v_radius } => {
                                    uniform_ball(s.v.len(), *v_radius, rng)
                                }
                                Scatter::Maxwellian => gaussian(s.v.len(), rng),
                            };
                        }
                    }
                }
            }
            ModelSpec::RunTumble {
                chi, psi, signal, r0, ..
            } => {
                let bound = 1.0 + chi;
                let mut rem = dt;
                loop {
                    let tau: f64 = rng.sample::<f64, _>(Exp1) / bound;
                    if tau >= rem {
                        self.flow(&mut s.x, &mut s.v, rem);
                        break;
                    }
                    self.flow(&mut s.x, &mut s.v, tau);
                    rem -= tau;
                    let m = dot(&s.v, &signal.grad(&s.x));
                    if rng.random::<f64>() * bound < 1.0 - chi * psi.eval(m) {
                        s.v = uniform_ball(s.v.len(), *r0, rng);
                    }
                }
            }
            ModelSpec::KnudsenGas {
                geometry,
                boundary,
                wall_temp,
            } => {
                let mut rem = dt;
                let mut hits = 0usize;
                while rem > 0.0 {
                    let Some(hit) = geometry.next_hit(&s.x, &s.v) else {
                        break;
                    };
                    if hit.time >= rem {
                        for (a, b) in s.x.iter_mut().zip(&s.v) {
                            *a += b * rem;
                        }
                        break;
                    }
                    for (a, b) in s.x.iter_mut().zip(&s.v) {
                        *a += b * hit.time;
                    }
                    geometry.snap_to_boundary(&mut s.x, &hit.normal);
                    rem -= hit.time;
                    let n = &hit.normal;
                    let tw = wall_temp.eval(&s.x);
                    // a velocity grazing or pointing inward is re-emitted diffusely
                    let u_in = if dot(&s.v, n) >= 0.0 { s.v.clone() } else { vec![0.0; n.len()] };
                    s.v = match boundary {
                        BoundarySpec::Absorbing => {
                            s.alive = false;
                            break;
                        }
                        BoundarySpec::Diffuse => sample_diffuse(n, tw, rng),
                        BoundarySpec::Maxwell { accommodation } => {
                            sample_maxwell_boundary(&u_in, n, accommodation.eval(&s.x), tw, rng)?
                        }
                        BoundarySpec::CercignaniLampis { r_perp, r_par } => {
                            sample_cl_kernel(&u_in, n, *r_perp, *r_par, tw, rng)?
                        }
                    };
                    hits += 1;
                    if hits > MAX_WALL_HITS {
                        return Err(Error::NonFinite(
                            "wall-hit budget exhausted within one step".into(),
                        ));
                    }
                }
            }
            ModelSpec::KineticFokkerPlanck {
                gamma_exp,
                beta_friction,
                ..
            } => {
                let sq = (2.0 * dt).sqrt();
                let gx = bracket(&s.x).powf(gamma_exp - 2.0);
                let gv = bracket(&s.v).powf(beta_friction - 2.0);
                let tamed = !(*beta_friction == 2.0 && *gamma_exp <= 2.0);
                let d = s.x.len();
                let mut drift = [0.0f64; 3];
                for ((dr, x), v) in drift.iter_mut().zip(&s.x).zip(&s.v) {
                    *dr = -gx * x - gv * v;
                }
                let scale = if tamed { 1.0 / (1.0 + dt * norm(&drift[..d])) } else { 1.0 };
                for ((x, v), dr) in s.x.iter_mut().zip(s.v.iter_mut()).zip(&drift) {
                    *x += dt * *v;
                    let xi: f64 = rng.sample(StandardNormal);
                    *v += dt * scale * dr + sq * xi;
                }
            }
            ModelSpec::FitzHughNagumo { a, b, c } => {
                let (x, v) = (s.x[0], s.v[0]);
                let da = -(a * x - b * v);
                let db = -(x + v * (v - 1.0) * (v - c));
                let scale = 1.0 / (1.0 + dt * (da * da + db * db).sqrt());
                let xi: f64 = rng.sample(StandardNormal);
                s.x[0] = x + dt * scale * da;
                s.v[0] = v + dt * scale * db + (2.0 * dt).sqrt() * xi;
            }
        }
        s.t += dt;
        if !s.is_finite() {
            return Err(Error::NonFinite(format!(
                "state left the finite range: x={:?} v={:?}",
                s.x, s.v
            )));
        }
        Ok(())
    }

    fn step_bgk<R: Rng + ?Sized>(&self, s: &mut PhaseState, dt: f64, rng: &mut R) {
        let mut rem = dt;
        loop {
            let tau: f64 = rng.sample(Exp1);
            if tau >= rem {
                self.flow(&mut s.x, &mut s.v, rem);
                return;
            }
            self.flow(&mut s.x, &mut s.v, tau);
            rem -= tau;
            s.v = gaussian(s.v.len(), rng);
        }
    }

    /// Collision rate `b Λ_γ(v)` simulated by thinning in `(t, v*)`: the
    /// proposal intensity `b (v̄^γ + |v*|^γ) M(v*)` dominates `b |v - v*|^γ M(v*)`
    /// for `γ ≤ 1` and `|v| ≤ v̄`, and its `v*` marginal is a two-component mixture.
    fn step_boltzmann<R: Rng + ?Sized>(
        &self,
        s: &mut PhaseState,
        dt: f64,
        gamma: f64,
        b: f64,
        rng: &mut R,
    ) {
        let d = s.v.len();
        let mut rem = dt;
        let radial = Gamma::new((d as f64 + gamma) / 2.0, 2.0).expect("valid gamma law");
        loop {
            let a = if gamma == 0.0 {
                0.0
            } else {
                self.speed_bound(s).powf(gamma)
            };
            let (rate, mg) = if gamma == 0.0 { (b, 0.0) } else { (b * (a + self.m_gamma), self.m_gamma) };
            let tau: f64 = rng.sample::<f64, _>(Exp1) / rate;
            if tau >= rem {
                self.flow(&mut s.x, &mut s.v, rem);
                return;
            }
            self.flow(&mut s.x, &mut s.v, tau);
            rem -= tau;
            let vstar = if gamma == 0.0 || rng.random::<f64>() * (a + mg) < a {
                gaussian(d, rng)
            } else {
                let r = radial.sample(rng).sqrt();
                unit_vector(d, rng).into_iter().map(|u| r * u).collect()
            };
            let rel: Vec<f64> = s.v.iter().zip(&vstar).map(|(p, q)| p - q).collect();
            let rn = norm(&rel);
            let accept = if gamma == 0.0 {
                1.0
            } else {
                rn.powf(gamma) / (a + norm(&vstar).powf(gamma))
            };
            if rng.random::<f64>() < accept {
                let sigma = unit_vector(d, rng);
                for i in 0..d {
                    s.v[i] = 0.5 * (s.v[i] + vstar[i]) + 0.5 * rn * sigma[i];
                }
            }
        }
    }

    /// Advances by `duration`, splitting into equal integrator steps no
    /// longer than `dt_max` for diffusions.
    pub fn advance<R: Rng + ?Sized>(
        &self,
        s: &mut PhaseState,
        duration: f64,
        dt_max: f64,
        rng: &mut R,
    ) -> Result<()> {
        if duration <= 0.0 {
            return Ok(());
        }
        if self.model.is_diffusion() {
            let n = (duration / dt_max).ceil().max(1.0) as usize;
            let h = duration / n as f64;
            for _ in 0..n {
                self.step(s, h, rng)?;
            }
            Ok(())
        } else {
            self.step(s, duration, rng)
        }
    }
}

/// Convenience wrapper: validates `model` and returns the state after one step.
pub fn step<R: Rng + ?Sized>(
    model: &ModelSpec,
    s: &PhaseState,
    dt: f64,
    rng: &mut R,
) -> Result<PhaseState> {
    let dynamics = Dynamics::new(model)?;
    s.validate_for(model)?;
    let mut out = s.clone();
    dynamics.step(&mut out, dt, rng)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::boundary::Geometry;
    use crate::models::spec::{Domain, ScalarField};
    use crate::rng::RngStream;

    fn torus_bgk() -> ModelSpec {
        ModelSpec::LinearBgk {
            domain: Domain::Torus { d: 1 },
            potential: PotentialSpec::None,
        }
    }

    #[test]
    fn bgk_free_flight_without_jump_is_transport() {
        let m = torus_bgk();
        let dyns = Dynamics::new(&m).unwrap();
        let mut s = PhaseState::new(vec![0.9], vec![0.3]);
        dyns.flow(&mut s.x, &mut s.v, 1.0);
        assert!((s.x[0] - 0.2).abs() < 1e-12);
        assert!((0.0..1.0).contains(&s.x[0]));
    }

    #[test]
    fn harmonic_flow_conserves_energy() {
        let m = ModelSpec::LinearBgk {
            domain: Domain::WholeSpace { d: 2 },
            potential: PotentialSpec::Quadratic { k: 4.0 },
        };
        let dyns = Dynamics::new(&m).unwrap();
        let mut x = vec![1.0, -0.5];
        let mut v = vec![0.2, 0.7];
        let e0 = 2.0 * norm2(&x) + 0.5 * norm2(&v);
        dyns.flow(&mut x, &mut v, 3.7);
        let e1 = 2.0 * norm2(&x) + 0.5 * norm2(&v);
        assert!((e0 - e1).abs() < 1e-12);
    }

    #[test]
    fn knudsen_specular_preserves_speed() {
        let m = ModelSpec::KnudsenGas {
            geometry: Geometry::Disk { radius: 1.0 },
            boundary: BoundarySpec::Maxwell {
                accommodation: ScalarField::constant(0.0),
            },
            wall_temp: ScalarField::constant(1.0),
        };
        let dyns = Dynamics::new(&m).unwrap();
        let mut rng = RngStream::new(1, 0);
        let mut s = PhaseState::new(vec![0.1, 0.2], vec![1.3, -0.4]);
        let sp = norm(&s.v);
        dyns.step(&mut s, 25.0, &mut rng).unwrap();
        assert!((norm(&s.v) - sp).abs() < 1e-9);
        assert!(norm(&s.x) <= 1.0 + 1e-12);
    }

    #[test]
    fn stability_limit_is_enforced() {
        let m = ModelSpec::KineticFokkerPlanck {
            gamma_exp: 2.0,
            beta_friction: 2.0,
            d: 1,
        };
        let dyns = Dynamics::new(&m).unwrap();
        let mut rng = RngStream::new(1, 0);
        let mut s = PhaseState::new(vec![0.0], vec![0.0]);
        match dyns.step(&mut s, 2.0, &mut rng) {
            Err(Error::StabilityLimit { limit, .. }) => assert_eq!(limit, 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn absorbed_particles_stay_put() {
        let m = ModelSpec::KnudsenGas {
            geometry: Geometry::Interval,
            boundary: BoundarySpec::Absorbing,
            wall_temp: ScalarField::constant(1.0),
        };
        let dyns = Dynamics::new(&m).unwrap();
        let mut rng = RngStream::new(1, 0);
        let mut s = PhaseState::new(vec![0.25], vec![0.5]);
        dyns.step(&mut s, 2.0, &mut rng).unwrap();
        assert!(!s.alive);
        assert_eq!(s.x, vec![1.0]);
        dyns.step(&mut s, 2.0, &mut rng).unwrap();
        assert_eq!(s.x, vec![1.0]);
    }
}
