//! Formal adjoint `L*φ(z)` of each model's generator.

use super::potential::PotentialSpec;
use super::spec::{ModelSpec, Scatter};
use super::weights::{fd_derivs, WeightDerivs, WeightFn};
use super::PhaseState;
use crate::error::{Error, Result};
use crate::numerics::{bracket, dot, gauss_hermite_normal, gauss_legendre_on, norm};

/// Discrete probability measure on velocities.
#[derive(Clone, Debug)]
struct VelocityRule {
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl VelocityRule {
    fn normalised(mut self) -> Self {
        let s: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= s;
        }
        self
    }

    /// Standard Gaussian, tensor Gauss–Hermite.
    fn gaussian(d: usize) -> Self {
        let n = match d {
            1 => 40,
            2 => 20,
            _ => 16,
        };
        let (x, w) = gauss_hermite_normal(n);
        let mut nodes = vec![vec![]];
        let mut weights = vec![1.0];
        for _ in 0..d {
            let mut nn = Vec::with_capacity(nodes.len() * n);
            let mut nw = Vec::with_capacity(nodes.len() * n);
            for (p, pw) in nodes.iter().zip(&weights) {
                for (xi, wi) in x.iter().zip(&w) {
                    let mut q = p.clone();
                    q.push(*xi);
                    nn.push(q);
                    nw.push(pw * wi);
                }
            }
            nodes = nn;
            weights = nw;
        }
        VelocityRule { nodes, weights }.normalised()
    }

    /// Uniform measure on the unit sphere `S^{d-1}`.
    fn sphere(d: usize) -> Self {
        use std::f64::consts::PI;
        match d {
            1 => VelocityRule {
                nodes: vec![vec![1.0], vec![-1.0]],
                weights: vec![0.5, 0.5],
            },
            2 => {
                let m = 48;
                VelocityRule {
                    nodes: (0..m)
                        .map(|k| {
                            let a = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                            vec![a.cos(), a.sin()]
                        })
                        .collect(),
                    weights: vec![1.0; m],
                }
                .normalised()
            }
            _ => {
                let (mu, wmu) = gauss_legendre_on(12, -1.0, 1.0);
                let m = 24;
                let mut nodes = vec![];
                let mut weights = vec![];
                for (c, wc) in mu.iter().zip(&wmu) {
                    let s = (1.0 - c * c).max(0.0).sqrt();
                    for k in 0..m {
                        let a = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                        nodes.push(vec![s * a.cos(), s * a.sin(), *c]);
                        weights.push(*wc);
                    }
                }
                VelocityRule { nodes, weights }.normalised()
            }
        }
    }

    /// Uniform measure on the ball of radius `r`.
    fn ball(d: usize, r: f64) -> Self {
        if d == 1 {
            let (x, w) = gauss_legendre_on(48, -r, r);
            return VelocityRule {
                nodes: x.into_iter().map(|a| vec![a]).collect(),
                weights: w,
            }
            .normalised();
        }
        let (rad, wr) = gauss_legendre_on(if d == 2 { 24 } else { 16 }, 0.0, r);
        let sph = VelocityRule::sphere(d);
        let mut nodes = vec![];
        let mut weights = vec![];
        for (p, wp) in rad.iter().zip(&wr) {
            for (u, wu) in sph.nodes.iter().zip(&sph.weights) {
                nodes.push(u.iter().map(|a| p * a).collect());
                weights.push(wp * wu * p.powi(d as i32 - 1));
            }
        }
        VelocityRule { nodes, weights }.normalised()
    }

    fn mean<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * f(v))
            .sum()
    }
}

/// Precomputed quadrature for evaluating `L*φ` of one model.
#[derive(Clone, Debug)]
pub struct Generator {
    model: ModelSpec,
    pot: PotentialSpec,
    post_jump: Option<VelocityRule>,
    sphere: Option<VelocityRule>,
}

/// Derivatives of `φ`: analytic for catalogue weights, central differences otherwise.
pub fn weight_derivs(phi: &WeightFn, x: &[f64], v: &[f64]) -> WeightDerivs {
    phi.analytic_derivs(x, v)
        .unwrap_or_else(|| fd_derivs(phi, x, v))
}

impl Generator {
    pub fn new(model: &ModelSpec) -> Result<Self> {
        model.validate()?;
        let d = model.dim();
        let (post_jump, sphere) = match model {
            ModelSpec::LinearBgk { .. } => (Some(VelocityRule::gaussian(d)), None),
            ModelSpec::LinearBoltzmann { .. } => {
                let mut g = VelocityRule::gaussian(d);
                if d == 3 {
                    // coarser background rule keeps the double sum affordable
                    let (x, w) = gauss_hermite_normal(10);
                    let mut nodes = vec![];
                    let mut weights = vec![];
                    for i in 0..10 {
                        for j in 0..10 {
                            for k in 0..10 {
                                nodes.push(vec![x[i], x[j], x[k]]);
                                weights.push(w[i] * w[j] * w[k]);
                            }
                        }
                    }
                    g = VelocityRule { nodes, weights }.normalised();
                }
                (Some(g), Some(VelocityRule::sphere(d)))
            }
            ModelSpec::DegenerateBoltzmann { scatter, .. } => match scatter {
                Scatter::Uniform { v_radius } => (Some(VelocityRule::ball(d, *v_radius)), None),
                Scatter::Maxwellian => (Some(VelocityRule::gaussian(d)), None),
            },
            ModelSpec::RunTumble { r0, .. } => (Some(VelocityRule::ball(d, *r0)), None),
            _ => (None, None),
        };
        Ok(Generator {
            model: model.clone(),
            pot: model.potential(),
            post_jump,
            sphere,
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    fn transport(&self, d: &WeightDerivs, x: &[f64], v: &[f64]) -> f64 {
        let g = self.pot.grad(x);
        dot(v, &d.grad_x) - dot(&g, &d.grad_v)
    }

    /// `v·∇ₓφ` along free flight.
    fn flight(&self, phi: &WeightFn, x: &[f64], v: &[f64]) -> f64 {
        if let Some(val) = phi.flight_derivative(x, v) {
            return val;
        }
        if let Some(dv) = phi.analytic_derivs(x, v) {
            return dot(v, &dv.grad_x);
        }
        let speed = norm(v);
        if speed == 0.0 {
            return 0.0;
        }
        let h = 1e-4 * (1.0 + norm(x));
        let shift = |s: f64| -> Vec<f64> { x.iter().zip(v).map(|(a, b)| a + s * b / speed).collect() };
        let inside = |p: &[f64]| match &self.model {
            ModelSpec::KnudsenGas { geometry, .. } => geometry.contains(p),
            _ => true,
        };
        let (xp, xm) = (shift(h), shift(-h));
        let f0 = phi.eval(x, v);
        let slope = match (inside(&xp), inside(&xm)) {
            (true, true) => (phi.eval(&xp, v) - phi.eval(&xm, v)) / (2.0 * h),
            (true, false) => (phi.eval(&xp, v) - f0) / h,
            (false, true) => (f0 - phi.eval(&xm, v)) / h,
            (false, false) => 0.0,
        };
        slope * speed
    }

    /// Evaluates `L*φ(x, v)`.
    pub fn apply(&self, phi: &WeightFn, x: &[f64], v: &[f64]) -> Result<f64> {
        let value = phi.eval(x, v);
        if !value.is_finite() {
            return Err(Error::NonFinite(format!(
                "weight is not finite at x={x:?} v={v:?}"
            )));
        }
        if phi.is_constant() {
            return Ok(0.0);
        }
        let out = match &self.model {
            ModelSpec::LinearBgk { .. } => {
                let d = weight_derivs(phi, x, v);
                let avg = self.post_jump.as_ref().unwrap().mean(|w| phi.eval(x, w));
                self.transport(&d, x, v) + avg - value
            }
            ModelSpec::KineticFokkerPlanck { beta_friction, .. } => {
                let d = weight_derivs(phi, x, v);
                let fr = bracket(v).powf(beta_friction - 2.0);
                self.transport(&d, x, v) - fr * dot(v, &d.grad_v) + d.lap_v
            }
            ModelSpec::LinearBoltzmann {
                gamma_hard, b_const, ..
            } => {
                let d = weight_derivs(phi, x, v);
                let bg = self.post_jump.as_ref().unwrap();
                let sph = self.sphere.as_ref().unwrap();
                let dim = v.len();
                let mut coll = 0.0;
                let mut vp = vec![0.0; dim];
                for (vs, wv) in bg.nodes.iter().zip(&bg.weights) {
                    let rel: f64 = v.iter().zip(vs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    let kern = if *gamma_hard == 0.0 { 1.0 } else { rel.powf(*gamma_hard) };
                    let mut inner = 0.0;
                    for (sg, ws) in sph.nodes.iter().zip(&sph.weights) {
                        for i in 0..dim {
                            vp[i] = 0.5 * (v[i] + vs[i]) + 0.5 * rel * sg[i];
                        }
                        inner += ws * (phi.eval(x, &vp) - value);
                    }
                    coll += wv * kern * inner;
                }
                self.transport(&d, x, v) + b_const * coll
            }
            ModelSpec::KnudsenGas { .. } => self.flight(phi, x, v),
            ModelSpec::DegenerateBoltzmann { sigma, .. } => {
                let d = weight_derivs(phi, x, v);
                let avg = self.post_jump.as_ref().unwrap().mean(|w| phi.eval(x, w));
                self.transport(&d, x, v) + sigma.eval(x) * (avg - value)
            }
            ModelSpec::RunTumble {
                chi, psi, signal, ..
            } => {
                let m = dot(v, &signal.grad(x));
                let rate = 1.0 - chi * psi.eval(m);
                let avg = self.post_jump.as_ref().unwrap().mean(|w| phi.eval(x, w));
                self.flight(phi, x, v) + rate * (avg - value)
            }
            ModelSpec::FitzHughNagumo { a, b, c } => {
                let d = weight_derivs(phi, x, v);
                let (xx, vv) = (x[0], v[0]);
                let fa = a * xx - b * vv;
                let fb = xx + vv * (vv - 1.0) * (vv - c);
                -fa * d.grad_x[0] - fb * d.grad_v[0] + d.lap_v
            }
        };
        if !out.is_finite() {
            return Err(Error::NonFinite(format!(
                "generator value is not finite at x={x:?} v={v:?}"
            )));
        }
        Ok(out)
    }

    pub fn apply_state(&self, phi: &WeightFn, z: &PhaseState) -> Result<f64> {
        self.apply(phi, &z.x, &z.v)
    }
}

/// Evaluates `L*φ(z)` for one state.
pub fn generator_apply(model: &ModelSpec, phi: &WeightFn, z: &PhaseState) -> Result<f64> {
    Generator::new(model)?.apply_state(phi, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::spec::Domain;
    use crate::models::weights::weight_catalog;
    use std::collections::BTreeMap;

    #[test]
    fn bgk_r2_generator_matches_closed_form() {
        // Φ = (1+|x|²)/2: L*φ = -|x|²/4 - |v|²/4 + d/2
        let m = ModelSpec::LinearBgk {
            domain: Domain::WholeSpace { d: 2 },
            potential: PotentialSpec::Power { gamma_exp: 2.0 },
        };
        let w = weight_catalog(&m, "bgk_r2", &BTreeMap::new()).unwrap();
        let g = Generator::new(&m).unwrap();
        for (x, v) in [([0.3, -1.0], [2.0, 0.5]), ([4.0, 1.0], [-1.0, 3.0])] {
            let val = g.apply(&w, &x, &v).unwrap();
            let exact = -0.25 * (x[0] * x[0] + x[1] * x[1]) - 0.25 * (v[0] * v[0] + v[1] * v[1]) + 1.0;
            assert!((val - exact).abs() < 1e-10, "{val} vs {exact}");
        }
    }

    #[test]
    fn kfp_quadratic_moment() {
        // φ = (1 + |x|² + |v|²) with β = 2, Φ = (1+|x|²)/2:
        // L*φ = 2x·v - 2x·v - 2|v|² + 2d
        let m = ModelSpec::KineticFokkerPlanck {
            gamma_exp: 2.0,
            beta_friction: 2.0,
            d: 1,
        };
        let w = weight_catalog(&m, "kfp_r3", &BTreeMap::new()).unwrap();
        let g = Generator::new(&m).unwrap();
        let val = g.apply(&w, &[0.7], &[1.3]).unwrap();
        assert!((val - (2.0 - 2.0 * 1.69)).abs() < 1e-12);
    }

    #[test]
    fn sphere_and_ball_rules_integrate_moments() {
        for d in 1..=3 {
            let s = VelocityRule::sphere(d);
            let m2 = s.mean(|u| u[0] * u[0]);
            assert!((m2 - 1.0 / d as f64).abs() < 1e-12);
            let b = VelocityRule::ball(d, 2.0);
            // E|v|² on the ball of radius R is d R²/(d+2)
            let e = b.mean(|u| u.iter().map(|a| a * a).sum());
            assert!((e - d as f64 * 4.0 / (d as f64 + 2.0)).abs() < 1e-10);
        }
    }
}
