//! Steady states of the nonlinear BGK equation on `(0, 1)` in one velocity
//! dimension,
//!
//! `v ∂ₓf = (ρ_f M_{T_f} - f) / κ`, `ρ_f T_f = ∫ v² f dv`,
//!
//! with diffuse walls at temperatures `T0` (at `x = 0`) and `T1` (at `x = 1`).
//! Discrete ordinates on Gauss–Legendre nodes, implicit upwind sweeps and
//! source iteration.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::gauss_legendre_on;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    /// First-order upwind; positivity preserving.
    #[default]
    Upwind,
    /// Second-order upwind with a minmod limiter on the lagged iterate.
    Minmod,
}

/// Phase-space discretisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub nx: usize,
    pub nv: usize,
    pub v_max: f64,
    #[serde(default)]
    pub transport: Transport,
}

impl Grid1D {
    /// `v_max = 8 √T_max`.
    pub fn new(nx: usize, nv: usize, t_max: f64) -> Self {
        Grid1D {
            nx,
            nv,
            v_max: 8.0 * t_max.sqrt(),
            transport: Transport::Upwind,
        }
    }

    pub fn validate(&self, t_max: f64) -> Result<()> {
        if self.nx < 16 {
            return invalid(format!("Nx must be >= 16 (got {})", self.nx));
        }
        if self.nv < 32 || self.nv % 2 == 1 {
            return invalid(format!("Nv must be even and >= 32 (got {})", self.nv));
        }
        if !(self.v_max >= 6.0 * t_max.sqrt() * (1.0 - 1e-12)) {
            return invalid(format!(
                "v_max must be >= 6 sqrt(T_max) = {} (got {})",
                6.0 * t_max.sqrt(),
                self.v_max
            ));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    /// Cell centres.
    pub fn x(&self) -> Vec<f64> {
        (0..self.nx).map(|i| (i as f64 + 0.5) * self.dx()).collect()
    }

    /// Velocity nodes and weights, symmetric about 0 with no node at 0.
    pub fn velocities(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut v, mut w) = gauss_legendre_on(self.nv, -self.v_max, self.v_max);
        // exact symmetry
        let n = self.nv;
        for j in 0..n / 2 {
            let a = 0.5 * (v[n - 1 - j] - v[j]);
            let b = 0.5 * (w[j] + w[n - 1 - j]);
            v[j] = -a;
            v[n - 1 - j] = a;
            w[j] = b;
            w[n - 1 - j] = b;
        }
        (v, w)
    }
}

/// Velocity quadrature with cached Maxwellian evaluations.
struct Quad {
    v: Vec<f64>,
    w: Vec<f64>,
}

impl Quad {
    fn maxwellian(&self, t: f64) -> Vec<f64> {
        let c = 1.0 / (2.0 * std::f64::consts::PI * t).sqrt();
        self.v.iter().map(|v| c * (-v * v / (2.0 * t)).exp()).collect()
    }

    /// Maxwellian renormalised so its discrete mass is exactly 1.
    fn discrete_maxwellian(&self, t: f64) -> Vec<f64> {
        let m = self.maxwellian(t);
        let s: f64 = m.iter().zip(&self.w).map(|(a, b)| a * b).sum();
        m.into_iter().map(|a| a / s).collect()
    }

    fn moment(&self, f: &[f64], k: i32) -> f64 {
        f.iter()
            .zip(&self.v)
            .zip(&self.w)
            .map(|((f, v), w)| w * v.powi(k) * f)
            .sum()
    }

    /// `∫_{v>0} v f` and `∫_{v<0} |v| f`.
    fn half_fluxes(&self, f: &[f64]) -> (f64, f64) {
        let (mut pos, mut neg) = (0.0, 0.0);
        for ((f, v), w) in f.iter().zip(&self.v).zip(&self.w) {
            if *v > 0.0 {
                pos += w * v * f;
            } else {
                neg -= w * v * f;
            }
        }
        (pos, neg)
    }
}

/// Dimensionless regime indicators `κ² T_min` and
/// `(√T_max - √T_min) / (√κ T_max^{1/4})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeIndicators {
    pub kappa2_tmin: f64,
    pub wall_contrast: f64,
}

pub fn regime_indicators(t0: f64, t1: f64, kappa: f64) -> RegimeIndicators {
    let (lo, hi) = (t0.min(t1), t0.max(t1));
    RegimeIndicators {
        kappa2_tmin: kappa * kappa * lo,
        wall_contrast: (hi.sqrt() - lo.sqrt()) / (kappa.sqrt() * hi.powf(0.25)),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SteadyStateReport {
    pub t0: f64,
    pub t1: f64,
    pub kappa: f64,
    pub grid: Grid1D,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// `Nx × Nv`, row-major in `x`.
    #[serde(skip)]
    pub f: Vec<f64>,
    pub rho: Vec<f64>,
    /// Mean velocity from the face mass fluxes.
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub t: Vec<f64>,
    /// Wall re-emission densities `R̃₀`, `R̃₁`.
    pub wall_density: (f64, f64),
    /// `(influx, outflux)` at `x = 0` and at `x = 1`.
    pub wall_flux_0: (f64, f64),
    pub wall_flux_1: (f64, f64),
    pub residual: f64,
    /// Sup-norm change every 100 sweeps.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub min_f: f64,
    pub regime: RegimeIndicators,
}

impl SteadyStateReport {
    /// `x,rho,u,P,T` rows.
    pub fn moments_csv(&self) -> String {
        let mut s = String::from("x,rho,u,P,T\n");
        for i in 0..self.x.len() {
            writeln!(
                s,
                "{:?},{:?},{:?},{:?},{:?}",
                self.x[i], self.rho[i], self.u[i], self.p[i], self.t[i]
            )
            .unwrap();
        }
        s
    }

    /// `x,v,f` rows.
    pub fn distribution_csv(&self) -> String {
        let nv = self.v.len();
        let mut s = String::from("x,v,f\n");
        for (i, x) in self.x.iter().enumerate() {
            for (j, v) in self.v.iter().enumerate() {
                writeln!(s, "{x:?},{v:?},{:?}", self.f[i * nv + j]).unwrap();
            }
        }
        s
    }

    /// `max/min - 1` of a profile.
    pub fn relative_variation(profile: &[f64]) -> f64 {
        let lo = profile.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi / lo - 1.0
    }
}

/// Temperature law in the relaxation term.
enum Closure<'a> {
    /// `T = T_f`, the nonlinear problem.
    SelfConsistent,
    /// Frozen profile, the linear problem.
    Frozen(&'a [f64]),
}

const RELAX: f64 = 0.8;

struct Solver<'a> {
    grid: &'a Grid1D,
    q: Quad,
    t0: f64,
    t1: f64,
    kappa: f64,
    m0: Vec<f64>,
    m1: Vec<f64>,
}

struct State {
    f: Vec<f64>,
    r0: f64,
    r1: f64,
}

impl<'a> Solver<'a> {
    fn new(grid: &'a Grid1D, t0: f64, t1: f64, kappa: f64) -> Result<Self> {
        if !(t0 > 0.0 && t1 > 0.0 && t0.is_finite() && t1.is_finite()) {
            return invalid("wall temperatures must be finite and > 0");
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return invalid("kappa must be finite and > 0");
        }
        grid.validate(t0.max(t1))?;
        let (v, w) = grid.velocities();
        let q = Quad { v, w };
        let m0 = q.discrete_maxwellian(t0);
        let m1 = q.discrete_maxwellian(t1);
        Ok(Solver {
            grid,
            q,
            t0,
            t1,
            kappa,
            m0,
            m1,
        })
    }

    fn initial(&self, temp: f64) -> State {
        let nx = self.grid.nx;
        let m = self.q.discrete_maxwellian(temp);
        let mut f = Vec::with_capacity(nx * m.len());
        for _ in 0..nx {
            f.extend_from_slice(&m);
        }
        State { f, r0: 1.0, r1: 1.0 }
    }

    fn cell(&self, f: &'a [f64], i: usize) -> &'a [f64] {
        let nv = self.grid.nv;
        &f[i * nv..(i + 1) * nv]
    }

    /// Density and temperature of every cell.
    fn moments(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let nv = self.grid.nv;
        let mut rho = Vec::with_capacity(self.grid.nx);
        let mut t = Vec::with_capacity(self.grid.nx);
        for c in f.chunks(nv) {
            let r = self.q.moment(c, 0);
            rho.push(r);
            t.push(self.q.moment(c, 2) / r);
        }
        (rho, t)
    }

    /// One transport sweep in both directions with the relaxation source
    /// frozen at the current iterate; returns the sup-norm change.
    fn sweep(&self, st: &mut State, closure: &Closure) -> f64 {
        let (nx, nv) = (self.grid.nx, self.grid.nv);
        let dx = self.grid.dx();
        let (rho, t_f) = self.moments(&st.f);
        let temps: &[f64] = match closure {
            Closure::SelfConsistent => &t_f,
            Closure::Frozen(p) => p,
        };
        let src: Vec<Vec<f64>> = (0..nx)
            .map(|i| {
                self.q
                    .discrete_maxwellian(temps[i])
                    .into_iter()
                    .map(|m| rho[i] * m / self.kappa)
                    .collect()
            })
            .collect();
        let old = st.f.clone();
        let inv_k = 1.0 / self.kappa;
        let minmod = self.grid.transport == Transport::Minmod;
        let lim = |a: f64, b: f64| if a * b <= 0.0 { 0.0 } else if a.abs() < b.abs() { a } else { b };
        for j in 0..nv {
            let v = self.q.v[j];
            let a = v.abs() / dx;
            let order: Box<dyn Iterator<Item = usize>> = if v > 0.0 {
                Box::new(0..nx)
            } else {
                Box::new((0..nx).rev())
            };
            let mut up_face = if v > 0.0 { st.r0 * self.m0[j] } else { st.r1 * self.m1[j] };
            let mut prev: Option<usize> = None;
            for i in order {
                // downstream face value f_i + s/2, slope limited on the lagged iterate
                let s = match (minmod, prev) {
                    (true, Some(p)) => {
                        let next = if v > 0.0 { i + 1 } else { i.wrapping_sub(1) };
                        if next < nx {
                            lim(old[i * nv + j] - old[p * nv + j], old[next * nv + j] - old[i * nv + j])
                        } else {
                            0.0
                        }
                    }
                    _ => 0.0,
                };
                let val = ((a * (up_face - 0.5 * s) + src[i][j]) / (a + inv_k)).max(0.0);
                st.f[i * nv + j] = val;
                up_face = (val + 0.5 * s).max(0.0);
                prev = Some(i);
            }
        }
        // diffuse walls: re-emitted mass flux equals the incoming one
        let (_, out0) = self.q.half_fluxes(self.cell(&st.f, 0));
        let (in1, _) = self.q.half_fluxes(self.cell(&st.f, nx - 1));
        let (e0, _) = self.q.half_fluxes(&self.m0);
        let (_, e1) = self.q.half_fluxes(&self.m1);
        st.r0 += RELAX * (out0 / e0 - st.r0);
        st.r1 += RELAX * (in1 / e1 - st.r1);
        // unit total mass
        let mass: f64 = st.f.chunks(nv).map(|c| self.q.moment(c, 0)).sum::<f64>() * dx;
        for a in st.f.iter_mut() {
            *a /= mass;
        }
        st.r0 /= mass;
        st.r1 /= mass;
        st.f
            .iter()
            .zip(&old)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn iterate(&self, st: &mut State, closure: &Closure, tol: f64, max_iter: usize) -> (usize, f64, Vec<f64>, bool) {
        let mut hist = vec![];
        let mut res = f64::INFINITY;
        for it in 1..=max_iter {
            res = self.sweep(st, closure);
            if it % 100 == 0 {
                hist.push(res);
            }
            if res < tol {
                return (it, res, hist, true);
            }
        }
        (max_iter, res, hist, false)
    }

    fn report(&self, st: State, iterations: usize, residual: f64, hist: Vec<f64>, converged: bool) -> SteadyStateReport {
        let (nx, nv) = (self.grid.nx, self.grid.nv);
        let (rho, t) = self.moments(&st.f);
        let p: Vec<f64> = rho.iter().zip(&t).map(|(r, t)| r * t).collect();
        let minmod = self.grid.transport == Transport::Minmod;
        let f = &st.f;
        let at = |i: usize, j: usize| f[i * nv + j];
        let lim = |a: f64, b: f64| if a * b <= 0.0 { 0.0 } else if a.abs() < b.abs() { a } else { b };
        // upwind value on face i+1/2 (faces 0..=nx), as reconstructed by the sweep
        let face = |i: usize| -> f64 {
            (0..nv)
                .map(|j| {
                    let v = self.q.v[j];
                    let fv = if v > 0.0 {
                        if i == 0 {
                            st.r0 * self.m0[j]
                        } else {
                            let c = i - 1;
                            let s = if minmod && c > 0 && c + 1 < nx {
                                lim(at(c, j) - at(c - 1, j), at(c + 1, j) - at(c, j))
                            } else {
                                0.0
                            };
                            (at(c, j) + 0.5 * s).max(0.0)
                        }
                    } else if i == nx {
                        st.r1 * self.m1[j]
                    } else {
                        let s = if minmod && i > 0 && i + 1 < nx {
                            lim(at(i, j) - at(i + 1, j), at(i - 1, j) - at(i, j))
                        } else {
                            0.0
                        };
                        (at(i, j) + 0.5 * s).max(0.0)
                    };
                    self.q.w[j] * v * fv
                })
                .sum()
        };
        let faces: Vec<f64> = (0..=nx).map(face).collect();
        let u: Vec<f64> = (0..nx).map(|i| 0.5 * (faces[i] + faces[i + 1]) / rho[i]).collect();
        let (_, out0) = self.q.half_fluxes(self.cell(&st.f, 0));
        let (in1, _) = self.q.half_fluxes(self.cell(&st.f, nx - 1));
        let (e0, _) = self.q.half_fluxes(&self.m0);
        let (_, e1) = self.q.half_fluxes(&self.m1);
        SteadyStateReport {
            t0: self.t0,
            t1: self.t1,
            kappa: self.kappa,
            grid: self.grid.clone(),
            x: self.grid.x(),
            v: self.q.v.clone(),
            min_f: st.f.iter().copied().fold(f64::INFINITY, f64::min),
            f: st.f,
            rho,
            u,
            p,
            t,
            wall_density: (st.r0, st.r1),
            wall_flux_0: (st.r0 * e0, out0),
            wall_flux_1: (in1, st.r1 * e1),
            residual,
            residual_history: hist,
            iterations,
            converged,
            regime: regime_indicators(self.t0, self.t1, self.kappa),
        }
    }
}

/// Steady state of the nonlinear problem by source iteration, started from
/// the Maxwellian at the mean wall temperature.
pub fn solve_steady(t0: f64, t1: f64, kappa: f64, grid: &Grid1D, tol: f64, max_iter: usize) -> Result<SteadyStateReport> {
    let s = Solver::new(grid, t0, t1, kappa)?;
    let mut st = s.initial(0.5 * (t0 + t1));
    let (it, res, hist, ok) = s.iterate(&mut st, &Closure::SelfConsistent, tol, max_iter);
    Ok(s.report(st, it, res, hist, ok))
}

/// The map `T ↦ T̃`: solves the linear problem with the relaxation
/// temperature frozen at `profile` (one value per cell) and returns the
/// resulting kinetic temperature.
pub fn fixed_point_temperature(
    profile: &[f64],
    t0: f64,
    t1: f64,
    kappa: f64,
    grid: &Grid1D,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let s = Solver::new(grid, t0, t1, kappa)?;
    if profile.len() != grid.nx {
        return invalid(format!("profile needs {} values (got {})", grid.nx, profile.len()));
    }
    if profile.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return invalid("profile temperatures must be finite and > 0");
    }
    let mean = profile.iter().sum::<f64>() / profile.len() as f64;
    let mut st = s.initial(mean);
    let (it, res, _, ok) = s.iterate(&mut st, &Closure::Frozen(profile), tol, max_iter);
    if !ok {
        return Err(Error::NotConverged {
            iterations: it,
            residual: res,
        });
    }
    Ok(s.moments(&st.f).1)
}

/// Picard iteration of [`fixed_point_temperature`] from a constant profile.
pub fn picard_temperature(
    t0: f64,
    t1: f64,
    kappa: f64,
    grid: &Grid1D,
    tol: f64,
    max_outer: usize,
) -> Result<(Vec<f64>, usize)> {
    let mut prof = vec![0.5 * (t0 + t1); grid.nx];
    for k in 1..=max_outer {
        let next = fixed_point_temperature(&prof, t0, t1, kappa, grid, tol * 1e-2, 2_000_000)?;
        let change = next
            .iter()
            .zip(&prof)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prof = next;
        if change < tol {
            return Ok((prof, k));
        }
    }
    Err(Error::NotConverged {
        iterations: max_outer,
        residual: f64::NAN,
    })
}

/// `Σ w M_T - 1` on the grid's velocity quadrature, without renormalisation.
pub fn maxwellian_quadrature_error(grid: &Grid1D, t: f64) -> f64 {
    let (v, w) = grid.velocities();
    let q = Quad { v, w };
    q.maxwellian(t).iter().zip(&q.w).map(|(a, b)| a * b).sum::<f64>() - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_nodes_are_symmetric() {
        let g = Grid1D::new(16, 32, 1.0);
        let (v, w) = g.velocities();
        for j in 0..16 {
            assert_eq!(v[j], -v[31 - j]);
            assert_eq!(w[j], w[31 - j]);
        }
        assert!(v.iter().all(|a| *a != 0.0));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(8, 32, 1.0).validate(1.0).is_err());
        assert!(Grid1D::new(16, 33, 1.0).validate(1.0).is_err());
        let mut g = Grid1D::new(16, 32, 1.0);
        g.v_max = 5.0;
        assert!(g.validate(1.0).is_err());
    }

    #[test]
    fn quadrature_gate() {
        let g = Grid1D::new(64, 128, 4.0);
        for t in [1.0, 4.0] {
            assert!(maxwellian_quadrature_error(&g, t).abs() < 1e-10);
        }
    }

    #[test]
    fn equal_walls_give_the_wall_maxwellian() {
        let g = Grid1D::new(16, 32, 2.0);
        let r = solve_steady(2.0, 2.0, 0.5, &g, 1e-12, 100_000).unwrap();
        assert!(r.converged);
        for i in 0..16 {
            assert!((r.t[i] - 2.0).abs() < 1e-9);
            assert!((r.rho[i] - 1.0).abs() < 1e-9);
            assert!(r.u[i].abs() < 1e-9);
        }
    }
}
