//! Geometric control: `κ = min ∫₀ᵀ σ(x_t) dt` over characteristics started on
//! a grid of positions and velocities.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::models::{PotentialSpec, SigmaSpec};
use crate::numerics::simpson_weights;

/// Simpson subintervals per characteristic.
pub const GCC_SUBINTERVALS: usize = 1000;

#[derive(Clone, Debug, Serialize)]
pub struct GccReport {
    /// Grid minimum of the path integral.
    pub kappa_hat: f64,
    pub t_horizon: f64,
    pub argmin_x: Vec<f64>,
    pub argmin_v: Vec<f64>,
    pub n_x: usize,
    pub n_v: usize,
    pub subintervals: usize,
    /// Characteristics integrated with RK4 (true) or in closed form (false).
    pub with_potential: bool,
    pub passed: bool,
    pub note: String,
}

fn wrap(x: &[f64]) -> Vec<f64> {
    x.iter().map(|a| a.rem_euclid(1.0)).collect()
}

fn rk4_step(pot: &PotentialSpec, x: &mut [f64], v: &mut [f64], h: f64) {
    let d = x.len();
    let acc = |p: &[f64]| -> Vec<f64> { pot.grad(p).into_iter().map(|g| -g).collect() };
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + s * q).collect() };
    let k1x = v.to_vec();
    let k1v = acc(x);
    let k2x = add(v, &k1v, h / 2.0);
    let k2v = acc(&add(x, &k1x, h / 2.0));
    let k3x = add(v, &k2v, h / 2.0);
    let k3v = acc(&add(x, &k2x, h / 2.0));
    let k4x = add(v, &k3v, h);
    let k4v = acc(&add(x, &k3x, h));
    for i in 0..d {
        x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
        v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
    }
}

/// `∫₀ᵀ σ(x_t) dt` along the characteristic from `(x, v)`, positions taken mod 1.
pub fn path_integral(sigma: &SigmaSpec, pot: &PotentialSpec, t: f64, x: &[f64], v: &[f64], n: usize) -> f64 {
    let h = t / n as f64;
    let w = simpson_weights(n, h);
    if pot.is_none() {
        return w
            .iter()
            .enumerate()
            .map(|(i, wi)| {
                let s = i as f64 * h;
                let p: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + s * b).collect();
                wi * sigma.eval(&wrap(&p))
            })
            .sum();
    }
    let (mut xx, mut vv) = (x.to_vec(), v.to_vec());
    let mut total = w[0] * sigma.eval(&wrap(&xx));
    for wi in &w[1..] {
        rk4_step(pot, &mut xx, &mut vv, h);
        total += wi * sigma.eval(&wrap(&xx));
    }
    total
}

/// Minimum of the path integral over the product grid `x_grid × v_grid`.
pub fn gcc_check(
    sigma: &SigmaSpec,
    potential: &PotentialSpec,
    t_horizon: f64,
    x_grid: &[Vec<f64>],
    v_grid: &[Vec<f64>],
) -> Result<GccReport> {
    if !(t_horizon > 0.0 && t_horizon.is_finite()) {
        return invalid(format!("T must be > 0 (got {t_horizon})"));
    }
    if x_grid.is_empty() || v_grid.is_empty() {
        return invalid("x and v grids must be non-empty");
    }
    let d = x_grid[0].len();
    if d == 0 || x_grid.iter().chain(v_grid).any(|p| p.len() != d) {
        return invalid("all grid points must share one positive dimension");
    }
    potential.validate()?;
    let pairs: Vec<(usize, usize)> = (0..x_grid.len())
        .flat_map(|i| (0..v_grid.len()).map(move |j| (i, j)))
        .collect();
    let (k, (i, j)) = pairs
        .par_iter()
        .map(|&(i, j)| {
            (
                path_integral(sigma, potential, t_horizon, &x_grid[i], &v_grid[j], GCC_SUBINTERVALS),
                (i, j),
            )
        })
        .reduce(
            || (f64::INFINITY, (0, 0)),
            |a, b| if b.0 < a.0 { b } else { a },
        );
    Ok(GccReport {
        kappa_hat: k,
        t_horizon,
        argmin_x: x_grid[i].clone(),
        argmin_v: v_grid[j].clone(),
        n_x: x_grid.len(),
        n_v: v_grid.len(),
        subintervals: GCC_SUBINTERVALS,
        with_potential: !potential.is_none(),
        passed: k > 0.0,
        note: "minimum over the supplied grid; characteristics between grid points are not covered".into(),
    })
}

/// `n^d` cell-centred positions on the unit torus.
pub fn torus_grid(d: usize, n: usize) -> Vec<Vec<f64>> {
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut k| {
            (0..d)
                .map(|_| {
                    let i = k % n;
                    k /= n;
                    (i as f64 + 0.5) / n as f64
                })
                .collect()
        })
        .collect()
}
