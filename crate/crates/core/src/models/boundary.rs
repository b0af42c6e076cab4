//! Vessel geometries, exact ray–boundary intersection and wall reflection laws.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{bessel_i0_scaled, dot, norm, norm2};

/// Relative tolerance used for "on the boundary" tests.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    /// The interval `[0, 1]`.
    Interval,
    /// Disk of the given radius centred at the origin.
    Disk { radius: f64 },
    /// Axis-aligned box `[0, a₁] × … × [0, a_d]`, `d ∈ {2, 3}`.
    Box { sides: Vec<f64> },
}

/// A boundary hit: time of flight and outward unit normal at the hit point.
#[derive(Clone, Debug, PartialEq)]
pub struct Hit {
    pub time: f64,
    pub normal: Vec<f64>,
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Interval => 1,
            Geometry::Disk { .. } => 2,
            Geometry::Box { sides } => sides.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Geometry::Interval => Ok(()),
            Geometry::Disk { radius } if *radius > 0.0 && radius.is_finite() => Ok(()),
            Geometry::Disk { radius } => invalid(format!("geometry.radius must be > 0 (got {radius})")),
            Geometry::Box { sides } => {
                if !(sides.len() == 2 || sides.len() == 3) {
                    return invalid("geometry.sides must have 2 or 3 entries");
                }
                if sides.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                    return invalid("geometry.sides must be > 0");
                }
                Ok(())
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Geometry::Interval => 1.0,
            Geometry::Disk { radius } => 2.0 * radius,
            Geometry::Box { sides } => norm(sides),
        }
    }

    /// Lebesgue measure of the domain.
    pub fn volume(&self) -> f64 {
        match self {
            Geometry::Interval => 1.0,
            Geometry::Disk { radius } => std::f64::consts::PI * radius * radius,
            Geometry::Box { sides } => sides.iter().product(),
        }
    }

    fn scale(&self) -> f64 {
        self.diameter().max(1.0)
    }

    /// Closed-domain membership with a small tolerance.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|a| !a.is_finite()) {
            return false;
        }
        let tol = BOUNDARY_TOL * self.scale();
        match self {
            Geometry::Interval => x[0] >= -tol && x[0] <= 1.0 + tol,
            Geometry::Disk { radius } => norm(x) <= radius + tol,
            Geometry::Box { sides } => x
                .iter()
                .zip(sides)
                .all(|(xi, a)| *xi >= -tol && *xi <= a + tol),
        }
    }

    /// Outward unit normal at a boundary point, or `None` in the interior.
    /// At box edges the face with the largest overshoot wins.
    pub fn normal_at(&self, x: &[f64]) -> Option<Vec<f64>> {
        let tol = 1e3 * BOUNDARY_TOL * self.scale();
        match self {
            Geometry::Interval => {
                if x[0] <= tol {
                    Some(vec![-1.0])
                } else if x[0] >= 1.0 - tol {
                    Some(vec![1.0])
                } else {
                    None
                }
            }
            Geometry::Disk { radius } => {
                let r = norm(x);
                if r >= radius - tol {
                    Some(x.iter().map(|a| a / r).collect())
                } else {
                    None
                }
            }
            Geometry::Box { sides } => {
                let mut best: Option<(f64, usize, f64)> = None;
                for (i, (xi, a)) in x.iter().zip(sides).enumerate() {
                    for (dist, sign) in [(*xi, -1.0), (a - xi, 1.0)] {
                        if dist <= tol && best.is_none_or(|(b, _, _)| dist < b) {
                            best = Some((dist, i, sign));
                        }
                    }
                }
                best.map(|(_, i, s)| {
                    let mut n = vec![0.0; x.len()];
                    n[i] = s;
                    n
                })
            }
        }
    }

    /// First forward hit of the ray `x + t v`, ignoring the root at `t = 0`
    /// for boundary points with inward velocity.
    pub fn next_hit(&self, x: &[f64], v: &[f64]) -> Option<Hit> {
        let vv = norm2(v);
        if vv == 0.0 {
            return None;
        }
        match self {
            Geometry::Interval => {
                if v[0] > 0.0 {
                    Some(Hit {
                        time: ((1.0 - x[0]) / v[0]).max(0.0),
                        normal: vec![1.0],
                    })
                } else {
                    Some(Hit {
                        time: (-x[0] / v[0]).max(0.0),
                        normal: vec![-1.0],
                    })
                }
            }
            Geometry::Disk { radius } => {
                let b = dot(x, v);
                let c = (norm2(x) - radius * radius).min(0.0);
                let disc = (b * b - vv * c).max(0.0);
                let sq = disc.sqrt();
                let t = if b <= 0.0 {
                    (-b + sq) / vv
                } else {
                    -c / (b + sq)
                };
                let t = t.max(0.0);
                let p: Vec<f64> = x.iter().zip(v).map(|(a, w)| a + t * w).collect();
                let r = norm(&p);
                Some(Hit {
                    time: t,
                    normal: p.iter().map(|a| a / r).collect(),
                })
            }
            Geometry::Box { sides } => {
                let mut best = f64::INFINITY;
                let mut face = (0usize, 1.0);
                for (i, (xi, a)) in x.iter().zip(sides).enumerate() {
                    let (t, s) = if v[i] > 0.0 {
                        ((a - xi) / v[i], 1.0)
                    } else if v[i] < 0.0 {
                        (-xi / v[i], -1.0)
                    } else {
                        continue;
                    };
                    let t = t.max(0.0);
                    if t < best {
                        best = t;
                        face = (i, s);
                    }
                }
                let mut n = vec![0.0; x.len()];
                n[face.0] = face.1;
                Some(Hit { time: best, normal: n })
            }
        }
    }

    /// Moves a point that should lie on the boundary exactly onto it.
    pub fn snap_to_boundary(&self, x: &mut [f64], normal: &[f64]) {
        match self {
            Geometry::Interval => x[0] = if normal[0] > 0.0 { 1.0 } else { 0.0 },
            Geometry::Disk { radius } => {
                let r = norm(x);
                if r > 0.0 {
                    for a in x.iter_mut() {
                        *a *= radius / r;
                    }
                }
            }
            Geometry::Box { sides } => {
                for (i, n) in normal.iter().enumerate() {
                    if *n > 0.0 {
                        x[i] = sides[i];
                    } else if *n < 0.0 {
                        x[i] = 0.0;
                    }
                }
                for (xi, a) in x.iter_mut().zip(sides) {
                    *xi = xi.clamp(0.0, *a);
                }
            }
        }
    }
}

/// Time of the first boundary collision `τ̃(x, v) = inf{t > 0 : x + tv ∈ ∂Ω}`,
/// with `τ̃ = 0` on outgoing or grazing boundary states and `+∞` for `v = 0`
/// in the interior.
pub fn first_collision_time(x: &[f64], v: &[f64], geometry: &Geometry) -> Result<f64> {
    if x.len() != geometry.dim() || v.len() != geometry.dim() {
        return invalid(format!(
            "state dimension does not match geometry dimension {}",
            geometry.dim()
        ));
    }
    if !geometry.contains(x) {
        return invalid(format!("position {x:?} lies outside the domain"));
    }
    if v.iter().any(|a| !a.is_finite()) {
        return invalid("velocity must be finite");
    }
    if let Some(n) = geometry.normal_at(x) {
        if dot(v, &n) >= 0.0 {
            return Ok(0.0);
        }
    }
    Ok(geometry.next_hit(x, v).map_or(f64::INFINITY, |h| h.time))
}

/// Specular reflection `R_x v = v - 2 (v·n) n`.
pub fn specular(v: &[f64], n: &[f64]) -> Vec<f64> {
    let vn = dot(v, n);
    v.iter().zip(n).map(|(a, b)| a - 2.0 * vn * b).collect()
}

/// Orthonormal basis of the tangent space at unit normal `n`.
pub fn tangent_basis(n: &[f64]) -> Vec<Vec<f64>> {
    match n.len() {
        1 => vec![],
        2 => vec![vec![-n[1], n[0]]],
        _ => {
            let a = if n[0].abs() < 0.9 {
                [1.0, 0.0, 0.0]
            } else {
                [0.0, 1.0, 0.0]
            };
            let an = dot(&a, n);
            let mut t1: Vec<f64> = a.iter().zip(n).map(|(ai, ni)| ai - an * ni).collect();
            let l = norm(&t1);
            t1.iter_mut().for_each(|c| *c /= l);
            let t2 = vec![
                n[1] * t1[2] - n[2] * t1[1],
                n[2] * t1[0] - n[0] * t1[2],
                n[0] * t1[1] - n[1] * t1[0],
            ];
            vec![t1, t2]
        }
    }
}

/// Draws from the flux-weighted wall Maxwellian at temperature `wall_temp`:
/// inward normal speed with density `s e^{-s²/2T}/T`, tangential components `N(0, T)`.
pub fn sample_diffuse<R: Rng + ?Sized>(n: &[f64], wall_temp: f64, rng: &mut R) -> Vec<f64> {
    let sd = wall_temp.sqrt();
    let u: f64 = 1.0 - rng.random::<f64>();
    let s = sd * (-2.0 * u.ln()).sqrt();
    let mut v: Vec<f64> = n.iter().map(|ni| -s * ni).collect();
    for t in tangent_basis(n) {
        let g: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
        for (vi, ti) in v.iter_mut().zip(&t) {
            *vi += g * ti;
        }
    }
    v
}

fn check_outgoing(u_in: &[f64], n: &[f64]) -> Result<bool> {
    if u_in.len() != n.len() {
        return invalid("velocity dimension does not match the normal");
    }
    let un = dot(u_in, n);
    if un < 0.0 {
        return invalid(format!("incoming velocity must satisfy u·n >= 0 (got {un})"));
    }
    Ok(un > 0.0)
}

/// Maxwell boundary rule: specular with probability `1 - α`, diffuse otherwise.
/// Grazing inputs are re-emitted diffusely.
pub fn sample_maxwell_boundary<R: Rng + ?Sized>(
    u_in: &[f64],
    n: &[f64],
    accommodation: f64,
    wall_temp: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&accommodation) {
        return invalid(format!("accommodation must lie in [0, 1] (got {accommodation})"));
    }
    if !(wall_temp > 0.0) {
        return invalid(format!("wall temperature must be > 0 (got {wall_temp})"));
    }
    if !check_outgoing(u_in, n)? {
        return Ok(sample_diffuse(n, wall_temp, rng));
    }
    if accommodation < 1.0 && (accommodation == 0.0 || rng.random::<f64>() >= accommodation) {
        return Ok(specular(u_in, n));
    }
    Ok(sample_diffuse(n, wall_temp, rng))
}

/// Cercignani–Lampis reflection. Tangential part `N((1-r∥)u∥, T r∥(2-r∥))`;
/// normal speed is the norm of a planar Gaussian vector with mean norm
/// `√(1-r⊥)|u⊥|` and per-component variance `T r⊥`.
pub fn sample_cl_kernel<R: Rng + ?Sized>(
    u_in: &[f64],
    n: &[f64],
    r_perp: f64,
    r_par: f64,
    wall_temp: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(r_perp > 0.0 && r_perp <= 1.0) {
        return invalid(format!("r_perp must lie in (0, 1] (got {r_perp})"));
    }
    if !(r_par > 0.0 && r_par < 2.0) {
        return invalid(format!("r_par must lie in (0, 2) (got {r_par})"));
    }
    if !(wall_temp > 0.0) {
        return invalid(format!("wall temperature must be > 0 (got {wall_temp})"));
    }
    if !check_outgoing(u_in, n)? {
        return Ok(sample_diffuse(n, wall_temp, rng));
    }
    let u_perp = dot(u_in, n);
    let sd_n = (wall_temp * r_perp).sqrt();
    let mean = (1.0 - r_perp).sqrt() * u_perp;
    let g1: f64 = rng.sample(StandardNormal);
    let g2: f64 = rng.sample(StandardNormal);
    let s = ((mean + sd_n * g1).powi(2) + (sd_n * g2).powi(2)).sqrt();
    let mut v: Vec<f64> = n.iter().map(|ni| -s * ni).collect();
    let sd_t = (wall_temp * r_par * (2.0 - r_par)).sqrt();
    for t in tangent_basis(n) {
        let ut = dot(u_in, &t);
        let g: f64 = rng.sample(StandardNormal);
        let vt = (1.0 - r_par) * ut + sd_t * g;
        for (vi, ti) in v.iter_mut().zip(&t) {
            *vi += vt * ti;
        }
    }
    Ok(v)
}

/// Cercignani–Lampis kernel density `R(u → v)` for outgoing `u` and incoming `v`.
pub fn cl_kernel_density(
    u: &[f64],
    v: &[f64],
    n: &[f64],
    r_perp: f64,
    r_par: f64,
    wall_temp: f64,
) -> f64 {
    let d = n.len() as f64;
    let t = wall_temp;
    let u_perp = dot(u, n);
    let v_perp = -dot(v, n);
    if v_perp <= 0.0 {
        return 0.0;
    }
    let sp = t * r_perp;
    let spar = t * r_par * (2.0 - r_par);
    let mut tang = 0.0;
    for e in tangent_basis(n) {
        let dv = dot(v, &e) - (1.0 - r_par) * dot(u, &e);
        tang += dv * dv;
    }
    let arg = (1.0 - r_perp).sqrt() * u_perp * v_perp / sp;
    // I0(arg) e^{-(a² + b²)/2σ²} = I0e(arg) e^{-(a - b)²/2σ²}
    let a = (1.0 - r_perp).sqrt() * u_perp;
    let normal_part = (1.0 / sp) * bessel_i0_scaled(arg) * (-(v_perp - a).powi(2) / (2.0 * sp)).exp();
    let tang_part = (2.0 * std::f64::consts::PI * spar).powf(-(d - 1.0) / 2.0) * (-tang / (2.0 * spar)).exp();
    normal_part * tang_part
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn collision_time_examples() {
        let t = first_collision_time(&[0.25], &[0.5], &Geometry::Interval).unwrap();
        assert!((t - 1.5).abs() < 1e-15);
        let disk = Geometry::Disk { radius: 1.0 };
        let s = 0.5f64.sqrt();
        let t = first_collision_time(&[0.0, 0.0], &[s, s], &disk).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
        let bx = Geometry::Box {
            sides: vec![1.0, 1.0],
        };
        let t = first_collision_time(&[0.3, 0.7], &[1.0, -2.0], &bx).unwrap();
        assert!((t - 0.35).abs() < 1e-15);
    }

    #[test]
    fn collision_time_special_cases() {
        let disk = Geometry::Disk { radius: 2.0 };
        assert_eq!(
            first_collision_time(&[0.0, 0.0], &[0.0, 0.0], &disk).unwrap(),
            f64::INFINITY
        );
        // outgoing and grazing boundary states
        assert_eq!(first_collision_time(&[2.0, 0.0], &[1.0, 0.0], &disk).unwrap(), 0.0);
        assert_eq!(first_collision_time(&[2.0, 0.0], &[0.0, 1.0], &disk).unwrap(), 0.0);
        // incoming boundary state crosses the diameter
        let t = first_collision_time(&[2.0, 0.0], &[-1.0, 0.0], &disk).unwrap();
        assert!((t - 4.0).abs() < 1e-14);
        assert!(first_collision_time(&[3.0, 0.0], &[1.0, 0.0], &disk).is_err());
    }

    #[test]
    fn specular_is_involutive_isometry() {
        let n = [0.6, 0.8];
        let v = [1.3, -0.2];
        let r = specular(&v, &n);
        let rr = specular(&r, &n);
        assert!((norm(&r) - norm(&v)).abs() < 1e-15);
        for (a, b) in rr.iter().zip(&v) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn reflected_velocities_point_inward() {
        let mut rng = RngStream::new(5, 0);
        let n = [0.0, 0.0, 1.0];
        let u = [0.3, -0.4, 0.9];
        for _ in 0..1000 {
            let v = sample_maxwell_boundary(&u, &n, 0.5, 1.3, &mut rng).unwrap();
            assert!(dot(&v, &n) < 0.0);
            let w = sample_cl_kernel(&u, &n, 0.4, 0.3, 1.3, &mut rng).unwrap();
            assert!(dot(&w, &n) <= 0.0);
        }
    }

    #[test]
    fn zero_accommodation_is_specular() {
        let mut rng = RngStream::new(5, 1);
        let n = [1.0, 0.0];
        let u = [0.7, 0.1];
        let v = sample_maxwell_boundary(&u, &n, 0.0, 1.0, &mut rng).unwrap();
        assert_eq!(v, specular(&u, &n));
    }

    #[test]
    fn tangential_specular_limit() {
        let mut rng = RngStream::new(5, 2);
        let n = [0.0, 1.0];
        let u = [0.7, 0.4];
        let v = sample_cl_kernel(&u, &n, 0.5, 1e-12, 1.0, &mut rng).unwrap();
        assert!((v[0] - 0.7).abs() < 1e-5);
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let n = [0.48, 0.6, 0.64];
        let b = tangent_basis(&n);
        assert!(dot(&b[0], &n).abs() < 1e-15);
        assert!(dot(&b[1], &n).abs() < 1e-15);
        assert!(dot(&b[0], &b[1]).abs() < 1e-15);
        assert!((norm(&b[0]) - 1.0).abs() < 1e-15);
        assert!((norm(&b[1]) - 1.0).abs() < 1e-15);
    }
}
