//! Weighted total-variation distance between two ensembles on a common
//! histogram.
//!
//! With empirical bin masses `p`, `q` the estimate is `Σ_b φ(c_b) |p_b - q_b|`,
//! `c_b` the bin centre. For `φ ≡ 1` this is the L¹ distance, twice the
//! total-variation distance.

use serde::{Deserialize, Serialize};

use super::ensemble::EnsembleSnapshot;
use crate::error::{invalid, Error, Result};
use crate::models::{Geometry, ModelSpec, WeightFn};
use crate::numerics::norm;

/// Coordinates the histogram is built on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// All of `(x, v)`.
    #[default]
    Full,
    Position,
    Velocity,
    /// `|v|`.
    Speed,
    /// `(|x|, |v|)`.
    RadiusSpeed,
}

impl Projection {
    pub fn n_coords(&self, d: usize) -> usize {
        match self {
            Projection::Full => 2 * d,
            Projection::Position | Projection::Velocity => d,
            Projection::Speed => 1,
            Projection::RadiusSpeed => 2,
        }
    }

    fn project(&self, x: &[f64], v: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match self {
            Projection::Full => {
                out.extend_from_slice(x);
                out.extend_from_slice(v);
            }
            Projection::Position => out.extend_from_slice(x),
            Projection::Velocity => out.extend_from_slice(v),
            Projection::Speed => out.push(norm(v)),
            Projection::RadiusSpeed => {
                out.push(norm(x));
                out.push(norm(v));
            }
        }
    }
}

/// A regular grid of `bins_per_axis^k` cells on a box in projected coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub projection: Projection,
    pub bins_per_axis: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Per-coordinate mass allowed outside an automatic box, split over both sides.
const AUTO_TAIL: f64 = 0.005;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let i = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[i]
}

impl Binning {
    pub fn new(projection: Projection, bins_per_axis: usize, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if bins_per_axis == 0 {
            return invalid("bins_per_axis must be positive");
        }
        if lo.len() != hi.len() || lo.is_empty() {
            return invalid("binning bounds must be non-empty and of equal length");
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return invalid("binning bounds must be finite with lo < hi");
        }
        if (bins_per_axis as f64).powi(lo.len() as i32) > 1e18 {
            return invalid("too many bins");
        }
        Ok(Binning {
            projection,
            bins_per_axis,
            lo,
            hi,
        })
    }

    /// Box holding all but a small tail of the pooled ensembles in each
    /// coordinate; periodic and bounded coordinates use the domain itself.
    pub fn auto(
        model: &ModelSpec,
        snaps: &[&EnsembleSnapshot],
        projection: Projection,
        bins_per_axis: usize,
    ) -> Result<Self> {
        let d = model.dim();
        let k = projection.n_coords(d);
        let mut cols: Vec<Vec<f64>> = vec![vec![]; k];
        let mut buf = Vec::with_capacity(2 * d);
        for s in snaps {
            for i in 0..s.n {
                if !s.alive[i] {
                    continue;
                }
                let r = i * d..(i + 1) * d;
                projection.project(&s.x[r.clone()], &s.v[r], &mut buf);
                for (c, val) in cols.iter_mut().zip(&buf) {
                    c.push(*val);
                }
            }
        }
        if cols[0].is_empty() {
            return invalid("no live particles to fit a binning box");
        }
        let tail = AUTO_TAIL / k as f64 / 2.0;
        let mut lo = Vec::with_capacity(k);
        let mut hi = Vec::with_capacity(k);
        for (j, c) in cols.iter_mut().enumerate() {
            c.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (mut a, mut b) = (quantile(c, tail), quantile(c, 1.0 - tail));
            let spread = b - a;
            a -= 1e-9 * spread.max(1.0);
            b += 1e-9 * spread.max(1.0);
            if let Some((fa, fb)) = fixed_range(model, projection, j) {
                a = fa;
                b = fb;
            } else if projection_is_radial(projection, j) {
                a = 0.0;
            }
            if !(b > a) {
                a -= 0.5;
                b += 0.5;
            }
            lo.push(a);
            hi.push(b);
        }
        Binning::new(projection, bins_per_axis, lo, hi)
    }

    pub fn n_coords(&self) -> usize {
        self.lo.len()
    }

    pub fn n_bins(&self) -> u64 {
        (self.bins_per_axis as u64).pow(self.lo.len() as u32)
    }

    fn index(&self, c: &[f64]) -> Option<u64> {
        let m = self.bins_per_axis as u64;
        let mut idx = 0u64;
        for (k, val) in c.iter().enumerate() {
            if !(*val >= self.lo[k] && *val < self.hi[k]) {
                return None;
            }
            let i = ((val - self.lo[k]) / (self.hi[k] - self.lo[k]) * m as f64) as u64;
            idx = idx * m + i.min(m - 1);
        }
        Some(idx)
    }

    /// Centre of bin `idx` in projected coordinates.
    pub fn centre(&self, mut idx: u64) -> Vec<f64> {
        let m = self.bins_per_axis as u64;
        let k = self.lo.len();
        let mut c = vec![0.0; k];
        for j in (0..k).rev() {
            let i = idx % m;
            idx /= m;
            c[j] = self.lo[j] + (self.hi[j] - self.lo[j]) * (i as f64 + 0.5) / m as f64;
        }
        c
    }

    /// Sorted `(bin, count)` pairs of the live particles and the number of
    /// live particles outside the box.
    pub fn histogram(&self, s: &EnsembleSnapshot) -> (Vec<(u64, u32)>, usize) {
        let d = s.d;
        let mut idx = Vec::with_capacity(s.n);
        let mut clipped = 0;
        let mut buf = Vec::with_capacity(2 * d);
        for i in 0..s.n {
            if !s.alive[i] {
                continue;
            }
            let r = i * d..(i + 1) * d;
            self.projection.project(&s.x[r.clone()], &s.v[r], &mut buf);
            match self.index(&buf) {
                Some(b) => idx.push(b),
                None => clipped += 1,
            }
        }
        idx.sort_unstable();
        let mut out: Vec<(u64, u32)> = Vec::new();
        for b in idx {
            match out.last_mut() {
                Some((lb, c)) if *lb == b => *c += 1,
                _ => out.push((b, 1)),
            }
        }
        (out, clipped)
    }
}

fn projection_is_radial(p: Projection, j: usize) -> bool {
    matches!(p, Projection::Speed | Projection::RadiusSpeed) && (j == 0 || p == Projection::RadiusSpeed)
}

/// Domain bounds for periodic or confined position coordinates.
fn fixed_range(model: &ModelSpec, p: Projection, j: usize) -> Option<(f64, f64)> {
    let d = model.dim();
    let pos = match p {
        Projection::Full | Projection::Position => j < d,
        Projection::RadiusSpeed => j == 0,
        _ => false,
    };
    if !pos {
        return None;
    }
    let radial = p == Projection::RadiusSpeed;
    if model.is_torus() {
        return Some(if radial {
            (0.0, (d as f64).sqrt() + 1e-9)
        } else {
            (0.0, 1.0)
        });
    }
    if let ModelSpec::KnudsenGas { geometry, .. } = model {
        let up = |a: f64| a * (1.0 + 1e-12) + 1e-12;
        return Some(match geometry {
            Geometry::Interval if radial => (0.0, up(1.0)),
            Geometry::Interval => (0.0, up(1.0)),
            Geometry::Disk { radius } if radial => (0.0, up(*radius)),
            Geometry::Disk { radius } => (-up(*radius), up(*radius)),
            Geometry::Box { sides } if radial => (0.0, up(norm(sides))),
            Geometry::Box { sides } => (0.0, up(sides[j])),
        });
    }
    None
}

/// One weighted distance estimate with its bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    /// `Σ φ(c_b) |p_b - q_b|`.
    pub weighted_l1: f64,
    /// `Σ |p_b - q_b|` (L¹ convention, at most 2).
    pub l1: f64,
    /// `l1 / 2` (total-variation convention, at most 1).
    pub tv: f64,
    /// First-order estimate of `E[weighted_l1]` when both ensembles share one law.
    pub noise: f64,
    pub clipped_a: f64,
    pub clipped_b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub const CLIP_WARN: f64 = 0.01;
pub const CLIP_ERROR: f64 = 0.10;

/// Weighted L¹ distance of the empirical laws of `a` and `b` on `binning`.
/// Absorbed particles carry no mass.
pub fn weighted_tv(a: &EnsembleSnapshot, b: &EnsembleSnapshot, phi: &WeightFn, binning: &Binning) -> Result<TvEstimate> {
    if a.d != b.d {
        return invalid("snapshots have different dimensions");
    }
    if a.n == 0 || b.n == 0 {
        return invalid("snapshots must be non-empty");
    }
    if binning.n_coords() != binning.projection.n_coords(a.d) {
        return invalid("binning does not match the snapshot dimension");
    }
    let weighted = !phi.is_constant();
    if weighted && binning.projection != Projection::Full {
        return invalid("a non-constant weight needs the full phase-space projection");
    }
    let (ha, ca) = binning.histogram(a);
    let (hb, cb) = binning.histogram(b);
    let (na, nb) = (a.n as f64, b.n as f64);
    let clipped_a = ca as f64 / na;
    let clipped_b = cb as f64 / nb;
    let worst = clipped_a.max(clipped_b);
    if worst > CLIP_ERROR {
        return Err(Error::MassOutsideBox { fraction: worst });
    }
    let warning = (worst > CLIP_WARN).then(|| format!("{worst:.4} of the mass lies outside the binning box"));
    let d = a.d;
    let weight_at = |bin: u64| -> f64 {
        if !weighted {
            return phi.eval(&vec![0.0; d], &vec![0.0; d]);
        }
        let c = binning.centre(bin);
        phi.eval(&c[..d], &c[d..])
    };
    let noise_scale = (2.0 / std::f64::consts::PI).sqrt() * (1.0 / na + 1.0 / nb).sqrt();
    let (mut wl1, mut l1, mut noise) = (0.0, 0.0, 0.0);
    let mut add = |bin: u64, ka: u32, kb: u32| {
        let p = ka as f64 / na;
        let q = kb as f64 / nb;
        let w = weight_at(bin);
        let pbar = (ka + kb) as f64 / (na + nb);
        wl1 += w * (p - q).abs();
        l1 += (p - q).abs();
        noise += w * noise_scale * (pbar * (1.0 - pbar)).sqrt();
    };
    let (mut i, mut j) = (0, 0);
    while i < ha.len() || j < hb.len() {
        match (ha.get(i), hb.get(j)) {
            (Some(&(ba, ka)), Some(&(bb, kb))) if ba == bb => {
                add(ba, ka, kb);
                i += 1;
                j += 1;
            }
            (Some(&(ba, ka)), Some(&(bb, _))) if ba < bb => {
                add(ba, ka, 0);
                i += 1;
            }
            (Some(&(ba, ka)), None) => {
                add(ba, ka, 0);
                i += 1;
            }
            (_, Some(&(bb, kb))) => {
                add(bb, 0, kb);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    Ok(TvEstimate {
        weighted_l1: wl1,
        l1,
        tv: l1 / 2.0,
        noise,
        clipped_a,
        clipped_b,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::presets::preset;
    use crate::models::PhaseState;

    fn snap(model: &ModelSpec, pts: &[(f64, f64)]) -> EnsembleSnapshot {
        let s: Vec<PhaseState> = pts.iter().map(|(x, v)| PhaseState::new(vec![*x], vec![*v])).collect();
        EnsembleSnapshot::from_states(0.0, &s, 0, model)
    }

    #[test]
    fn identical_is_zero_disjoint_is_two() {
        let m = preset("linear_bgk_r2").unwrap().model;
        let a = snap(&m, &[(0.0, 0.0), (0.1, 0.1)]);
        let b = snap(&m, &[(5.0, 5.0), (5.0, 5.0)]);
        let bin = Binning::new(Projection::Full, 8, vec![-1.0, -1.0], vec![6.0, 6.0]).unwrap();
        let one = WeightFn::constant();
        assert_eq!(weighted_tv(&a, &a, &one, &bin).unwrap().l1, 0.0);
        let r = weighted_tv(&a, &b, &one, &bin).unwrap();
        assert_eq!(r.l1, 2.0);
        assert_eq!(r.tv, 1.0);
    }

    #[test]
    fn clipped_mass_is_an_error_above_ten_percent() {
        let m = preset("linear_bgk_r2").unwrap().model;
        let a = snap(&m, &[(0.0, 0.0), (9.0, 0.0)]);
        let bin = Binning::new(Projection::Full, 4, vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            weighted_tv(&a, &a, &WeightFn::constant(), &bin),
            Err(Error::MassOutsideBox { .. })
        ));
    }

    #[test]
    fn centre_inverts_index() {
        let bin = Binning::new(Projection::Full, 5, vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let c = [0.33, 0.75];
        let i = bin.index(&c).unwrap();
        let ctr = bin.centre(i);
        assert_eq!(bin.index(&ctr), Some(i));
        assert!((ctr[0] - 0.3).abs() < 1e-12 && (ctr[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn dead_particles_carry_no_mass() {
        let m = preset("knudsen_absorbing").unwrap().model;
        let mut s = vec![PhaseState::new(vec![0.5], vec![1.0]); 4];
        s[0].alive = false;
        s[1].alive = false;
        let a = EnsembleSnapshot::from_states(0.0, &s, 0, &m);
        for z in &mut s {
            z.alive = false;
        }
        let b = EnsembleSnapshot::from_states(0.0, &s, 0, &m);
        let bin = Binning::new(Projection::Full, 4, vec![0.0, -2.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(weighted_tv(&a, &b, &WeightFn::constant(), &bin).unwrap().l1, 0.5);
    }
}
