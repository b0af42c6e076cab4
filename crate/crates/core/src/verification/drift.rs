//! Foster–Lyapunov drift check `L*φ ≤ -ζφ + D` on sampled phase-space points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grid_points, sublevel_box, PhaseBox};
use crate::error::{invalid, Error, Result};
use crate::models::weights::WeightRecord;
use crate::models::{Generator, ModelSpec, PhaseState, PotentialSpec, WeightFn};
use crate::numerics::{dot, golden_min, norm2};
use crate::rng::{derive_seed, salts, RngStream};

/// How the sample points are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerSpec {
    /// Tensor grid on the region.
    Grid { per_axis: usize },
    /// Uniform random points on the region.
    Random { n: usize },
    /// Tensor grid on the sub-level region plus uniform far-field points on
    /// the enlarged region.
    Auto {
        #[serde(default)]
        per_axis: Option<usize>,
        #[serde(default = "default_far")]
        far_field: usize,
    },
}

fn default_far() -> usize {
    10_000
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec::Auto {
            per_axis: None,
            far_field: default_far(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftOptions {
    pub zeta_target: Option<f64>,
    pub d_target: Option<f64>,
    pub sampler: SamplerSpec,
    /// Sub-level `{φ ≤ level}` that sizes the automatic region.
    pub level: f64,
    /// Enlargement of the region for far-field points.
    pub far_factor: f64,
    /// Explicit region overriding the automatic one.
    pub region: Option<PhaseBox>,
    pub seed: u64,
    /// Accepted negative margin from rounding and finite differences.
    pub tol: f64,
}

impl Default for DriftOptions {
    fn default() -> Self {
        DriftOptions {
            zeta_target: None,
            d_target: None,
            sampler: SamplerSpec::default(),
            level: 1e3,
            far_factor: 4.0,
            region: None,
            seed: 0,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub passed: bool,
    /// `φ` is constant, so `g ≡ 0` and any `ζ` works with `D = ζ`.
    pub degenerate: bool,
    pub zeta_hat: f64,
    /// `max(0, max_z (L*φ + ζφ))`.
    pub d_hat: f64,
    /// Constant `D` used for the margin (target if given, else `d_hat`).
    pub d_used: f64,
    /// Smallest `-L*φ/φ` over the far-field samples.
    pub zeta_max: f64,
    /// `min_z (-L*φ - ζφ + D)`.
    pub margin: f64,
    pub worst_point: PhaseState,
    pub n_samples: usize,
    pub n_far_field: usize,
    pub region: PhaseBox,
    pub far_region: PhaseBox,
    pub sampling: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub weight: WeightRecord,
    pub model: ModelSpec,
    pub options: DriftOptions,
}

impl DriftReport {
    pub fn verdict(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

/// Constants of the confining linear BGK regime, `ζ = min{α, β, 1}/4` and
/// `D = d/2 + η/4`, for a potential with `x·∇Φ ≥ α|x|² + βΦ - η`.
pub fn bgk_r2_drift_constants(alpha: f64, beta: f64, eta: f64, d: usize) -> (f64, f64) {
    (alpha.min(beta).min(1.0) / 4.0, d as f64 / 2.0 + eta / 4.0)
}

/// Slack `x·∇Φ - α|x|² - βΦ + η` of the confining hypothesis at `x`.
pub fn bgk_r2_hypothesis_slack(pot: &PotentialSpec, alpha: f64, beta: f64, eta: f64, x: &[f64]) -> f64 {
    dot(x, &pot.grad(x)) - alpha * norm2(x) - beta * pot.value(x) + eta
}

const MAX_LEVELS: usize = 5;

fn default_per_axis(dims: usize, levels: usize) -> usize {
    ((40_000.0 / levels as f64).powf(1.0 / dims as f64).floor() as usize).clamp(4, 200)
}

fn fixed_region(model: &ModelSpec) -> bool {
    model.is_torus() || matches!(model, ModelSpec::KnudsenGas { .. })
}

/// Evaluates `g = L*φ` on sampled points and certifies `g ≤ -ζφ + D`.
pub fn drift_verify(model: &ModelSpec, phi: &WeightFn, opts: &DriftOptions) -> Result<DriftReport> {
    model.validate()?;
    if let Some(z) = opts.zeta_target {
        if !(z > 0.0 && z.is_finite()) {
            return invalid(format!("zeta_target must be > 0 (got {z})"));
        }
    }
    if let Some(dt) = opts.d_target {
        if !(dt >= 0.0 && dt.is_finite()) {
            return invalid(format!("d_target must be >= 0 (got {dt})"));
        }
    }
    if !(opts.level > 1.0 && opts.far_factor >= 1.0) {
        return invalid("level must be > 1 and far_factor >= 1");
    }
    let d = model.dim();
    let region = match &opts.region {
        Some(r) => {
            r.validate()?;
            if r.dim() != d {
                return invalid("region dimension does not match the model");
            }
            r.clone()
        }
        None => sublevel_box(model, phi, opts.level),
    };
    let far_region = region.scaled(model, opts.far_factor);
    let mut rng = RngStream::new(derive_seed(opts.seed, salts::DRIFT_FAR_FIELD), 0);
    let (mut points, n_far, sampling) = match &opts.sampler {
        SamplerSpec::Grid { per_axis } => (
            grid_points(model, &region, *per_axis),
            0,
            format!("tensor grid, {per_axis} nodes per axis"),
        ),
        SamplerSpec::Random { n } => (
            (0..*n).map(|_| region.sample(model, &mut rng)).collect(),
            0,
            format!("{n} uniform random points"),
        ),
        SamplerSpec::Auto {
            per_axis,
            far_field,
        } => {
            // nested grids on the region shrunk by 4^-k, down to unit position scale
            let half = region
                .x_lo
                .iter()
                .zip(&region.x_hi)
                .map(|(a, b)| 0.5 * (b - a))
                .fold(f64::INFINITY, f64::min);
            let levels = if fixed_region(model) {
                1
            } else {
                (1 + (half / 0.5).log(4.0).floor().max(0.0) as usize).min(MAX_LEVELS)
            };
            let pa = per_axis.unwrap_or_else(|| default_per_axis(2 * d, levels));
            let mut pts = vec![];
            for k in 0..levels {
                pts.extend(grid_points(model, &region.scaled(model, 0.25f64.powi(k as i32)), pa));
            }
            let far: Vec<PhaseState> = (0..*far_field)
                .map(|_| far_region.sample(model, &mut rng))
                .collect();
            pts.extend(far);
            (
                pts,
                *far_field,
                format!(
                    "tensor grids, {pa} nodes per axis, on the sub-level region and {} nested shrinkings by 4, plus {far_field} uniform far-field points on the {}x region",
                    levels - 1,
                    opts.far_factor
                ),
            )
        }
    };
    if points.is_empty() {
        return invalid("sampler produced no admissible points");
    }
    let generator = Generator::new(model)?;
    let evals: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .map(|z| {
            let p = phi.eval_state(z);
            if !p.is_finite() || p < 1.0 - 1e-12 {
                return Err(Error::InvalidWeight {
                    value: p,
                    state: format!("x={:?} v={:?}", z.x, z.v),
                });
            }
            Ok((generator.apply_state(phi, z)?, p))
        })
        .collect();
    let evals: Vec<(f64, f64)> = evals.into_iter().collect::<Result<_>>()?;
    let n = evals.len();

    // far field: the top decile of φ
    let mut sorted: Vec<f64> = evals.iter().map(|e| e.1).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cut = sorted[((n as f64 * 0.9) as usize).min(n - 1)];
    let zeta_max = evals
        .iter()
        .filter(|e| e.1 >= cut)
        .map(|(g, p)| -g / p)
        .fold(f64::INFINITY, f64::min);

    let d_of = |zeta: f64| {
        evals
            .iter()
            .map(|(g, p)| g + zeta * p)
            .fold(0.0f64, f64::max)
    };
    let degenerate = phi.is_constant() || evals.iter().all(|(g, _)| *g == 0.0) && sorted[0] == sorted[n - 1];
    let mut reason = None;
    let zeta_hat = if degenerate {
        opts.zeta_target.unwrap_or(1.0)
    } else if let Some(z) = opts.zeta_target {
        if z > zeta_max * (1.0 + 1e-12) {
            reason = Some(format!(
                "zeta_target {z} exceeds the far-field contraction {zeta_max}"
            ));
        }
        z
    } else if zeta_max <= 0.0 || !zeta_max.is_finite() {
        reason = Some(format!(
            "no far-field contraction: min of -L*phi/phi over the far field is {zeta_max}"
        ));
        zeta_max
    } else {
        let (lz, _) = golden_min(
            |lz: f64| {
                let z = lz.exp();
                d_of(z) / z
            },
            (zeta_max * 1e-6).ln(),
            zeta_max.ln(),
            200,
        );
        let mut z = lz.exp();
        if d_of(zeta_max) / zeta_max <= d_of(z) / z {
            z = zeta_max;
        } else if d_of(z) == 0.0 {
            // D vanishes on [0, ζ*]; take the largest such ζ
            let (mut lo, mut hi) = (z, zeta_max);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if d_of(mid) == 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            z = lo;
        }
        z
    };
    let d_hat = if degenerate { zeta_hat } else { d_of(zeta_hat) };
    let d_used = opts.d_target.unwrap_or(d_hat);
    let (mut margin, mut worst) = (f64::INFINITY, 0usize);
    for (i, (g, p)) in evals.iter().enumerate() {
        let m = -g - zeta_hat * p + d_used;
        if m < margin {
            margin = m;
            worst = i;
        }
    }
    if margin < -opts.tol && reason.is_none() {
        reason = Some(format!("margin {margin:e} below tolerance at the worst point"));
    }
    let passed = reason.is_none() && zeta_hat > 0.0 && margin >= -opts.tol;
    Ok(DriftReport {
        passed,
        degenerate,
        zeta_hat,
        d_hat,
        d_used,
        zeta_max,
        margin,
        worst_point: points.swap_remove(worst),
        n_samples: n,
        n_far_field: n_far,
        region,
        far_region,
        sampling,
        reason,
        weight: phi.record(),
        model: model.clone(),
        options: opts.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::presets::preset;
    use crate::models::weight_catalog;

    #[test]
    fn constant_weight_is_degenerate() {
        let p = preset("torus_bgk").unwrap();
        let w = WeightFn::constant();
        let r = drift_verify(&p.model, &w, &DriftOptions::default()).unwrap();
        assert!(r.degenerate && r.passed);
        assert_eq!(r.d_hat, r.zeta_hat);
    }

    #[test]
    fn bgk_r2_constants() {
        assert_eq!(bgk_r2_drift_constants(0.5, 1.0, 1.0, 1), (0.125, 0.75));
    }

    #[test]
    fn pass_is_monotone_in_d() {
        let p = preset("linear_bgk_r2").unwrap();
        let w = weight_catalog(&p.model, "bgk_r2", &p.weight_params).unwrap();
        let mut o = DriftOptions {
            zeta_target: Some(0.125),
            d_target: Some(0.75),
            sampler: SamplerSpec::Grid { per_axis: 40 },
            ..Default::default()
        };
        let a = drift_verify(&p.model, &w, &o).unwrap();
        assert!(a.passed);
        o.d_target = Some(1.0);
        let b = drift_verify(&p.model, &w, &o).unwrap();
        assert!(b.passed && b.margin >= a.margin);
    }
}
