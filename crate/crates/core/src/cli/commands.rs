//! Subcommand bodies: fill defaults into a [`RunConfig`], then run it.

use std::fmt::Write;

use serde_json::{json, Value};

use super::config::{resolve_model, RatesConfig, ResolvedModel, RunConfig};
use super::{CliError, Outcome, Status};
use crate::bgk_interval::{solve_steady, Grid1D, SteadyStateReport};
use crate::experiments::{curve_csv, curve_svg, default_init, run_tv_decay, simulate_ensemble_with, FitKind};
use crate::models::{weight_catalog, SigmaSpec, WeightFn};
use crate::rate_calculus::{
    degenerate_boltzmann_rate, doeblin_rate, drift_to_discrete, harris_rate, subgeometric_envelope, ConcaveRateFn,
    DoeblinInput, RateBound,
};
use crate::verification::gcc::torus_grid;
use crate::verification::{drift_verify, gcc_check, minorisation_estimate};

pub const SUBCOMMANDS: &[&str] = &["rates", "simulate", "verify-drift", "minorisation", "gcc", "tv-decay", "steady"];

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn model_of(cfg: &RunConfig, cmd: &str) -> Result<ResolvedModel, CliError> {
    match &cfg.model {
        Some(v) => resolve_model(v).map_err(CliError::Usage),
        None => usage(format!("{cmd} needs a model (--model or `model` in the config)")),
    }
}

fn weight_of(cfg: &RunConfig, m: &ResolvedModel, cmd: &str) -> Result<WeightFn, CliError> {
    let w = cfg.weight.as_ref().or(m.default_weight.as_ref());
    match w {
        Some(w) => Ok(weight_catalog(&m.spec, &w.tag, &w.params)?),
        None => usage(format!("{cmd} needs a weight (--weight or `weight` in the config)")),
    }
}

/// Fills the section of `cmd` with defaults and the global seed. Idempotent.
pub fn resolve(cmd: &str, mut cfg: RunConfig) -> Result<RunConfig, CliError> {
    let seed = cfg.seed;
    match cmd {
        "rates" => {
            if cfg.rates.is_none() {
                return usage("rates needs one of --doeblin, --harris, --drift, --subgeometric, --degenerate");
            }
        }
        "simulate" => {
            let m = model_of(&cfg, cmd)?;
            let s = cfg.simulate.get_or_insert_with(Default::default);
            s.init.get_or_insert_with(|| default_init(&m.spec));
        }
        "verify-drift" => {
            let m = model_of(&cfg, cmd)?;
            if cfg.weight.is_none() {
                cfg.weight = m.default_weight;
            }
            cfg.verify_drift.get_or_insert_with(Default::default).seed = seed;
        }
        "minorisation" => {
            let m = model_of(&cfg, cmd)?;
            if cfg.weight.is_none() {
                cfg.weight = m.default_weight;
            }
            cfg.minorisation.get_or_insert_with(Default::default).seed = seed;
        }
        "gcc" => {
            let m = cfg.model.as_ref().map(resolve_model).transpose().map_err(CliError::Usage)?;
            let g = cfg.gcc.get_or_insert_with(Default::default);
            if let Some(m) = &m {
                if g.sigma.is_none() {
                    if let crate::models::ModelSpec::DegenerateBoltzmann { sigma, .. } = &m.spec {
                        g.sigma = Some(sigma.clone());
                    }
                }
                if g.potential.is_none() {
                    g.potential = Some(m.spec.potential());
                }
                g.d.get_or_insert(m.spec.dim());
            }
            let axis = match &g.sigma {
                Some(SigmaSpec::Bump { axis, .. } | SigmaSpec::Cosine { axis, .. }) => *axis,
                Some(SigmaSpec::Constant { .. }) => 0,
                None => return usage("gcc needs `sigma` in the config or a model with a scattering coefficient"),
            };
            let d = *g.d.get_or_insert(axis + 1);
            g.potential.get_or_insert(crate::models::PotentialSpec::None);
            g.n_x.get_or_insert(match d {
                1 => 64,
                2 => 16,
                _ => 8,
            });
        }
        "tv-decay" => {
            let m = model_of(&cfg, cmd)?;
            let t = cfg.tv_decay.get_or_insert_with(Default::default);
            t.seed = seed;
            t.init.get_or_insert_with(|| default_init(&m.spec));
        }
        "steady" => {
            cfg.steady.get_or_insert_with(Default::default);
        }
        other => return usage(format!("unknown subcommand `{other}`")),
    }
    Ok(cfg)
}

fn to_json<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

/// Runs a resolved configuration; no files are touched.
pub fn execute(cmd: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cmd {
        "rates" => rates(cfg),
        "simulate" => simulate(cfg),
        "verify-drift" => verify_drift(cfg),
        "minorisation" => minorisation(cfg),
        "gcc" => gcc(cfg),
        "tv-decay" => tv_decay(cfg),
        "steady" => steady(cfg),
        other => usage(format!("unknown subcommand `{other}`")),
    }
}

fn bound_json(input: &RatesConfig, b: &RateBound) -> Value {
    json!({ "input": input, "C": b.c(), "lambda": b.lambda(), "bound": b })
}

fn log_grid(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    let r = (t_max / t_min).ln();
    (0..n).map(|i| t_min * (r * i as f64 / (n - 1) as f64).exp()).collect()
}

fn rates(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let Some(r) = &cfg.rates else {
        return usage("rates section missing");
    };
    let mut files = vec![];
    let summary = match r {
        RatesConfig::Doeblin(i) => bound_json(r, &doeblin_rate(*i)?),
        RatesConfig::Harris(i) => bound_json(r, &harris_rate(*i)?),
        RatesConfig::Degenerate(i) => bound_json(r, &degenerate_boltzmann_rate(i.beta, i.kappa, i.tau, i.sigma_inf)?),
        RatesConfig::Drift(i) => json!({ "input": r, "discrete": drift_to_discrete(*i)? }),
        RatesConfig::Subgeometric(s) => {
            let v = match (s.xi, &s.nodes) {
                (Some(xi), _) => ConcaveRateFn::power(xi)?,
                (None, Some(nodes)) => ConcaveRateFn::tabulated(nodes.clone())?,
                (None, None) => return usage("subgeometric needs `xi` or `nodes`"),
            };
            if !(s.tmax > 1.0 && s.tmax.is_finite()) || s.points < 2 {
                return usage("subgeometric needs tmax > 1 and points >= 2");
            }
            let b = subgeometric_envelope(v, s.c, s.mu_phi)?;
            let mut csv = String::from("t,bound\n");
            for t in log_grid(1.0, s.tmax, s.points) {
                writeln!(csv, "{t:?},{:?}", b.eval(t)).unwrap();
            }
            files.push(("envelope.csv".to_string(), csv.into_bytes()));
            bound_json(r, &b)
        }
    };
    files.insert(0, ("rate.json".to_string(), to_json(&summary)));
    Ok(Outcome {
        status: Status::Pass,
        files,
        summary,
    })
}

fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let m = model_of(cfg, "simulate")?;
    let s = cfg.simulate.clone().unwrap_or_default();
    let init = s.init.clone().unwrap_or_else(|| default_init(&m.spec));
    let times = s.grid.times()?;
    let d = m.spec.dim();
    let mut csv = String::from("traj_id,t");
    for k in 1..=d {
        write!(csv, ",x{k}").unwrap();
    }
    for k in 1..=d {
        write!(csv, ",v{k}").unwrap();
    }
    csv.push('\n');
    let mut alive = vec![];
    simulate_ensemble_with(&m.spec, &init, s.n, &times, cfg.seed, s.dt_max, |snap| {
        for i in (0..snap.n).filter(|i| snap.alive[*i]) {
            write!(csv, "{i},{:?}", snap.t).unwrap();
            for c in snap.x[i * d..(i + 1) * d].iter().chain(&snap.v[i * d..(i + 1) * d]) {
                write!(csv, ",{c:?}").unwrap();
            }
            csv.push('\n');
        }
        alive.push(json!({ "t": snap.t, "alive_fraction": snap.alive_fraction() }));
        Ok(())
    })?;
    let summary = json!({
        "model": m.spec,
        "N": s.n,
        "snapshots": alive,
        "note": "absorbed trajectories are omitted from the CSV",
    });
    Ok(Outcome {
        status: Status::Pass,
        files: vec![
            ("trajectories.csv".into(), csv.into_bytes()),
            ("simulate.json".into(), to_json(&summary)),
        ],
        summary: json!({ "N": s.n, "snapshots": times.len() }),
    })
}

fn verify_drift(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let m = model_of(cfg, "verify-drift")?;
    let phi = weight_of(cfg, &m, "verify-drift")?;
    let opts = cfg.verify_drift.clone().unwrap_or_default();
    let r = drift_verify(&m.spec, &phi, &opts)?;
    let summary = json!({
        "verdict": if r.passed { "PASS" } else { "FAIL" },
        "zeta": r.zeta_hat,
        "D": r.d_used,
        "margin": r.margin,
        "weight": phi.tag(),
    });
    Ok(Outcome {
        status: if r.passed { Status::Pass } else { Status::Fail },
        files: vec![("drift_report.json".into(), to_json(&r))],
        summary,
    })
}

fn minorisation(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let m = model_of(cfg, "minorisation")?;
    let phi = weight_of(cfg, &m, "minorisation")?;
    let opts = cfg.minorisation.clone().unwrap_or_default();
    let r = minorisation_estimate(&m.spec, &phi, &opts)?;
    let doeblin = if r.alpha_hat > 0.0 {
        Some(doeblin_rate(DoeblinInput {
            alpha: r.alpha_hat,
            tau: r.tau,
        })?)
    } else {
        None
    };
    let summary = json!({
        "verdict": if doeblin.is_some() { "PASS" } else { "INCONCLUSIVE" },
        "alpha_hat": r.alpha_hat,
        "alpha_raw": r.alpha_raw,
        "tau": r.tau,
        "lambda": doeblin.as_ref().and_then(|b| b.lambda()),
        "diagnostic": r.diagnostic,
    });
    Ok(Outcome {
        status: if doeblin.is_some() { Status::Pass } else { Status::Inconclusive },
        files: vec![(
            "minorisation_report.json".into(),
            to_json(&json!({ "report": r, "doeblin": doeblin })),
        )],
        summary,
    })
}

/// `speeds` along `±e_k` and the diagonals `(±1, …, ±1)/√d`.
fn default_velocities(d: usize, speeds: &[f64]) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = vec![];
    for k in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[k] = s;
            dirs.push(e);
        }
    }
    if d > 1 {
        for mask in 0..(1usize << d) {
            dirs.push(
                (0..d)
                    .map(|k| if mask >> k & 1 == 1 { -1.0 } else { 1.0 } / (d as f64).sqrt())
                    .collect(),
            );
        }
    }
    speeds
        .iter()
        .flat_map(|s| dirs.iter().map(move |e| e.iter().map(|c| s * c).collect()))
        .collect()
}

fn gcc(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let Some(g) = &cfg.gcc else {
        return usage("gcc section missing");
    };
    let (Some(sigma), Some(d), Some(n_x)) = (&g.sigma, g.d, g.n_x) else {
        return usage("gcc needs sigma, d and n_x after resolution");
    };
    let pot = g.potential.clone().unwrap_or_default();
    let v_grid = match &g.v_grid {
        Some(v) => v.clone(),
        None => default_velocities(d, &g.speeds),
    };
    let r = gcc_check(sigma, &pot, g.t_horizon, &torus_grid(d, n_x), &v_grid)?;
    let summary = json!({
        "verdict": if r.passed { "PASS" } else { "FAIL" },
        "kappa": r.kappa_hat,
        "T": r.t_horizon,
        "argmin_x": r.argmin_x,
        "argmin_v": r.argmin_v,
    });
    Ok(Outcome {
        status: if r.passed { Status::Pass } else { Status::Fail },
        files: vec![("gcc_report.json".into(), to_json(&r))],
        summary,
    })
}

fn tv_decay(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let m = model_of(cfg, "tv-decay")?;
    let t = cfg.tv_decay.clone().unwrap_or_default();
    let phi = match &t.weight {
        Some(tag) => weight_catalog(&m.spec, tag, &t.weight_params)?,
        None => WeightFn::constant(),
    };
    let out = run_tv_decay(&m.spec, &phi, &t)?;
    let c = &out.curve;
    let fit = json!({
        "fit": c.fit,
        "alternative_fit": c.alternative_fit,
        "reference": out.reference,
        "phi_tag": c.phi_tag,
        "weight_fingerprint": c.weight_fingerprint,
        "max_clipped": out.max_clipped,
        "warnings": out.warnings,
    });
    let summary = json!({
        "fit_kind": c.fit.kind,
        "rate_or_exponent": c.fit.rate_or_exponent,
        "half_width": c.fit.half_width,
        "residual": c.fit.residual,
        "reference": out.reference.label(),
    });
    Ok(Outcome {
        status: if c.fit.kind == FitKind::None { Status::Inconclusive } else { Status::Pass },
        files: vec![
            ("tv_decay.csv".into(), curve_csv(c).into_bytes()),
            ("tv_decay.svg".into(), curve_svg(c).into_bytes()),
            ("fit.json".into(), to_json(&fit)),
            ("tv_decay_report.json".into(), to_json(&out)),
        ],
        summary,
    })
}

fn steady(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = cfg.steady.clone().unwrap_or_default();
    let mut grid = Grid1D::new(s.nx, s.nv, s.t0.max(s.t1));
    if let Some(v) = s.v_max {
        grid.v_max = v;
    }
    grid.transport = s.transport;
    let r = solve_steady(s.t0, s.t1, s.kappa, &grid, s.tol, s.max_iter)?;
    let max_u = r.u.iter().fold(0.0f64, |a, u| a.max(u.abs()));
    let summary = json!({
        "verdict": if r.converged { "PASS" } else { "INCONCLUSIVE" },
        "converged": r.converged,
        "iterations": r.iterations,
        "residual": r.residual,
        "max_abs_u": max_u,
        "rho_variation": SteadyStateReport::relative_variation(&r.rho),
        "P_variation": SteadyStateReport::relative_variation(&r.p),
        "T_range": [r.t.iter().cloned().fold(f64::INFINITY, f64::min), r.t.iter().cloned().fold(f64::NEG_INFINITY, f64::max)],
    });
    Ok(Outcome {
        status: if r.converged { Status::Pass } else { Status::Inconclusive },
        files: vec![
            ("steady_moments.csv".into(), r.moments_csv().into_bytes()),
            ("steady_distribution.csv".into(), r.distribution_csv().into_bytes()),
            ("steady_report.json".into(), to_json(&r)),
        ],
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_velocities_cover_axes_and_diagonals() {
        assert_eq!(default_velocities(1, &[1.0, 2.0]).len(), 4);
        let v = default_velocities(2, &[1.0]);
        assert_eq!(v.len(), 8);
        for w in &v {
            assert!((w[0].hypot(w[1]) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn resolve_is_idempotent() {
        let cfg = RunConfig {
            model: Some(Value::from("degenerate_strip")),
            seed: 3,
            ..Default::default()
        };
        for cmd in SUBCOMMANDS.iter().filter(|c| **c != "rates") {
            let once = resolve(cmd, cfg.clone()).unwrap();
            let twice = resolve(cmd, once.clone()).unwrap();
            assert_eq!(once, twice, "{cmd}");
        }
    }
}
