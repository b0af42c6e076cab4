//! JSON run configuration shared by all subcommands.
//!
//! One document carries a global seed, an optional model and weight, and one
//! section per subcommand. Absent sections take their defaults; the resolved
//! document (defaults filled, command-line overrides applied) is embedded in
//! every run manifest.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "model": "torus_bgk",
//!   "tv_decay": { "N": 100000, "grid": { "kind": "linear", "t_max": 8.0, "n": 80 } }
//! }
//! ```
//!
//! `model` is either a preset name or a model object such as
//! `{"model": "linear_bgk", "domain": {"kind": "torus", "d": 1}}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bgk_interval::Transport;
use crate::experiments::{InitSpec, TimeGrid, TvDecayConfig};
use crate::models::presets::{preset, PRESET_NAMES};
use crate::models::{ModelSpec, PotentialSpec, SigmaSpec};
use crate::rate_calculus::{DoeblinInput, DriftConstants, HarrisInput};
use crate::verification::{DriftOptions, MinorisationOptions};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify_drift: Option<DriftOptions>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minorisation: Option<MinorisationOptions>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gcc: Option<GccConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv_decay: Option<TvDecayConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady: Option<SteadyConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightRef {
    pub tag: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// One closed-form rate computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatesConfig {
    Doeblin(DoeblinInput),
    Harris(HarrisInput),
    /// Continuous drift constants turned into discrete ones.
    Drift(DriftConstants),
    Subgeometric(SubgeometricConfig),
    Degenerate(DegenerateInput),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgeometricConfig {
    /// Power rate function `V(s) = 1 + s^xi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    /// Tabulated rate function; used when `xi` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<(f64, f64)>>,
    #[serde(rename = "C")]
    pub c: f64,
    pub mu_phi: f64,
    #[serde(default = "default_tmax")]
    pub tmax: f64,
    /// Points of the logarithmic grid on `[1, tmax]`.
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_tmax() -> f64 {
    1e4
}

fn default_points() -> usize {
    200
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateInput {
    pub beta: f64,
    pub kappa: f64,
    pub tau: f64,
    pub sigma_inf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub grid: TimeGrid,
    pub init: Option<InitSpec>,
    pub dt_max: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            n: 1000,
            grid: TimeGrid::Linear { t_max: 10.0, n: 10 },
            init: None,
            dt_max: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GccConfig {
    /// Defaults to the model's scattering coefficient.
    pub sigma: Option<SigmaSpec>,
    /// Defaults to the model's potential.
    pub potential: Option<PotentialSpec>,
    #[serde(rename = "T")]
    pub t_horizon: f64,
    /// Positions per axis; defaults to 64, 16 or 8 in dimension 1, 2 or 3.
    pub n_x: Option<usize>,
    /// Explicit velocity grid; otherwise built from `speeds` along a fixed
    /// set of directions.
    pub v_grid: Option<Vec<Vec<f64>>>,
    pub speeds: Vec<f64>,
    pub d: Option<usize>,
}

impl Default for GccConfig {
    fn default() -> Self {
        GccConfig {
            sigma: None,
            potential: None,
            t_horizon: 2.0,
            n_x: None,
            v_grid: None,
            speeds: vec![0.5, 1.0, 1.5, 2.0],
            d: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyConfig {
    #[serde(rename = "T0")]
    pub t0: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    pub kappa: f64,
    pub nx: usize,
    pub nv: usize,
    /// Defaults to `8 √max(T0, T1)`.
    pub v_max: Option<f64>,
    pub transport: Transport,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        SteadyConfig {
            t0: 1.0,
            t1: 4.0,
            kappa: 0.1,
            nx: 64,
            nv: 128,
            v_max: None,
            transport: Transport::Upwind,
            tol: 1e-12,
            max_iter: 200_000,
        }
    }
}

/// A resolved model with its preset defaults, if it came from one.
pub struct ResolvedModel {
    pub spec: ModelSpec,
    pub preset: Option<String>,
    pub default_weight: Option<WeightRef>,
}

/// Interprets the `model` field: a preset name or a model object.
pub fn resolve_model(v: &Value) -> Result<ResolvedModel, String> {
    match v {
        Value::String(name) => {
            let p = preset(name).map_err(|_| {
                format!("unknown model `{name}`; presets: {}", PRESET_NAMES.join(", "))
            })?;
            Ok(ResolvedModel {
                spec: p.model,
                preset: Some(name.clone()),
                default_weight: Some(WeightRef {
                    tag: p.weight.to_string(),
                    params: p.weight_params,
                }),
            })
        }
        other => {
            let spec: ModelSpec =
                serde_json::from_value(other.clone()).map_err(|e| format!("model: {e}"))?;
            spec.validate().map_err(|e| format!("model: {e}"))?;
            Ok(ResolvedModel {
                spec,
                preset: None,
                default_weight: None,
            })
        }
    }
}

/// Turns `key=value` pairs into a JSON object; integers stay integers,
/// other numbers become floats and anything else is a string.
pub fn pairs_to_object(pairs: &[String]) -> Result<Value, String> {
    let mut map = serde_json::Map::new();
    for p in pairs {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{p}`"))?;
        let val = if let Ok(i) = v.parse::<u64>() {
            Value::from(i)
        } else if let Ok(f) = v.parse::<f64>() {
            Value::from(f)
        } else {
            Value::from(v)
        };
        map.insert(k.trim().to_string(), val);
    }
    Ok(Value::Object(map))
}

pub fn pairs_to_params(pairs: &[String]) -> Result<BTreeMap<String, f64>, String> {
    pairs
        .iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{p}`"))?;
            let f = v
                .parse::<f64>()
                .map_err(|_| format!("weight parameter `{k}` is not a number: `{v}`"))?;
            Ok((k.trim().to_string(), f))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_top_level_field_is_rejected() {
        let e = serde_json::from_str::<RunConfig>(r#"{"sead": 1}"#).unwrap_err();
        assert!(e.to_string().contains("sead"));
    }

    #[test]
    fn pairs_keep_integers() {
        let v = pairs_to_object(&["points=20".into(), "xi=0.5".into(), "tmax=1e4".into()]).unwrap();
        assert_eq!(v["points"], Value::from(20u64));
        assert_eq!(v["tmax"], Value::from(1e4));
        let s: SubgeometricConfig =
            serde_json::from_value(pairs_to_object(&["xi=0.5".into(), "C=1".into(), "mu_phi=1".into()]).unwrap())
                .unwrap();
        assert_eq!(s.points, 200);
    }

    #[test]
    fn missing_field_is_named() {
        let v = pairs_to_object(&["alpha=0.5".into()]).unwrap();
        let e = serde_json::from_value::<DoeblinInput>(v).unwrap_err();
        assert!(e.to_string().contains("tau"), "{e}");
    }

    #[test]
    fn model_object_and_preset_resolve_alike() {
        let a = resolve_model(&Value::from("torus_bgk")).unwrap();
        let obj = serde_json::to_value(&a.spec).unwrap();
        let b = resolve_model(&obj).unwrap();
        assert_eq!(a.spec, b.spec);
        assert!(b.preset.is_none());
        assert!(resolve_model(&Value::from("nope")).is_err());
    }
}
