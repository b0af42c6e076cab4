use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{bracket, norm2};

/// Confining or periodic potential `Φ(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialSpec {
    #[default]
    None,
    /// `Φ(x) = k|x|²/2`.
    Quadratic {
        #[serde(default = "one")]
        k: f64,
    },
    /// `Φ(x) = ⟨x⟩^γ/γ`.
    Power { gamma_exp: f64 },
    /// `Φ(x) = A Σᵢ cos(2π xᵢ)`, for toroidal domains.
    Periodic { amplitude: f64 },
}

fn one() -> f64 {
    1.0
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::None => Ok(()),
            PotentialSpec::Quadratic { k } if *k > 0.0 && k.is_finite() => Ok(()),
            PotentialSpec::Quadratic { k } => invalid(format!("potential.k must be > 0 (got {k})")),
            PotentialSpec::Power { gamma_exp } if *gamma_exp > 0.0 && gamma_exp.is_finite() => {
                Ok(())
            }
            PotentialSpec::Power { gamma_exp } => invalid(format!(
                "potential.gamma_exp must be > 0 (got {gamma_exp})"
            )),
            PotentialSpec::Periodic { amplitude } if amplitude.is_finite() => Ok(()),
            PotentialSpec::Periodic { .. } => invalid("potential.amplitude must be finite"),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, PotentialSpec::None)
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, PotentialSpec::Periodic { .. } | PotentialSpec::None)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            PotentialSpec::None => 0.0,
            PotentialSpec::Quadratic { k } => 0.5 * k * norm2(x),
            PotentialSpec::Power { gamma_exp } => bracket(x).powf(*gamma_exp) / gamma_exp,
            PotentialSpec::Periodic { amplitude } => {
                amplitude * x.iter().map(|xi| (2.0 * PI * xi).cos()).sum::<f64>()
            }
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            PotentialSpec::None => vec![0.0; x.len()],
            PotentialSpec::Quadratic { k } => x.iter().map(|xi| k * xi).collect(),
            PotentialSpec::Power { gamma_exp } => {
                let s = bracket(x).powf(gamma_exp - 2.0);
                x.iter().map(|xi| s * xi).collect()
            }
            PotentialSpec::Periodic { amplitude } => x
                .iter()
                .map(|xi| -2.0 * PI * amplitude * (2.0 * PI * xi).sin())
                .collect(),
        }
    }

    /// Hessian as a dense row-major `d × d` matrix.
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut h = vec![0.0; d * d];
        match self {
            PotentialSpec::None => {}
            PotentialSpec::Quadratic { k } => {
                for i in 0..d {
                    h[i * d + i] = *k;
                }
            }
            PotentialSpec::Power { gamma_exp } => {
                let b = bracket(x);
                let a = b.powf(gamma_exp - 2.0);
                let c = (gamma_exp - 2.0) * b.powf(gamma_exp - 4.0);
                for i in 0..d {
                    for j in 0..d {
                        h[i * d + j] = c * x[i] * x[j] + if i == j { a } else { 0.0 };
                    }
                }
            }
            PotentialSpec::Periodic { amplitude } => {
                for i in 0..d {
                    h[i * d + i] = -4.0 * PI * PI * amplitude * (2.0 * PI * x[i]).cos();
                }
            }
        }
        h
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let h = self.hessian(x);
        (0..d).map(|i| h[i * d + i]).sum()
    }

    /// Lower bound of `Φ` over its domain in dimension `d`.
    pub fn infimum(&self, d: usize) -> f64 {
        match self {
            PotentialSpec::None | PotentialSpec::Quadratic { .. } => 0.0,
            PotentialSpec::Power { gamma_exp } => 1.0 / gamma_exp,
            PotentialSpec::Periodic { amplitude } => -(d as f64) * amplitude.abs(),
        }
    }

    /// `sup |∇Φ|` when finite.
    pub fn grad_sup(&self, d: usize) -> Option<f64> {
        match self {
            PotentialSpec::None => Some(0.0),
            PotentialSpec::Periodic { amplitude } => {
                Some(2.0 * PI * amplitude.abs() * (d as f64).sqrt())
            }
            PotentialSpec::Power { gamma_exp } if *gamma_exp <= 1.0 => Some(1.0),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad(p: &PotentialSpec, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[i] += h;
                b[i] -= h;
                (p.value(&a) - p.value(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let x = [0.3, -1.2, 0.7];
        for p in [
            PotentialSpec::Quadratic { k: 2.0 },
            PotentialSpec::Power { gamma_exp: 1.5 },
            PotentialSpec::Power { gamma_exp: 3.0 },
            PotentialSpec::Periodic { amplitude: 0.4 },
        ] {
            let g = p.grad(&x);
            let f = fd_grad(&p, &x);
            for (a, b) in g.iter().zip(&f) {
                assert!((a - b).abs() < 1e-7, "{p:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let x = [0.3, -1.2];
        let p = PotentialSpec::Power { gamma_exp: 1.5 };
        let h = p.hessian(&x);
        let e = 1e-6;
        for j in 0..2 {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[j] += e;
            b[j] -= e;
            let ga = p.grad(&a);
            let gb = p.grad(&b);
            for i in 0..2 {
                let fd = (ga[i] - gb[i]) / (2.0 * e);
                assert!((h[i * 2 + j] - fd).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn infimum_is_a_lower_bound() {
        let p = PotentialSpec::Power { gamma_exp: 2.0 };
        assert_eq!(p.value(&[0.0, 0.0]), p.infimum(2));
        let q = PotentialSpec::Periodic { amplitude: 0.5 };
        assert!((q.value(&[0.5, 0.5]) - q.infimum(2)).abs() < 1e-15);
    }
}
