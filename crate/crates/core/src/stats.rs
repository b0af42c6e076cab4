//! Goodness-of-fit tests, binomial confidence bounds and regression.

use statrs::distribution::{Beta, ChiSquared, ContinuousCDF, StudentsT};

/// Result of a hypothesis test.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// Asymptotic Kolmogorov survival function `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> TestResult {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    TestResult {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
    }
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na as f64 * nb as f64) / (na + nb) as f64;
    let sn = ne.sqrt();
    TestResult {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
    }
}

/// Pearson χ² goodness-of-fit test of observed counts against expected counts.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> TestResult {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = (observed.len() - 1) as f64;
    let dist = ChiSquared::new(dof).expect("positive degrees of freedom");
    TestResult {
        statistic: stat,
        p_value: 1.0 - dist.cdf(stat),
    }
}

/// One-sided Clopper–Pearson lower bound for a binomial proportion.
pub fn clopper_pearson_lower(successes: u64, trials: u64, confidence: f64) -> f64 {
    if successes == 0 || trials == 0 {
        return 0.0;
    }
    let a = successes as f64;
    let b = (trials - successes) as f64 + 1.0;
    let dist = Beta::new(a, b).expect("valid beta parameters");
    dist.inverse_cdf(1.0 - confidence)
}

/// Two-sided Student-t quantile at `1 - (1-level)/2`.
pub fn t_quantile(level: f64, dof: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
    dist.inverse_cdf(0.5 + 0.5 * level)
}

/// Ordinary least squares of `y` on `x`.
#[derive(Clone, Copy, Debug)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
    /// Half-width of the 95% confidence interval of the slope.
    pub slope_half_width: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let rms_residual = (ssr / n).sqrt();
    let slope_half_width = if x.len() > 2 {
        let se = (ssr / (n - 2.0) / sxx).sqrt();
        t_quantile(0.95, n - 2.0) * se
    } else {
        f64::INFINITY
    };
    LinearFit {
        slope,
        intercept,
        rms_residual,
        slope_half_width,
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn kolmogorov_known_quantile() {
        // 1% critical value of the Kolmogorov distribution is 1.6276
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn ks_accepts_normal_rejects_shift() {
        let mut r = RngStream::new(11, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| r.sample(StandardNormal)).collect();
        assert!(ks_one_sample(&xs, normal_cdf).passes(0.01));
        assert!(!ks_one_sample(&xs, |x| normal_cdf(x - 0.1)).passes(0.01));
        let ys: Vec<f64> = (0..20_000).map(|_| r.sample(StandardNormal)).collect();
        assert!(ks_two_sample(&xs, &ys).passes(0.01));
        let zs: Vec<f64> = ys.iter().map(|y| y * 1.1).collect();
        assert!(!ks_two_sample(&xs, &zs).passes(0.01));
    }

    #[test]
    fn clopper_pearson_brackets() {
        let lo = clopper_pearson_lower(50, 100, 0.99);
        assert!(lo < 0.5 && lo > 0.35, "{lo}");
        assert_eq!(clopper_pearson_lower(0, 100, 0.99), 0.0);
        // k = n: lower bound is (1-conf)^{1/n}
        let lo = clopper_pearson_lower(10, 10, 0.99);
        assert!((lo - 0.01f64.powf(0.1)).abs() < 1e-9);
    }

    #[test]
    fn linear_fit_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 2.0 - 0.5 * t).collect();
        let f = linear_fit(&x, &y);
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!(f.rms_residual < 1e-14);
    }

    #[test]
    fn chi_square_uniform() {
        let mut r = RngStream::new(3, 0);
        let mut c = vec![0u64; 16];
        for _ in 0..16_000 {
            c[r.random_range(0..16)] += 1;
        }
        assert!(chi_square_gof(&c, &[1000.0; 16]).passes(0.001));
    }
}
