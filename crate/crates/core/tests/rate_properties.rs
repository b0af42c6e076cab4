use proptest::prelude::*;

use harris_kinetics::rate_calculus::{
    degenerate_boltzmann_rate, doeblin_rate, drift_to_discrete, harris_rate, hv, hv_inverse, subgeometric_envelope,
    ConcaveRateFn, DoeblinInput, DriftConstants, HarrisInput,
};

fn doeblin(alpha: f64, tau: f64) -> (f64, f64) {
    let b = doeblin_rate(DoeblinInput { alpha, tau }).unwrap();
    (b.c(), b.lambda().unwrap())
}

proptest! {
    #[test]
    fn doeblin_identities(alpha in 1e-12f64..1.0 - 1e-12, tau in 1e-3f64..1e3) {
        let (c, l) = doeblin(alpha, tau);
        prop_assert!((c * (1.0 - alpha) - 1.0).abs() <= f64::EPSILON);
        let target = -(-alpha).ln_1p();
        prop_assert!((l * tau - target).abs() <= 4.0 * f64::EPSILON * target);
    }

    #[test]
    fn doeblin_lambda_monotone(alpha in 1e-6f64..0.99, da in 1e-6f64..0.009, tau in 1e-2f64..1e2, f in 1.001f64..10.0) {
        let (_, l1) = doeblin(alpha, tau);
        let (_, l2) = doeblin(alpha + da, tau);
        let (_, l3) = doeblin(alpha, tau * f);
        prop_assert!(l2 > l1);
        prop_assert!(l3 < l1);
    }

    #[test]
    fn discrete_drift_bounds(zeta in 1e-6f64..1e2, d in 0.0f64..1e3, tau in 1e-4f64..1e2) {
        let r = drift_to_discrete(DriftConstants { zeta, d, tau }).unwrap();
        prop_assert!(r.gamma >= 0.0 && r.gamma < 1.0);
        if zeta * tau < 700.0 {
            prop_assert!(r.gamma > 0.0);
        }
        prop_assert!(r.k <= r.k_loose);
        prop_assert!(r.k >= 0.0);
    }

    #[test]
    fn discrete_drift_long_time_limit(zeta in 1e-3f64..10.0, d in 0.0f64..10.0) {
        let r = drift_to_discrete(DriftConstants { zeta, d, tau: 1e4 / zeta }).unwrap();
        prop_assert_eq!(r.gamma, 0.0);
        prop_assert_eq!(r.k, d / zeta);
    }

    #[test]
    fn geometric_envelope_strictly_decreasing(alpha in 1e-3f64..0.999, tau in 0.1f64..10.0, t in 0.0f64..50.0, dt in 1e-3f64..5.0) {
        let b = doeblin_rate(DoeblinInput { alpha, tau }).unwrap();
        prop_assert!(b.eval(t + dt) < b.eval(t));
    }

    #[test]
    fn subgeometric_envelope_non_increasing(xi in 0.05f64..0.95, c in 0.1f64..10.0, mu in 1.0f64..100.0, t in 0.0f64..1e5, f in 1.0f64..4.0) {
        let b = subgeometric_envelope(ConcaveRateFn::power(xi).unwrap(), c, mu).unwrap();
        let (a, z) = (b.eval(t), b.eval(t * f + 1e-3));
        prop_assert!(z <= a * (1.0 + 1e-9), "{z} > {a}");
    }

    #[test]
    fn hv_round_trip_and_lower_bound(xi in 0.05f64..0.95, log_t in 0.0f64..(1e6f64).ln()) {
        let v = ConcaveRateFn::power(xi).unwrap();
        let t = log_t.exp();
        let h = hv(&v, t).unwrap();
        let back = hv_inverse(&v, h).unwrap();
        prop_assert!((back - t).abs() <= 1e-7 * t, "{back} vs {t}");
        prop_assert!(h >= (t - 1.0) / v.eval(t) - 1e-9);
        prop_assert!(hv(&v, t * 1.01 + 1e-3).unwrap() > h);
    }

    #[test]
    fn degenerate_matches_doeblin_at_effective_alpha(beta in 1e-3f64..0.999, kappa in 0.01f64..1.0, tau in 0.01f64..5.0, s in 0.0f64..3.0) {
        let b = degenerate_boltzmann_rate(beta, kappa, tau, s).unwrap();
        let a = beta * kappa * kappa * (-tau * s).exp();
        let (c, l) = doeblin(a, tau);
        prop_assert_eq!(b.c(), c);
        prop_assert_eq!(b.lambda().unwrap(), l);
    }

    #[test]
    fn harris_rejects_or_stays_in_range(gamma in 0.01f64..0.9, k in 0.01f64..5.0, alpha in 0.05f64..0.9, fa in 0.05f64..0.95, fr in 1.01f64..10.0, fg in 0.0f64..1.0) {
        let r = fr * 2.0 * k / (1.0 - alpha);
        let g0_min = gamma + 2.0 * k / r;
        prop_assume!(g0_min < 1.0);
        let input = HarrisInput { gamma, k, alpha, r, tau: 1.0, alpha0: fa * alpha, gamma0: g0_min + fg * (1.0 - g0_min) * 0.999 };
        if let Ok(b) = harris_rate(input) {
            let l = b.lambda().unwrap();
            prop_assert!(l > 0.0 && l.is_finite());
            prop_assert!(b.c() > 0.0 && b.c() < 1.0);
        }
    }
}
