use harris_kinetics::bgk_interval::{maxwellian_quadrature_error, solve_steady, Grid1D};
use harris_kinetics::models::presets::preset;
use harris_kinetics::models::{weight_catalog, PotentialSpec, SigmaSpec};
use harris_kinetics::rate_calculus::{drift_to_discrete, harris_rate, DriftConstants, HarrisInput};
use harris_kinetics::verification::gcc::torus_grid;
use harris_kinetics::verification::{drift_verify, gcc_check, minorisation_estimate, DriftOptions, MinorisationOptions};
use harris_kinetics::Error;

fn strip() -> SigmaSpec {
    match preset("degenerate_strip").unwrap().model {
        harris_kinetics::models::ModelSpec::DegenerateBoltzmann { sigma, .. } => sigma,
        _ => unreachable!(),
    }
}

#[test]
fn gcc_is_grid_converged_on_the_strip() {
    let v: Vec<Vec<f64>> = [0.5, 1.0, 1.5, 2.0].iter().flat_map(|s| [vec![*s], vec![-*s]]).collect();
    let coarse = gcc_check(&strip(), &PotentialSpec::None, 2.0, &torus_grid(1, 64), &v).unwrap();
    let fine = gcc_check(&strip(), &PotentialSpec::None, 2.0, &torus_grid(1, 128), &v).unwrap();
    assert!(coarse.passed);
    assert!((coarse.kappa_hat - fine.kappa_hat).abs() < 1e-6);
}

#[test]
fn gcc_constant_sigma_with_potential_is_exact() {
    let sigma = SigmaSpec::Constant { value: 0.8 };
    let pot = PotentialSpec::Periodic { amplitude: 0.3 };
    let v = vec![vec![1.0], vec![-0.4]];
    let r = gcc_check(&sigma, &pot, 3.0, &torus_grid(1, 16), &v).unwrap();
    assert!((r.kappa_hat - 2.4).abs() < 1e-9, "{}", r.kappa_hat);
}

#[test]
fn certified_drift_feeds_harris_constants() {
    let p = preset("linear_bgk_r2").unwrap();
    let phi = weight_catalog(&p.model, "bgk_r2", &p.weight_params).unwrap();
    let opts = DriftOptions {
        zeta_target: Some(0.125),
        d_target: Some(0.75),
        ..Default::default()
    };
    let r = drift_verify(&p.model, &phi, &opts).unwrap();
    assert!(r.passed);
    let looser = drift_verify(&p.model, &phi, &DriftOptions { d_target: Some(3.0), ..opts }).unwrap();
    assert!(looser.passed && looser.margin >= r.margin);
    for tau in [0.5, 1.0, 4.0] {
        let dd = drift_to_discrete(DriftConstants { zeta: 0.125, d: 0.75, tau }).unwrap();
        let alpha = 0.3;
        let m = 1.01 + 2.0 * (1.0 - alpha) / (1.0 - dd.gamma);
        let big_r = m * 2.0 * dd.k / (1.0 - alpha);
        let input = HarrisInput {
            gamma: dd.gamma,
            k: dd.k,
            alpha,
            r: big_r,
            tau,
            alpha0: alpha / 2.0,
            gamma0: dd.gamma + 2.0 * dd.k / big_r,
        };
        match harris_rate(input) {
            Ok(b) => assert!(b.lambda().unwrap() > 0.0),
            Err(Error::ConstantsOutOfRange(_)) => {}
            Err(e) => panic!("tau {tau}: {e}"),
        }
    }
}

#[test]
fn minorisation_never_exceeds_the_raw_bound() {
    let p = preset("torus_bgk").unwrap();
    let phi = weight_catalog(&p.model, p.weight, &p.weight_params).unwrap();
    for bins in [2, 4] {
        let opts = MinorisationOptions {
            tau: 1.5,
            bins_per_axis: bins,
            n_paths: 4000,
            n_init: 4,
            ..Default::default()
        };
        let r = minorisation_estimate(&p.model, &phi, &opts).unwrap();
        assert!(r.alpha_hat <= r.alpha_raw && r.alpha_hat < 1.0);
        for ip in &r.per_initial_point {
            assert!(ip.alpha_lower <= ip.alpha_raw);
        }
    }
}

#[test]
fn steady_solution_balances_wall_fluxes_and_stays_positive() {
    let grid = Grid1D::new(32, 64, 4.0);
    let r = solve_steady(1.0, 4.0, 1.0, &grid, 1e-12, 200_000).unwrap();
    assert!(r.converged);
    assert!(r.min_f >= 0.0);
    for (inflow, outflow) in [r.wall_flux_0, r.wall_flux_1] {
        assert!((inflow - outflow).abs() < 1e-9, "{inflow} vs {outflow}");
    }
    assert!(r.u.iter().all(|u| u.abs() < 1e-8));
}

#[test]
fn velocity_quadrature_integrates_wall_maxwellians() {
    let grid = Grid1D::new(64, 128, 4.0);
    for t in [1.0, 4.0] {
        assert!(maxwellian_quadrature_error(&grid, t).abs() < 1e-10);
    }
}
