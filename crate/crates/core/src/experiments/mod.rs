//! Ensemble simulation, binned weighted distances between laws, decay fits
//! and comparison with theoretical envelopes.

pub mod compare;
pub mod ensemble;
pub mod fit;
pub mod output;
pub mod pipeline;
pub mod tv;

pub use compare::{compare_to_theory, Comparison, Verdict};
pub use ensemble::{
    initial_states, knudsen_reference, reference_ensemble, simulate_ensemble, simulate_ensemble_with,
    simulate_to, stationary_draw, EnsembleSnapshot, InitSpec, ReferenceKind,
};
pub use fit::{decay_fit, noise_window, DecayCurve, FitKind, FitRecord};
pub use output::{curve_csv, curve_svg};
pub use pipeline::{default_init, run_tv_decay, TimeGrid, TvDecayConfig, TvDecayOutput};
pub use tv::{weighted_tv, Binning, Projection, TvEstimate};
