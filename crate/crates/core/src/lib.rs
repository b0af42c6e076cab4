//! Explicit convergence rates for Markov semigroups, kinetic process
//! simulators, and numerical checks of the drift and minorisation hypotheses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod bgk_interval;
pub mod cli;
pub mod experiments;
pub mod models;
pub mod numerics;
pub mod rate_calculus;
pub mod rng;
pub mod stats;
pub mod verification;

pub use error::{Error, Result};
