//! Secret-key rates of memory-assisted MDI-QKD, plain MDI-QKD and BB84 over
//! lossy fibre, with Monte Carlo oracles for the closed forms.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bb84;
pub mod bessel;
pub mod bsm;
pub mod engine;
pub mod error;
pub mod loading;
pub mod mdi;
pub mod misalignment;
pub mod params;
pub mod protocol_mc;
pub mod rates;
pub mod stats;
pub mod config;
pub mod presets;
pub mod sweep;
#[cfg(feature = "cli")]
pub mod cli;
pub mod output;
