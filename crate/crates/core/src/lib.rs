//! Digital twin of a gated tidal fjord with a safety-gated, learned sluice controller.
//!
//! * [`hydro`]: gate and stream flows and the fjord-level ODE.
//! * [`scenario`]: sea/wind series, synthetic tidal profiles and perturbed forecasts.
//! * [`envsim`]: ten-minute control periods, hard gating, boats and cost monitors.
//! * [`control`]: baseline controller and partition-tree strategies.
//! * [`learn`]: Q-learning with partition refinement and online replanning.
//! * [`experiment`]: configuration, evaluation tables and weight sweeps.

pub mod config;
pub mod control;
pub mod envsim;
pub mod error;
pub mod experiment;
pub mod hydro;
pub mod kv;
pub mod learn;
pub mod scenario;

pub use error::{Error, Result};

/// Derives an independent seed for stream `stream` of a base seed (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
