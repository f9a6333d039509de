//! Clustered statistical MIMO channel simulator for millimetre-wave links.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`channel::realize_channel`] draws clusters, rays, angles, distances,
//!    path loss and a line-of-sight indicator for one drop.
//! 2. [`channel::sample_channel`] turns the drop into a finite sequence of
//!    `N_R x N_T` tap matrices on the symbol grid.
//! 3. [`dynamic::evolve_channel`] optionally adds Doppler and correlated
//!    gain fading to produce a snapshot sequence.
//! 4. [`link::evaluate_trial`] designs SVD beamformers on the strongest tap,
//!    applies a stacked-window LMMSE equalizer and reports the achievable
//!    rate.
//!
//! ```
//! use mmwchan::{config::ScenarioConfig, link::evaluate_trial};
//!
//! let mut cfg = ScenarioConfig::default();
//! cfg.rx_y = 2;
//! cfg.rx_z = 2;
//! cfg.tx_y = 2;
//! cfg.tx_z = 2;
//! cfg.streams = 2;
//! let result = evaluate_trial(&cfg, 0).unwrap();
//! assert!(result.spectral_efficiency >= 0.0);
//! ```

// Validation writes `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod dynamic;
pub mod error;
pub mod geometry;
pub mod io;
pub mod link;
pub mod propagation;
pub mod pulse;
pub mod rng;
pub mod run;
pub mod toeplitz;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Rays per cluster are drawn uniformly from `1..=MAX_RAYS_PER_CLUSTER`.
pub const MAX_RAYS_PER_CLUSTER: usize = 30;

// Compile and run every listing of the guide as part of `cargo test`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/drops.md")]
    mod drops {}
    #[doc = include_str!("../../../book/src/arrays.md")]
    mod arrays {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/mobility.md")]
    mod mobility {}
    #[doc = include_str!("../../../book/src/link.md")]
    mod link {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
