//! Subcommand bodies shared by the `mmwchan` binary and the tests.
//!
//! Every function computes its full result first and only then writes files,
//! from the calling thread. Parallel trials therefore never touch the
//! filesystem.

use std::path::{Path, PathBuf};

use crate::channel::generate_static;
use crate::config::ScenarioConfig;
use crate::dynamic::evolve_channel;
use crate::error::Result;
use crate::io::{self, ChannelMetadata, TrialLog};
use crate::link::run_cdf_experiment;
use crate::rng::{RngHandle, SubStream};

/// Paths written by one subcommand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Tap tensor `<prefix>.mmwc` and sidecar `<prefix>.json` for drop `trial`.
pub fn generate_static_files(config: &ScenarioConfig, trial: u64, prefix: &Path) -> Result<Outputs> {
    config.validate()?;
    let mut rng = RngHandle::for_trial(config.seed, trial, SubStream::Realization);
    let stream_id = rng.stream_id();
    let (real, ch) = generate_static(config, &mut rng)?;
    let meta = ChannelMetadata {
        seed: config.seed,
        stream_id,
        n_r: ch.n_r(),
        n_t: ch.n_t(),
        gamma: real.gamma(ch.n_r(), ch.n_t()),
        sample_period: ch.sample_period,
        tap_offset: ch.tap_offset,
        taps: ch.len(),
        dopplers: None,
        los_doppler: None,
        rho: None,
        config: config.clone(),
        realization: real,
    };
    let tensor = with_suffix(prefix, ".mmwc");
    let json = with_suffix(prefix, ".json");
    io::save_tap_tensor(&tensor, &ch)?;
    io::save_json(&json, &meta)?;
    Ok(Outputs {
        files: vec![tensor, json],
    })
}

/// Snapshot sequence `<prefix>.mmwc` and sidecar `<prefix>.json`.
///
/// The drop is the one `generate_static_files` produces for the same trial;
/// the evolution draws come from that trial's evolution substream.
pub fn generate_dynamic_files(config: &ScenarioConfig, trial: u64, prefix: &Path) -> Result<Outputs> {
    config.validate()?;
    let mut rng = RngHandle::for_trial(config.seed, trial, SubStream::Realization);
    let stream_id = rng.stream_id();
    let (real, ch) = generate_static(config, &mut rng)?;
    let mut evo = RngHandle::for_trial(config.seed, trial, SubStream::Evolution);
    let mob = config.mobility();
    let tv = evolve_channel(
        &real,
        &config.rx_array(),
        &config.tx_array(),
        &config.pulse(),
        config.energy_threshold,
        &mob,
        &mut evo,
    )?;
    let meta = ChannelMetadata {
        seed: config.seed,
        stream_id,
        n_r: ch.n_r(),
        n_t: ch.n_t(),
        gamma: real.gamma(ch.n_r(), ch.n_t()),
        sample_period: ch.sample_period,
        tap_offset: ch.tap_offset,
        taps: ch.len(),
        dopplers: Some(tv.dopplers.clone()),
        los_doppler: tv.los_doppler,
        rho: Some(mob.rho),
        config: config.clone(),
        realization: real,
    };
    let tensor = with_suffix(prefix, ".mmwc");
    let json = with_suffix(prefix, ".json");
    io::save_snapshot_sequence(&tensor, &tv.snapshots, tv.snapshot_period)?;
    io::save_json(&json, &meta)?;
    Ok(Outputs {
        files: vec![tensor, json],
    })
}

/// CDF `<prefix>.csv` and per-trial log `<prefix>.trials.json`.
pub fn eval_cdf_files(config: &ScenarioConfig, prefix: &Path) -> Result<Outputs> {
    let cdf = run_cdf_experiment(config)?;
    let csv = with_suffix(prefix, ".csv");
    let log = with_suffix(prefix, ".trials.json");
    io::save_cdf_csv(&csv, &cdf)?;
    io::save_json(
        &log,
        &TrialLog {
            config: config.clone(),
            trials: cdf.trials,
        },
    )?;
    Ok(Outputs {
        files: vec![csv, log],
    })
}
