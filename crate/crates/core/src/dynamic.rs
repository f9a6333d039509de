//! Time-variant channel: Doppler rotation plus exponentially correlated
//! path gains on top of a frozen static geometry.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, SampledChannel, SynthesisPlan};
use crate::error::{Error, Result};
use crate::geometry::{PlanarArray, RayAngles};
use crate::pulse::PulseSpec;
use crate::rng::{ar1_continue, RngHandle};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilitySpec {
    /// Receiver speed along the horizontal axis, m/s.
    pub v_rx: f64,
    /// Transmitter speed along the horizontal axis, m/s.
    pub v_tx: f64,
    /// Lag-one correlation of the gain processes.
    pub rho: f64,
    /// Spacing of consecutive snapshots, s.
    pub snapshot_period: f64,
    pub n_snapshots: usize,
}

impl MobilitySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_rx >= 0.0) || !(self.v_tx >= 0.0) {
            return Err(Error::config("v_rx", "speeds must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::config("rho", format!("must lie in [0, 1], got {}", self.rho)));
        }
        if !(self.snapshot_period > 0.0) {
            return Err(Error::config("snapshot_period", "must be positive"));
        }
        if self.n_snapshots == 0 {
            return Err(Error::config("n_snapshots", "must be at least 1"));
        }
        Ok(())
    }
}

/// Doppler shift in Hz of a path with the given angles at carrier `f`.
pub fn doppler_shift(v_rx: f64, v_tx: f64, angles: &RayAngles, f: f64) -> f64 {
    -(f / SPEED_OF_LIGHT)
        * (v_rx * angles.aoa_elevation.cos() * angles.aoa_azimuth.cos()
            + v_tx * angles.aod_elevation.cos() * angles.aod_azimuth.cos())
}

/// AR(1) coefficient `exp(-2 pi nu_max T)` with `nu_max = f (v_rx + v_tx) / c`.
///
/// This map is a modelling choice, not a derived law. Override `rho` when a
/// different correlation is wanted.
pub fn default_rho(mob: &MobilitySpec, f: f64) -> f64 {
    let nu_max = f / SPEED_OF_LIGHT * (mob.v_rx + mob.v_tx);
    (-2.0 * std::f64::consts::PI * nu_max * mob.snapshot_period)
        .exp()
        .clamp(0.0, 1.0)
}

/// Snapshot sequence of one drop.
#[derive(Debug, Clone)]
pub struct TimeVariantChannel {
    /// Snapshot `k` is the channel at `t_k = k * snapshot_period`.
    pub snapshots: Vec<SampledChannel>,
    pub snapshot_period: f64,
    pub realization: ChannelRealization,
    /// Doppler shift per cluster ray, in the realization's ray order.
    pub dopplers: Vec<f64>,
    /// Doppler shift of the direct path, when present.
    pub los_doppler: Option<f64>,
}

fn rotate(gain: Complex64, doppler: f64, t: f64) -> Complex64 {
    let angle = -2.0 * std::f64::consts::PI * doppler * t;
    if angle == 0.0 {
        gain
    } else {
        gain * Complex64::from_polar(1.0, angle)
    }
}

/// Evolves a realization through `mob.n_snapshots` snapshots.
///
/// Each ray gain follows an AR(1) recursion started at its static value and
/// is rotated by its Doppler phase. The direct-path phase tracks the argument
/// of a unit-variance AR(1) process started at `exp(j eta)`, so its magnitude
/// stays one. Angles, delays and the retained tap window are those of the
/// static channel. `rng` should be an [`crate::rng::SubStream::Evolution`]
/// stream so the static draws are not disturbed.
pub fn evolve_channel(
    real: &ChannelRealization,
    rx: &PlanarArray,
    tx: &PlanarArray,
    spec: &PulseSpec,
    energy_threshold: f64,
    mob: &MobilitySpec,
    rng: &mut RngHandle,
) -> Result<TimeVariantChannel> {
    mob.validate()?;
    if !(energy_threshold > 0.0 && energy_threshold < 1.0) {
        return Err(Error::config("energy_threshold", "must lie in (0, 1)"));
    }
    let f = real.geometry.carrier_frequency;
    let plan = SynthesisPlan::new(real, rx, tx, spec)?;
    let static_gains = SynthesisPlan::static_gains(real);
    let first = plan.synthesize(&static_gains);
    let window = SynthesisPlan::energy_window(&first, energy_threshold);

    let n = mob.n_snapshots;
    let dopplers: Vec<f64> = real
        .rays()
        .map(|r| doppler_shift(mob.v_rx, mob.v_tx, &r.angles, f))
        .collect();
    let los_doppler = real
        .los
        .present
        .then(|| doppler_shift(mob.v_rx, mob.v_tx, &real.los.angles, f));

    let gain_tracks = real
        .rays()
        .map(|r| ar1_continue(r.gain, mob.rho, n, 1.0, rng))
        .collect::<Result<Vec<_>>>()?;
    let los_track = if real.los.present {
        let start = Complex64::from_polar(1.0, real.los.phase);
        Some((start, ar1_continue(start, mob.rho, n, 1.0, rng)?))
    } else {
        None
    };

    let mut snapshots = Vec::with_capacity(n);
    snapshots.push(plan.window(first, window));
    let mut gains = static_gains;
    for k in 1..n {
        let t = k as f64 * mob.snapshot_period;
        for (p, track) in gain_tracks.iter().enumerate() {
            gains[p] = rotate(track[k], dopplers[p], t);
        }
        if let (Some((start, track)), Some(nu)) = (&los_track, los_doppler) {
            let drift = (track[k] * start.conj()).arg();
            let phasor = Complex64::from_polar(1.0, real.los.phase + drift);
            *gains.last_mut().expect("direct path is the last term") = rotate(phasor, nu, t);
        }
        snapshots.push(plan.window(plan.synthesize(&gains), window));
    }

    Ok(TimeVariantChannel {
        snapshots,
        snapshot_period: mob.snapshot_period,
        realization: real.clone(),
        dopplers,
        los_doppler,
    })
}
