//! Scenario configuration.
//!
//! Configuration files are flat `key = value` text (TOML syntax, no tables).
//! Every key is optional; omitted keys take the defaults below, which
//! describe a 73 GHz UMi street-canyon link of 30 m between a transmitter at
//! 7 m and a receiver at 1 m.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `scenario` | `"UMi-StreetCanyon"` | `UMi-StreetCanyon`, `UMi-OpenSquare`, `InH-Office`, `InH-ShoppingMall` |
//! | `carrier_frequency` | `73e9` | Hz |
//! | `d` | `30` | horizontal link length, m |
//! | `h_t`, `h_r` | `7`, `1` | antenna heights, m |
//! | `rx_y`, `rx_z` | `5`, `4` | receive planar array (horizontal x vertical) |
//! | `tx_y`, `tx_z` | `6`, `5` | transmit planar array |
//! | `spacing` | `0.5` | element spacing, wavelengths |
//! | `rx_rotation` | `0` | receiver azimuth rotation, rad |
//! | `cluster_rate` | `1.9` | Poisson rate of the cluster count |
//! | `angle_spread_deg` | `5` | per-ray angular standard deviation, degrees |
//! | `max_distance_factor` | `1.75` | cluster distance upper bound as a multiple of `d` |
//! | `scattered_rows` | `"nlos"` | `nlos` or `follow-los`: path-loss row used by cluster paths |
//! | `shadowing` | `"per-path"` | `per-path` or `per-cluster` shadow-fading draws |
//! | `rolloff` | `0.22` | raised-cosine rolloff |
//! | `bandwidth` | `500e6` | occupied bandwidth, Hz; sets the symbol period `(1 + rolloff) / bandwidth` |
//! | `symbol_period` | unset | s; overrides the bandwidth-derived symbol period |
//! | `samples_per_symbol` | `1` | channel oversampling factor |
//! | `pulse_truncation` | `8` | pulse half-length, symbols |
//! | `energy_threshold` | `1e-4` | fraction of tap energy allowed outside the retained taps |
//! | `v_rx`, `v_tx` | `0`, `0` | horizontal speeds, m/s |
//! | `rho` | unset | AR(1) coefficient; derived from speeds when unset |
//! | `snapshot_period` | unset | s; defaults to the channel sample period |
//! | `n_snapshots` | `16` | snapshots of a time-variant channel |
//! | `streams` | `4` | multiplexing order |
//! | `tx_power_dbw` | `0` | transmit power, dBW |
//! | `noise_variance` | unset | W; overrides the thermal-noise value |
//! | `noise_figure_db` | `5` | receiver noise figure, dB |
//! | `noise_temperature` | `290` | K |
//! | `n_trials` | `500` | Monte Carlo drops for `eval-cdf` |
//! | `se_normalization` | `"excess-bandwidth"` | `excess-bandwidth` divides the rate by `1 + rolloff`; `none` keeps it |
//! | `seed` | `1` | master seed (must fit in 63 bits when written to a file) |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamic::MobilitySpec;
use crate::error::{Error, Result};
use crate::geometry::{LinkGeometry, PlanarArray};
use crate::propagation::Scenario;
use crate::pulse::PulseSpec;

const BOLTZMANN: f64 = 1.380_649e-23;

/// Path-loss row applied to cluster (non-direct) paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScatteredRows {
    /// NLOS row for every cluster path.
    Nlos,
    /// LOS row when the drop has a direct path, NLOS otherwise.
    FollowLos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShadowingMode {
    PerPath,
    PerCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeNormalization {
    ExcessBandwidth,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub carrier_frequency: f64,
    pub d: f64,
    pub h_t: f64,
    pub h_r: f64,
    pub rx_y: usize,
    pub rx_z: usize,
    pub tx_y: usize,
    pub tx_z: usize,
    pub spacing: f64,
    pub rx_rotation: f64,
    pub cluster_rate: f64,
    pub angle_spread_deg: f64,
    pub max_distance_factor: f64,
    pub scattered_rows: ScatteredRows,
    pub shadowing: ShadowingMode,
    pub rolloff: f64,
    pub bandwidth: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol_period: Option<f64>,
    pub samples_per_symbol: u32,
    pub pulse_truncation: u32,
    pub energy_threshold: f64,
    pub v_rx: f64,
    pub v_tx: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_period: Option<f64>,
    pub n_snapshots: u32,
    pub streams: usize,
    pub tx_power_dbw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
    pub noise_figure_db: f64,
    pub noise_temperature: f64,
    pub n_trials: u32,
    pub se_normalization: SeNormalization,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::UmiStreetCanyon,
            carrier_frequency: 73e9,
            d: 30.0,
            h_t: 7.0,
            h_r: 1.0,
            rx_y: 5,
            rx_z: 4,
            tx_y: 6,
            tx_z: 5,
            spacing: 0.5,
            rx_rotation: 0.0,
            cluster_rate: 1.9,
            angle_spread_deg: 5.0,
            max_distance_factor: 1.75,
            scattered_rows: ScatteredRows::Nlos,
            shadowing: ShadowingMode::PerPath,
            rolloff: 0.22,
            bandwidth: 500e6,
            symbol_period: None,
            samples_per_symbol: 1,
            pulse_truncation: 8,
            energy_threshold: 1e-4,
            v_rx: 0.0,
            v_tx: 0.0,
            rho: None,
            snapshot_period: None,
            n_snapshots: 16,
            streams: 4,
            tx_power_dbw: 0.0,
            noise_variance: None,
            noise_figure_db: 5.0,
            noise_temperature: 290.0,
            n_trials: 500,
            se_normalization: SeNormalization::ExcessBandwidth,
            seed: 1,
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be non-negative, got {v}")))
    }
}

fn at_least_one(key: &str, v: u64) -> Result<()> {
    if v >= 1 {
        Ok(())
    } else {
        Err(Error::config(key, "must be at least 1"))
    }
}

impl ScenarioConfig {
    /// Parses flat key-value text and validates the result.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::with_overrides::<&str>(text, &[])
    }

    /// Parses `text`, then applies `key=value` overrides in order.
    ///
    /// Override values use TOML syntax; anything that does not parse as a
    /// TOML value is taken as a bare string, so `scenario=InH-Office` works.
    pub fn with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::ConfigSyntax(e.to_string()))?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item.split_once('=').ok_or_else(|| {
                Error::ConfigSyntax(format!("override `{item}` is not of the form key=value"))
            })?;
            let key = key.trim();
            let raw = raw.trim();
            let value = format!("v = {raw}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            table.insert(key.to_string(), value);
        }
        for (key, value) in &table {
            if value.is_table() || value.is_array() {
                return Err(Error::config(key.clone(), "nested values are not supported"));
            }
        }
        let config: ScenarioConfig = table.try_into().map_err(|e: toml::de::Error| {
            Error::ConfigSyntax(e.message().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Writes every key, including defaulted ones.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        positive("carrier_frequency", self.carrier_frequency)?;
        positive("d", self.d)?;
        positive("h_t", self.h_t)?;
        positive("h_r", self.h_r)?;
        for (key, v) in [
            ("rx_y", self.rx_y),
            ("rx_z", self.rx_z),
            ("tx_y", self.tx_y),
            ("tx_z", self.tx_z),
        ] {
            at_least_one(key, v as u64)?;
        }
        positive("spacing", self.spacing)?;
        if !self.rx_rotation.is_finite() {
            return Err(Error::config("rx_rotation", "must be finite"));
        }
        positive("cluster_rate", self.cluster_rate)?;
        positive("angle_spread_deg", self.angle_spread_deg)?;
        positive("max_distance_factor", self.max_distance_factor)?;
        positive("bandwidth", self.bandwidth)?;
        if let Some(ts) = self.symbol_period {
            positive("symbol_period", ts)?;
        }
        if !(self.energy_threshold > 0.0 && self.energy_threshold < 1.0) {
            return Err(Error::config(
                "energy_threshold",
                format!("must lie in (0, 1), got {}", self.energy_threshold),
            ));
        }
        self.pulse().validate()?;
        non_negative("v_rx", self.v_rx)?;
        non_negative("v_tx", self.v_tx)?;
        if let Some(rho) = self.rho {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::config("rho", format!("must lie in [0, 1], got {rho}")));
            }
        }
        if let Some(p) = self.snapshot_period {
            positive("snapshot_period", p)?;
        }
        at_least_one("n_snapshots", self.n_snapshots as u64)?;
        let max_streams = (self.rx_y * self.rx_z).min(self.tx_y * self.tx_z);
        if self.streams == 0 || self.streams > max_streams {
            return Err(Error::config(
                "streams",
                format!("must lie in [1, {max_streams}], got {}", self.streams),
            ));
        }
        if !self.tx_power_dbw.is_finite() {
            return Err(Error::config("tx_power_dbw", "must be finite"));
        }
        if let Some(n) = self.noise_variance {
            positive("noise_variance", n)?;
        }
        if !self.noise_figure_db.is_finite() {
            return Err(Error::config("noise_figure_db", "must be finite"));
        }
        positive("noise_temperature", self.noise_temperature)?;
        at_least_one("n_trials", self.n_trials as u64)?;
        Ok(())
    }

    pub fn link_geometry(&self) -> Result<LinkGeometry> {
        LinkGeometry::new(self.d, self.h_t, self.h_r, self.carrier_frequency)
    }

    pub fn rx_array(&self) -> PlanarArray {
        PlanarArray {
            y_count: self.rx_y,
            z_count: self.rx_z,
            spacing_wavelengths: self.spacing,
        }
    }

    pub fn tx_array(&self) -> PlanarArray {
        PlanarArray {
            y_count: self.tx_y,
            z_count: self.tx_z,
            spacing_wavelengths: self.spacing,
        }
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
            .unwrap_or((1.0 + self.rolloff) / self.bandwidth)
    }

    pub fn pulse(&self) -> PulseSpec {
        PulseSpec {
            rolloff: self.rolloff,
            symbol_period: self.symbol_period(),
            truncation_half_length: self.pulse_truncation,
            samples_per_symbol: self.samples_per_symbol,
        }
    }

    pub fn tx_power_watts(&self) -> f64 {
        10f64.powf(self.tx_power_dbw / 10.0)
    }

    /// Thermal noise `k T W F` unless overridden.
    pub fn noise_variance_watts(&self) -> f64 {
        self.noise_variance.unwrap_or_else(|| {
            BOLTZMANN
                * self.noise_temperature
                * self.bandwidth
                * 10f64.powf(self.noise_figure_db / 10.0)
        })
    }

    /// Divisor turning the per-channel-use rate into bits/s/Hz.
    pub fn se_divisor(&self) -> f64 {
        match self.se_normalization {
            SeNormalization::ExcessBandwidth => 1.0 + self.rolloff,
            SeNormalization::None => 1.0,
        }
    }

    /// Mobility parameters; `rho` falls back to [`crate::dynamic::default_rho`].
    pub fn mobility(&self) -> MobilitySpec {
        let snapshot_period = self
            .snapshot_period
            .unwrap_or_else(|| self.pulse().sample_period());
        let mut mob = MobilitySpec {
            v_rx: self.v_rx,
            v_tx: self.v_tx,
            rho: 1.0,
            snapshot_period,
            n_snapshots: self.n_snapshots as usize,
        };
        mob.rho = self
            .rho
            .unwrap_or_else(|| crate::dynamic::default_rho(&mob, self.carrier_frequency));
        mob
    }
}
