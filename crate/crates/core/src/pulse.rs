//! End-to-end transmit/receive pulse.
//!
//! Square-root raised-cosine filters at both ends combine into a raised
//! cosine, evaluated here in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub rolloff: f64,
    /// Symbol period in seconds.
    pub symbol_period: f64,
    /// The pulse is set to zero beyond this many symbol periods from its peak.
    pub truncation_half_length: u32,
    /// Channel samples per symbol period.
    pub samples_per_symbol: u32,
}

impl PulseSpec {
    pub fn new(rolloff: f64, symbol_period: f64) -> Result<Self> {
        let spec = Self {
            rolloff,
            symbol_period,
            truncation_half_length: 8,
            samples_per_symbol: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(Error::config(
                "rolloff",
                format!("must lie in (0, 1], got {}", self.rolloff),
            ));
        }
        if !(self.symbol_period > 0.0) || !self.symbol_period.is_finite() {
            return Err(Error::config(
                "symbol_period",
                format!("must be positive, got {}", self.symbol_period),
            ));
        }
        if self.truncation_half_length == 0 {
            return Err(Error::config("pulse_truncation", "must be at least 1"));
        }
        if self.samples_per_symbol == 0 {
            return Err(Error::config("samples_per_symbol", "must be at least 1"));
        }
        Ok(())
    }

    /// Channel sampling period.
    pub fn sample_period(&self) -> f64 {
        self.symbol_period / self.samples_per_symbol as f64
    }

    /// Half-width of the pulse support, in seconds.
    pub fn support(&self) -> f64 {
        self.truncation_half_length as f64 * self.symbol_period
    }
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Raised-cosine pulse value at time `t`, peak-normalized to `h(0) = 1`.
pub fn end_to_end_pulse(spec: &PulseSpec, t: f64) -> f64 {
    let t = t.abs();
    if t > spec.support() {
        return 0.0;
    }
    let u = t / spec.symbol_period;
    let x = spec.rolloff * u;
    // cos(pi x) / (1 - 4x^2) rewritten around x = 1/2, where both vanish.
    let shaping = std::f64::consts::FRAC_PI_2 * sinc(0.5 - x) / (1.0 + 2.0 * x);
    sinc(u) * shaping
}
