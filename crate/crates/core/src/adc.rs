//! ADC front end: ESD clipping to the input rails, ideal sampling,
//! quantization and window averaging.
//!
//! A zero-mean RF disturbance riding on a sensor voltage averages to zero
//! only while no sample clips. Once a rail is touched the clipped samples
//! bias the average toward the opposite rail, which is how an induced
//! sinusoid becomes a DC offset in the reported reading.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling::InducedWaveform;
use crate::quad::adaptive_simpson;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdcError {
    #[error("invalid ADC {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: &'static str },
    #[error("averaging window ends at {end} s, past the simulation horizon {horizon} s")]
    WindowPastHorizon { end: f64, horizon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdcConfig {
    #[serde(default)]
    pub v_min: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default = "default_bits")]
    pub bits: u32,
    pub sample_rate: f64,
    #[serde(default = "default_window")]
    pub averaging_window: u32,
    /// Physical units per volt at the ADC pin. Negative for inverting front ends.
    #[serde(default = "default_gain")]
    pub sensor_gain: f64,
    /// Physical value that maps to 0 V at the ADC pin.
    #[serde(default)]
    pub sensor_offset: f64,
    /// Fixed delay of the first sample after the window start (s).
    #[serde(default)]
    pub phase_offset: f64,
}

fn default_v_max() -> f64 {
    3.3
}
fn default_bits() -> u32 {
    12
}
fn default_window() -> u32 {
    1
}
fn default_gain() -> f64 {
    1.0
}

impl Default for AdcConfig {
    fn default() -> Self {
        Self {
            v_min: 0.0,
            v_max: 3.3,
            bits: 12,
            sample_rate: 1.0e6,
            averaging_window: 1,
            sensor_gain: 1.0,
            sensor_offset: 0.0,
            phase_offset: 0.0,
        }
    }
}

impl AdcConfig {
    pub fn validate(&self) -> Result<(), AdcError> {
        let bad = |field, reason| Err(AdcError::InvalidConfig { field, reason });
        if !(self.v_min.is_finite() && self.v_max.is_finite()) {
            return bad("v_max", "rails must be finite");
        }
        if self.v_max <= self.v_min {
            return bad("v_max", "must exceed v_min");
        }
        if !(4..=24).contains(&self.bits) {
            return bad("bits", "must be within 4..=24");
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return bad("sample_rate", "must be > 0");
        }
        if self.averaging_window < 1 {
            return bad("averaging_window", "must be >= 1");
        }
        if !self.sensor_gain.is_finite() || self.sensor_gain == 0.0 {
            return bad("sensor_gain", "must be finite and non-zero");
        }
        if !self.sensor_offset.is_finite() {
            return bad("sensor_offset", "must be finite");
        }
        if !(self.phase_offset.is_finite() && self.phase_offset >= 0.0) {
            return bad("phase_offset", "must be >= 0");
        }
        Ok(())
    }

    pub fn max_code(&self) -> u32 {
        (1u32 << self.bits) - 1
    }

    /// Volts per code.
    pub fn lsb(&self) -> f64 {
        (self.v_max - self.v_min) / self.max_code() as f64
    }

    /// Duration covered by one averaged reading.
    pub fn window_duration(&self) -> f64 {
        self.averaging_window as f64 / self.sample_rate
    }

    /// Voltage at the ADC pin for a physical quantity.
    pub fn to_pin_voltage(&self, physical: f64) -> f64 {
        (physical - self.sensor_offset) / self.sensor_gain
    }

    pub fn to_physical(&self, pin_voltage: f64) -> f64 {
        self.sensor_offset + self.sensor_gain * pin_voltage
    }

    pub fn code_to_voltage(&self, code: f64) -> f64 {
        self.v_min + code * self.lsb()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcReading {
    pub mean_voltage: f64,
    pub mean_code: f64,
    pub reported_value: f64,
}

/// Sensor voltage plus the induced disturbance, before any clipping.
pub fn compromised_input(v_s: f64, v_i: f64) -> f64 {
    v_s + v_i
}

pub fn clip(v: f64, cfg: &AdcConfig) -> f64 {
    v.clamp(cfg.v_min, cfg.v_max)
}

/// Output code for an in-range voltage, rounding half away from zero.
pub fn quantize(v: f64, cfg: &AdcConfig) -> u32 {
    let span = cfg.v_max - cfg.v_min;
    let code = ((v - cfg.v_min) / span * cfg.max_code() as f64).round();
    code.clamp(0.0, cfg.max_code() as f64) as u32
}

/// Samples `v_s + v_i(t)` at the configured rate starting at `window_start`,
/// clips, quantizes and averages the codes over the configured window.
pub fn averaged_reading(
    v_s: f64,
    induced: Option<&InducedWaveform>,
    cfg: &AdcConfig,
    window_start: f64,
    horizon: f64,
) -> Result<AdcReading, AdcError> {
    let end = window_start + cfg.phase_offset + cfg.window_duration();
    if end > horizon * (1.0 + 1e-12) {
        return Err(AdcError::WindowPastHorizon { end, horizon });
    }
    let n = cfg.averaging_window;
    let t0 = window_start + cfg.phase_offset;
    let mut code_sum: u64 = 0;
    for k in 0..n {
        let v_i = match induced {
            Some(w) => w.at(t0 + k as f64 / cfg.sample_rate),
            None => 0.0,
        };
        code_sum += u64::from(quantize(clip(compromised_input(v_s, v_i), cfg), cfg));
    }
    let mean_code = code_sum as f64 / n as f64;
    let mean_voltage = cfg.code_to_voltage(mean_code).clamp(cfg.v_min, cfg.v_max);
    Ok(AdcReading {
        mean_voltage,
        mean_code,
        reported_value: cfg.to_physical(mean_voltage),
    })
}

/// Period average of `clamp(v_s + v_i sin(theta), v_min, v_max)`.
///
/// The period is split at the rail crossings so each piece is smooth and
/// then integrated adaptively to 1e-9 V absolute.
pub fn expected_clipped_mean(v_s: f64, v_i: f64, cfg: &AdcConfig) -> f64 {
    let amp = v_i.abs();
    if amp == 0.0 {
        return clip(v_s, cfg);
    }
    let f = |theta: f64| clip(v_s + amp * theta.sin(), cfg);

    let mut cuts = vec![-0.5 * PI, 1.5 * PI];
    for rail in [cfg.v_min, cfg.v_max] {
        let s = (rail - v_s) / amp;
        if s > -1.0 && s < 1.0 {
            let a = s.asin();
            cuts.push(a);
            cuts.push(PI - a);
        }
    }
    cuts.sort_by(f64::total_cmp);

    let tol = 1e-9 * 2.0 * PI / (cuts.len() - 1) as f64;
    let integral: f64 = cuts.windows(2).map(|w| adaptive_simpson(&f, w[0], w[1], tol)).sum();
    integral / (2.0 * PI)
}
