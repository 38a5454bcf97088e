//! Near-field magnetic coupling from an attacker radiator into a victim loop.
//!
//! The radiator is treated as an infinite straight current filament at
//! distance `d_a` from the near edge of a rectangular `w x l` victim loop.
//! The flux linkage per ampere of radiator current is
//!
//! ```text
//! M = mu * (w / 2pi) * ln((d_a + l) / d_a)
//! ```
//!
//! and the induced voltage is `-M * di_a/dt`, scaled by a band-pass
//! resonance gain that stands in for the victim conductor's resonance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vacuum permeability in H/m.
pub const MU_0: f64 = 4.0e-7 * PI;

/// Reference resistance used when an attack is specified by forward power.
pub const DEFAULT_SOURCE_RESISTANCE: f64 = 50.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("invalid {field}: {value} ({reason})")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("attack source has neither a current amplitude nor a forward power")]
    NoDrive,
    #[error("coupling coefficient is not finite for the given geometry")]
    NonFinite,
}

fn require(field: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<(), CouplingError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(CouplingError::InvalidParameter { field, value, reason })
    }
}

/// Radiator placement relative to the victim loop. All lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiatorGeometry {
    /// Permeability of the medium (H/m).
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Distance from the radiator to the near edge of the loop.
    pub d_a: f64,
    /// Loop width, parallel to the radiator.
    pub w: f64,
    /// Loop length, perpendicular to the radiator.
    pub l: f64,
}

fn default_mu() -> f64 {
    MU_0
}

impl RadiatorGeometry {
    pub fn new(mu: f64, d_a: f64, w: f64, l: f64) -> Result<Self, CouplingError> {
        let g = Self { mu, d_a, w, l };
        g.validate()?;
        Ok(g)
    }

    /// Geometry in free space.
    pub fn in_air(d_a: f64, w: f64, l: f64) -> Result<Self, CouplingError> {
        Self::new(MU_0, d_a, w, l)
    }

    pub fn validate(&self) -> Result<(), CouplingError> {
        require("mu", self.mu, self.mu > 0.0, "must be > 0")?;
        require("d_a", self.d_a, self.d_a > 0.0, "must be > 0")?;
        require("w", self.w, self.w > 0.0, "must be > 0")?;
        require("l", self.l, self.l > 0.0, "must be > 0")
    }

    /// Loop surface area in m^2.
    pub fn loop_area(&self) -> f64 {
        self.w * self.l
    }
}

/// How strongly the attacker drives the radiator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drive {
    /// Peak radiator current in amperes.
    Current(f64),
    /// Forward RF power in watts.
    Power(f64),
}

/// A continuous sinusoidal attack current `i_a(t) = I_a sin(2 pi f t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_current: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    pub frequency: f64,
    #[serde(default = "default_source_resistance")]
    pub source_resistance: f64,
}

fn default_source_resistance() -> f64 {
    DEFAULT_SOURCE_RESISTANCE
}

impl AttackSource {
    pub fn new(drive: Drive, frequency: f64) -> Result<Self, CouplingError> {
        let (amplitude_current, power) = match drive {
            Drive::Current(i) => (Some(i), None),
            Drive::Power(p) => (None, Some(p)),
        };
        let s = Self {
            amplitude_current,
            power,
            frequency,
            source_resistance: DEFAULT_SOURCE_RESISTANCE,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_source_resistance(mut self, r: f64) -> Result<Self, CouplingError> {
        self.source_resistance = r;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CouplingError> {
        match (self.amplitude_current, self.power) {
            (None, None) => return Err(CouplingError::NoDrive),
            (Some(_), Some(_)) => {
                return Err(CouplingError::InvalidParameter {
                    field: "power",
                    value: self.power.unwrap_or(f64::NAN),
                    reason: "set either amplitude_current or power, not both",
                })
            }
            (Some(i), None) => require("amplitude_current", i, i >= 0.0, "must be >= 0")?,
            (None, Some(p)) => require("power", p, p >= 0.0, "must be >= 0")?,
        }
        require("frequency", self.frequency, self.frequency > 0.0, "must be > 0")?;
        require(
            "source_resistance",
            self.source_resistance,
            self.source_resistance > 0.0,
            "must be > 0",
        )
    }
}

/// Frequency-dependent coupling path into one victim loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingChannel {
    pub geometry: RadiatorGeometry,
    pub resonant_frequency: f64,
    pub quality_factor: f64,
    #[serde(default = "default_peak_gain")]
    pub peak_gain: f64,
}

fn default_peak_gain() -> f64 {
    1.0
}

impl CouplingChannel {
    pub fn new(
        geometry: RadiatorGeometry,
        resonant_frequency: f64,
        quality_factor: f64,
        peak_gain: f64,
    ) -> Result<Self, CouplingError> {
        let c = Self {
            geometry,
            resonant_frequency,
            quality_factor,
            peak_gain,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CouplingError> {
        self.geometry.validate()?;
        require(
            "resonant_frequency",
            self.resonant_frequency,
            self.resonant_frequency > 0.0,
            "must be > 0",
        )?;
        require(
            "quality_factor",
            self.quality_factor,
            self.quality_factor > 0.0,
            "must be > 0",
        )?;
        require("peak_gain", self.peak_gain, self.peak_gain > 0.0, "must be > 0")
    }
}

/// Mutual inductance (H) between an infinite line current and the victim loop.
pub fn mutual_coupling_coefficient(geometry: &RadiatorGeometry) -> Result<f64, CouplingError> {
    let g = geometry;
    let m = g.mu * (g.w / (2.0 * PI)) * (g.l / g.d_a).ln_1p();
    if m.is_finite() {
        Ok(m)
    } else {
        Err(CouplingError::NonFinite)
    }
}

/// Second-order band-pass magnitude, `peak_gain` at `resonant_frequency`.
pub fn resonance_gain(channel: &CouplingChannel, f: f64) -> f64 {
    let x = f / channel.resonant_frequency - channel.resonant_frequency / f;
    let q = channel.quality_factor;
    channel.peak_gain / (1.0 + q * q * x * x).sqrt()
}

/// Peak radiator current. Converts forward power through the reference
/// resistance, `I_a = sqrt(2 P / R)`, when only power is given.
pub fn amplitude_from_power(source: &AttackSource) -> Result<f64, CouplingError> {
    match (source.amplitude_current, source.power) {
        (Some(i), _) => Ok(i),
        (None, Some(p)) => Ok((2.0 * p / source.source_resistance).sqrt()),
        (None, None) => Err(CouplingError::NoDrive),
    }
}

/// Peak induced voltage `M * eta(f) * 2 pi f * I_a`.
pub fn induced_amplitude(source: &AttackSource, channel: &CouplingChannel) -> Result<f64, CouplingError> {
    let m = mutual_coupling_coefficient(&channel.geometry)?;
    let i_a = amplitude_from_power(source)?;
    let f = source.frequency;
    Ok(m * resonance_gain(channel, f) * 2.0 * PI * f * i_a)
}

/// Instantaneous induced voltage at time `t`: `-V_i cos(2 pi f t)`.
pub fn induced_voltage_waveform(
    source: &AttackSource,
    channel: &CouplingChannel,
    t: f64,
) -> Result<f64, CouplingError> {
    Ok(InducedWaveform::from_attack(source, channel)?.at(t))
}

/// A sinusoidal voltage `amplitude * sin(2 pi f t + phase)` on a victim conductor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InducedWaveform {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl InducedWaveform {
    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    /// Waveform induced by `source` through `channel`. The derivative of the
    /// sine drive puts the induced voltage at `-cos`, a phase of `-pi/2`.
    pub fn from_attack(source: &AttackSource, channel: &CouplingChannel) -> Result<Self, CouplingError> {
        Ok(Self {
            amplitude: induced_amplitude(source, channel)?,
            frequency: source.frequency,
            phase: -0.5 * PI,
        })
    }

    pub fn at(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency * t + self.phase).sin()
    }

    /// Positive envelope of the waveform.
    pub fn envelope(&self) -> f64 {
        self.amplitude.abs()
    }
}
