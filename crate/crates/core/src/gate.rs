//! Gate-driver actuation under induced interference and bridge-leg
//! shoot-through detection.
//!
//! A driver turns its switch on when the voltage at its logic input exceeds
//! `V_th`. An attacker who induces `V_i sin(2 pi f t)` on the input loop can
//! therefore turn on a switch the controller is holding off. If the other
//! switch of the same leg is conducting at that moment the bus is shorted.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling::{mutual_coupling_coefficient, resonance_gain, CouplingChannel, CouplingError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("invalid gate driver {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: &'static str },
    #[error("coupling gain is zero; no attack current can reach the threshold")]
    NoThreshold,
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error("switch `{0}` is not part of the bridge topology")]
    UnknownSwitch(String),
    #[error("switch `{0}` has no state")]
    MissingSwitch(String),
    #[error("switch `{0}` appears in more than one leg")]
    DuplicateSwitch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseMode {
    /// Compare the instantaneous input to the threshold.
    Instantaneous,
    /// Compare the input plus the positive envelope of the disturbance.
    Envelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDriverConfig {
    #[serde(rename = "V_th", default = "default_v_th")]
    pub v_th: f64,
    #[serde(rename = "V_on", default = "default_v_on")]
    pub v_on: f64,
    #[serde(rename = "V_off", default = "default_v_off")]
    pub v_off: f64,
    #[serde(default = "default_logic")]
    pub logic_level: f64,
    #[serde(default = "default_mode")]
    pub response_mode: ResponseMode,
    #[serde(default)]
    pub min_dwell: f64,
}

fn default_v_th() -> f64 {
    2.0
}
fn default_v_on() -> f64 {
    18.0
}
fn default_v_off() -> f64 {
    -3.0
}
fn default_logic() -> f64 {
    3.3
}
fn default_mode() -> ResponseMode {
    ResponseMode::Instantaneous
}

impl Default for GateDriverConfig {
    fn default() -> Self {
        Self {
            v_th: default_v_th(),
            v_on: default_v_on(),
            v_off: default_v_off(),
            logic_level: default_logic(),
            response_mode: default_mode(),
            min_dwell: 0.0,
        }
    }
}

impl GateDriverConfig {
    pub fn validate(&self) -> Result<(), GateError> {
        let bad = |field, reason| Err(GateError::InvalidConfig { field, reason });
        if !(self.v_on > self.v_off) {
            return bad("V_on", "must exceed V_off");
        }
        if !(self.v_th > 0.0 && self.v_th < self.logic_level) {
            return bad("V_th", "must lie in (0, logic_level)");
        }
        if !(self.min_dwell >= 0.0 && self.min_dwell.is_finite()) {
            return bad("min_dwell", "must be >= 0");
        }
        Ok(())
    }

    /// Driver input voltage for a logic command.
    pub fn input_level(&self, on: bool) -> f64 {
        if on {
            self.logic_level
        } else {
            0.0
        }
    }
}

/// Disturbance present at a driver input during one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputDisturbance {
    None,
    /// Constant offset added to the input.
    Dc(f64),
    Sine(crate::coupling::InducedWaveform),
}

impl InputDisturbance {
    fn at(&self, t: f64) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Dc(v) => *v,
            Self::Sine(w) => w.at(t),
        }
    }

    fn envelope(&self) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Dc(v) => *v,
            Self::Sine(w) => w.envelope(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchState {
    pub id: String,
    pub commanded: bool,
    pub actual: bool,
    pub gate_voltage: f64,
    /// Time of the last change of `actual`.
    pub last_change: f64,
}

impl SwitchState {
    pub fn off(id: impl Into<String>, cfg: &GateDriverConfig) -> Self {
        Self {
            id: id.into(),
            commanded: false,
            actual: false,
            gate_voltage: cfg.v_off,
            last_change: f64::NEG_INFINITY,
        }
    }

    /// Switch is conducting although the controller commands it off.
    pub fn falsely_on(&self) -> bool {
        self.actual && !self.commanded
    }
}

/// Evaluates the driver at time `t` with logic command `commanded` and the
/// given input disturbance.
pub fn gate_response(
    cfg: &GateDriverConfig,
    state: &SwitchState,
    commanded: bool,
    disturbance: &InputDisturbance,
    t: f64,
) -> SwitchState {
    let v_in = cfg.input_level(commanded);
    let want_on = match cfg.response_mode {
        ResponseMode::Instantaneous => v_in + disturbance.at(t) > cfg.v_th,
        ResponseMode::Envelope => v_in + disturbance.envelope() > cfg.v_th,
    };
    let mut next = state.clone();
    next.commanded = commanded;
    if want_on != state.actual && t - state.last_change >= cfg.min_dwell {
        next.actual = want_on;
        next.last_change = t;
    }
    next.gate_voltage = if next.actual { cfg.v_on } else { cfg.v_off };
    next
}

/// Smallest peak attack current whose induced amplitude exceeds `V_th`
/// with the driver input commanded low.
pub fn false_turnon_threshold(cfg: &GateDriverConfig, channel: &CouplingChannel, f: f64) -> Result<f64, GateError> {
    let m = mutual_coupling_coefficient(&channel.geometry)?;
    let per_amp = m * resonance_gain(channel, f) * 2.0 * PI * f;
    if !(per_amp > 0.0) || !per_amp.is_finite() {
        return Err(GateError::NoThreshold);
    }
    Ok(cfg.v_th / per_amp)
}

/// Complementary switch pairs of a bridge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeTopology {
    pub legs: Vec<(String, String)>,
}

impl BridgeTopology {
    pub fn new(legs: Vec<(String, String)>) -> Result<Self, GateError> {
        let t = Self { legs };
        t.validate()?;
        Ok(t)
    }

    fn numbered(prefix: &str, count: usize) -> Self {
        let legs = (0..count / 2)
            .map(|k| (format!("{prefix}{}", 2 * k + 1), format!("{prefix}{}", 2 * k + 2)))
            .collect();
        Self { legs }
    }

    /// Four legs, eight switches `S1`..`S8`.
    pub fn three_level_afb() -> Self {
        Self::numbered("S", 8)
    }

    /// Six legs, twelve switches `U1`..`U12`.
    pub fn unfolder() -> Self {
        Self::numbered("U", 12)
    }

    pub fn validate(&self) -> Result<(), GateError> {
        let mut seen = BTreeSet::new();
        for (a, b) in &self.legs {
            for id in [a, b] {
                if !seen.insert(id.as_str()) {
                    return Err(GateError::DuplicateSwitch(id.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        2 * self.legs.len()
    }

    /// Switch ids in leg order, upper switch first.
    pub fn switch_ids(&self) -> impl Iterator<Item = &str> {
        self.legs.iter().flat_map(|(a, b)| [a.as_str(), b.as_str()])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.switch_ids().any(|s| s == id)
    }

    /// Leg index and whether `id` is the upper switch.
    pub fn position(&self, id: &str) -> Option<(usize, bool)> {
        self.legs.iter().enumerate().find_map(|(k, (a, b))| {
            if a == id {
                Some((k, true))
            } else if b == id {
                Some((k, false))
            } else {
                None
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootThrough {
    pub t: f64,
    pub leg: usize,
    pub switches: (String, String),
}

/// One event per leg whose two switches are both conducting.
pub fn detect_shoot_through(
    topology: &BridgeTopology,
    states: &[SwitchState],
    t: f64,
) -> Result<Vec<ShootThrough>, GateError> {
    let mut by_id: HashMap<&str, &SwitchState> = HashMap::with_capacity(states.len());
    for s in states {
        if !topology.contains(&s.id) {
            return Err(GateError::UnknownSwitch(s.id.clone()));
        }
        by_id.insert(s.id.as_str(), s);
    }
    let mut events = Vec::new();
    for (leg, (a, b)) in topology.legs.iter().enumerate() {
        let sa = by_id
            .get(a.as_str())
            .ok_or_else(|| GateError::MissingSwitch(a.clone()))?;
        let sb = by_id
            .get(b.as_str())
            .ok_or_else(|| GateError::MissingSwitch(b.clone()))?;
        if sa.actual && sb.actual {
            events.push(ShootThrough {
                t,
                leg,
                switches: (a.clone(), b.clone()),
            });
        }
    }
    Ok(events)
}
