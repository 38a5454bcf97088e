//! Scenario definition, file loading and validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adc::AdcConfig;
use crate::coupling::{AttackSource, CouplingChannel};
use crate::gate::{BridgeTopology, GateDriverConfig};
use crate::plant::{ControllerGains, OperatingPoint};
use crate::units::{expected_dimensions, looks_numeric, parse_quantity};

use super::SimError;

/// Settling guard applied after every attack edge when averaging.
pub const DEFAULT_SETTLING_GUARD: f64 = 0.015;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub duration: f64,
    pub step: f64,
    #[serde(default)]
    pub seed: u64,
    pub operating_point: OperatingPoint,
    pub controller: ControllerGains,
    pub plant: PlantConfig,
    #[serde(default)]
    pub voltage_sensor: SensorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_sensor: Option<SensorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateSetup>,
    #[serde(default)]
    pub attacks: Vec<AttackSpec>,
    #[serde(default)]
    pub summary: SummaryConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub tau_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SensorModel {
    /// Reading equals the physical value (plus any injected offset).
    #[default]
    Ideal,
    /// Reading goes through the clipping and averaging ADC model.
    Adc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    #[serde(default)]
    pub model: SensorModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adc: Option<AdcConfig>,
    /// Draw a uniform sampling phase in `[0, 1/f_s)` from the scenario seed.
    #[serde(default)]
    pub random_phase: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    #[serde(rename = "3lafb")]
    ThreeLevelAfb,
    Unfolder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSetup {
    #[serde(default)]
    pub driver: GateDriverConfig,
    pub topology: TopologyKind,
    /// PWM carrier frequency for the complementary leg commands.
    pub switching_frequency: f64,
    /// Fixed duty for the upper switches; defaults to the controller's `d_mag`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duty: Option<f64>,
}

impl GateSetup {
    pub fn bridge(&self) -> BridgeTopology {
        match self.topology {
            TopologyKind::ThreeLevelAfb => BridgeTopology::three_level_afb(),
            TopologyKind::Unfolder => BridgeTopology::unfolder(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackPoint {
    VoltageSensor,
    CurrentSensor,
    GateSignal,
}

impl fmt::Display for AttackPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::VoltageSensor => "voltage_sensor",
            Self::CurrentSensor => "current_sensor",
            Self::GateSignal => "gate_signal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    /// Add `offset` directly to the reading (or gate input).
    OffsetInjection,
    /// Radiate `source` through `channel` and let the front end respond.
    Waveform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub point: AttackPoint,
    pub mode: AttackMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<AttackSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<CouplingChannel>,
    /// Targeted switch id, for gate attacks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// `[t_start, t_stop]` in seconds.
    pub window: [f64; 2],
}

impl AttackSpec {
    pub fn t_start(&self) -> f64 {
        self.window[0]
    }

    pub fn t_stop(&self) -> f64 {
        self.window[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryConfig {
    #[serde(default = "default_guard")]
    pub settling_guard: f64,
}

fn default_guard() -> f64 {
    DEFAULT_SETTLING_GUARD
}

impl Default for SummaryConfig {
    fn default() -> Self {
        Self {
            settling_guard: DEFAULT_SETTLING_GUARD,
        }
    }
}

/// A single invariant violation, addressed by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationErrors(pub Vec<FieldError>);

impl ValidationErrors {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError {
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn paths(&self) -> Vec<&str> {
        self.0.iter().map(|e| e.path.as_str()).collect()
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "  {e}")?;
        }
        Ok(())
    }
}

/// `k * step` lands on `t` up to floating-point noise.
fn is_multiple(t: f64, step: f64) -> bool {
    let r = t / step;
    (r - r.round()).abs() <= 1e-6 * r.abs().max(1.0)
}

impl Scenario {
    /// Number of integration steps; the series has one more sample.
    pub fn step_count(&self) -> usize {
        (self.duration / self.step).round() as usize
    }

    /// Integration steps per controller update.
    pub fn control_interval(&self) -> usize {
        (1.0 / (self.controller.update_rate * self.step)).round().max(1.0) as usize
    }

    /// Attack start and stop times, sorted.
    pub fn attack_edges(&self) -> Vec<f64> {
        let mut edges: Vec<f64> = self.attacks.iter().flat_map(|a| a.window).collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        edges
    }

    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut errs = ValidationErrors::default();
        self.check_timing(&mut errs);
        for (field, reason) in self.operating_point.violations() {
            errs.push(format!("operating_point.{field}"), reason);
        }
        self.check_controller(&mut errs);
        check_sensor(&self.voltage_sensor, "voltage_sensor", &mut errs);
        if let Some(cs) = &self.current_sensor {
            check_sensor(cs, "current_sensor", &mut errs);
        }
        if let Some(g) = &self.gate {
            if let Err(e) = g.driver.validate() {
                errs.push("gate.driver", e.to_string());
            }
            if !(g.switching_frequency > 0.0 && g.switching_frequency.is_finite()) {
                errs.push("gate.switching_frequency", "must be > 0");
            }
            if let Some(d) = g.duty {
                if !(0.0..=1.0).contains(&d) {
                    errs.push("gate.duty", "must lie in [0, 1]");
                }
            }
        }
        if !(self.summary.settling_guard >= 0.0 && self.summary.settling_guard.is_finite()) {
            errs.push("summary.settling_guard", "must be >= 0");
        }
        for (k, a) in self.attacks.iter().enumerate() {
            self.check_attack(k, a, &mut errs);
        }
        self.check_overlaps(&mut errs);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    fn check_timing(&self, errs: &mut ValidationErrors) {
        let step_ok = self.step > 0.0 && self.step.is_finite();
        if !step_ok {
            errs.push("step", "must be > 0");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            errs.push("duration", "must be > 0");
        } else if step_ok && !is_multiple(self.duration, self.step) {
            errs.push("duration", "must be a whole number of steps");
        }
        if !(self.plant.tau_p > 0.0 && self.plant.tau_p.is_finite()) {
            errs.push("plant.tau_p", "must be > 0");
        } else if step_ok && self.step > self.plant.tau_p / 10.0 * (1.0 + 1e-12) {
            errs.push(
                "step",
                format!("must not exceed tau_p/10 = {} s", self.plant.tau_p / 10.0),
            );
        }
    }

    fn check_controller(&self, errs: &mut ValidationErrors) {
        let c = &self.controller;
        if !(c.kp >= 0.0 && c.kp.is_finite()) {
            errs.push("controller.kp", "must be >= 0");
        }
        if !(c.ki >= 0.0 && c.ki.is_finite()) {
            errs.push("controller.ki", "must be >= 0");
        }
        if !(c.update_rate > 0.0 && c.update_rate.is_finite()) {
            errs.push("controller.update_rate", "must be > 0");
        } else if self.step > 0.0 {
            let ratio = 1.0 / (c.update_rate * self.step);
            if ratio < 1.0 - 1e-9 || !is_multiple(1.0 / c.update_rate, self.step) {
                errs.push(
                    "controller.update_rate",
                    "control period must be a whole number of steps",
                );
            }
        }
    }

    fn check_attack(&self, k: usize, a: &AttackSpec, errs: &mut ValidationErrors) {
        let p = format!("attacks[{k}]");
        let [t0, t1] = a.window;
        if !(t0 >= 0.0 && t1 > t0 && t1.is_finite()) {
            errs.push(format!("{p}.window"), "need 0 <= t_start < t_stop");
        } else if t1 > self.duration * (1.0 + 1e-12) {
            errs.push(format!("{p}.window"), "t_stop exceeds duration");
        }
        match a.mode {
            AttackMode::OffsetInjection => match a.offset {
                Some(o) if o.is_finite() => {}
                Some(_) => errs.push(format!("{p}.offset"), "must be finite"),
                None => errs.push(format!("{p}.offset"), "required for offset_injection"),
            },
            AttackMode::Waveform => {
                match &a.source {
                    Some(s) => {
                        if let Err(e) = s.validate() {
                            errs.push(format!("{p}.source"), e.to_string());
                        }
                    }
                    None => errs.push(format!("{p}.source"), "required for waveform mode"),
                }
                match &a.channel {
                    Some(c) => {
                        if let Err(e) = c.validate() {
                            errs.push(format!("{p}.channel"), e.to_string());
                        }
                    }
                    None => errs.push(format!("{p}.channel"), "required for waveform mode"),
                }
            }
        }
        let needs_adc = a.mode == AttackMode::Waveform;
        match a.point {
            AttackPoint::VoltageSensor => {
                if needs_adc && self.voltage_sensor.model != SensorModel::Adc {
                    errs.push(
                        format!("{p}.mode"),
                        "waveform attacks need voltage_sensor.model = \"adc\"",
                    );
                }
            }
            AttackPoint::CurrentSensor => match &self.current_sensor {
                None => errs.push(format!("{p}.point"), "scenario has no current_sensor"),
                Some(cs) if needs_adc && cs.model != SensorModel::Adc => errs.push(
                    format!("{p}.mode"),
                    "waveform attacks need current_sensor.model = \"adc\"",
                ),
                Some(_) => {}
            },
            AttackPoint::GateSignal => match (&self.gate, &a.target) {
                (None, _) => errs.push(format!("{p}.point"), "scenario has no gate section"),
                (Some(_), None) => errs.push(format!("{p}.target"), "gate attacks name a target switch"),
                (Some(g), Some(id)) => {
                    if !g.bridge().contains(id) {
                        errs.push(format!("{p}.target"), format!("unknown switch `{id}`"));
                    }
                }
            },
        }
    }

    fn check_overlaps(&self, errs: &mut ValidationErrors) {
        for (i, a) in self.attacks.iter().enumerate() {
            for (j, b) in self.attacks.iter().enumerate().skip(i + 1) {
                let same_point = a.point == b.point && (a.point != AttackPoint::GateSignal || a.target == b.target);
                let overlap = a.t_start() < b.t_stop() && b.t_start() < a.t_stop();
                if same_point && overlap {
                    errs.push(
                        format!("attacks[{j}].window"),
                        format!("overlaps attacks[{i}] on the same point"),
                    );
                }
            }
        }
    }
}

fn check_sensor(s: &SensorConfig, path: &str, errs: &mut ValidationErrors) {
    match (s.model, &s.adc) {
        (SensorModel::Adc, None) => errs.push(format!("{path}.adc"), "required when model = \"adc\""),
        (_, Some(adc)) => {
            if let Err(e) = adc.validate() {
                errs.push(format!("{path}.adc"), e.to_string());
            }
        }
        _ => {}
    }
}

/// Rewrites every unit-suffixed string into an SI float, checking the
/// dimension against the key it appears under.
fn normalize(value: &mut toml::Value, path: &str, key: &str, errs: &mut ValidationErrors) {
    match value {
        toml::Value::String(s) if looks_numeric(s) => match parse_quantity(s) {
            Ok(q) => {
                if let Some(dim) = q.dimension {
                    match expected_dimensions(key) {
                        Some(allowed) if allowed.contains(&dim) => {}
                        Some(allowed) => errs.push(
                            path,
                            format!(
                                "expected {}, got {dim}",
                                allowed.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" or ")
                            ),
                        ),
                        None => errs.push(path, "this field takes a plain number"),
                    }
                }
                *value = toml::Value::Float(q.value);
            }
            // free-form strings such as `topology = "3lafb"` stay as they are
            Err(_) if expected_dimensions(key).is_none() => {}
            Err(e) => errs.push(path, e),
        },
        toml::Value::Integer(i) if expected_dimensions(key).is_some() => {
            *value = toml::Value::Float(*i as f64);
        }
        toml::Value::Table(t) => {
            for (k, v) in t.iter_mut() {
                let child = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                normalize(v, &child, k, errs);
            }
        }
        toml::Value::Array(items) => {
            for (i, v) in items.iter_mut().enumerate() {
                normalize(v, &format!("{path}[{i}]"), key, errs);
            }
        }
        _ => {}
    }
}

/// Parses scenario text, normalizes units and validates every invariant.
pub fn parse_scenario(text: &str) -> Result<Scenario, SimError> {
    let mut raw: toml::Value = toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
    let mut errs = ValidationErrors::default();
    normalize(&mut raw, "", "", &mut errs);
    if !errs.is_empty() {
        return Err(SimError::Invalid(errs));
    }
    let normalized = toml::to_string(&raw).map_err(|e| SimError::Parse(e.to_string()))?;
    let scenario: Scenario = toml::from_str(&normalized).map_err(|e| SimError::Parse(e.message().to_string()))?;
    scenario.validate().map_err(SimError::Invalid)?;
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, SimError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        duration = "60 ms"
        step = "10 us"
        [operating_point]
        V_bat = "500 V"
        R_bat = 0.5
        V_out_ref = 502
        phi_grid = "45 deg"
        V_p = "480 V"
        V_n = "176 V"
        [controller]
        kp = 7.5e-4
        ki = 0.75
        update_rate = "100 kHz"
        [plant]
        tau_p = "1 ms"
        [[attacks]]
        point = "voltage_sensor"
        mode = "offset_injection"
        offset = "-1 V"
        window = ["10 ms", "40 ms"]
    "#;

    #[test]
    fn minimal_scenario_loads() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.operating_point.v_out_ref, 502.0);
        assert_eq!(s.attacks[0].window, [0.010, 0.040]);
        assert_eq!(s.step_count(), 6000);
        assert_eq!(s.control_interval(), 1);
        assert_eq!(s.summary.settling_guard, 0.015);
        assert_eq!(s.attack_edges(), vec![0.010, 0.040]);
    }

    #[test]
    fn reports_every_violation_with_path() {
        let text = MINIMAL
            .replace("R_bat = 0.5", "R_bat = 0")
            .replace("tau_p = \"1 ms\"", "tau_p = \"50 us\"");
        let SimError::Invalid(errs) = parse_scenario(&text).unwrap_err() else {
            panic!("expected validation failure")
        };
        let paths = errs.paths();
        assert!(paths.contains(&"operating_point.R_bat"), "{paths:?}");
        assert!(paths.contains(&"step"), "{paths:?}");
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let text = MINIMAL.replace("V_p = \"480 V\"", "V_p = \"480 ms\"");
        let SimError::Invalid(errs) = parse_scenario(&text).unwrap_err() else {
            panic!()
        };
        assert_eq!(errs.paths(), ["operating_point.V_p"]);
    }

    #[test]
    fn unknown_field_is_a_parse_error() {
        let text = MINIMAL.replace("[plant]", "[plant]\nbogus = 1");
        assert!(matches!(parse_scenario(&text), Err(SimError::Parse(_))));
    }

    #[test]
    fn waveform_attack_needs_adc_sensor() {
        let text = MINIMAL.replace(
            "mode = \"offset_injection\"\n        offset = \"-1 V\"",
            "mode = \"waveform\"",
        );
        let SimError::Invalid(errs) = parse_scenario(&text).unwrap_err() else {
            panic!()
        };
        let p = errs.paths();
        assert!(p.contains(&"attacks[0].source"));
        assert!(p.contains(&"attacks[0].channel"));
        assert!(p.contains(&"attacks[0].mode"));
    }

    #[test]
    fn overlapping_windows_rejected() {
        let text = format!(
            "{MINIMAL}\n[[attacks]]\npoint = \"voltage_sensor\"\nmode = \"offset_injection\"\noffset = 1\nwindow = [\"30 ms\", \"50 ms\"]\n"
        );
        let SimError::Invalid(errs) = parse_scenario(&text).unwrap_err() else {
            panic!()
        };
        assert_eq!(errs.paths(), ["attacks[1].window"]);
    }

    #[test]
    fn window_past_duration_rejected() {
        let text = MINIMAL.replace("\"40 ms\"", "\"70 ms\"");
        let SimError::Invalid(errs) = parse_scenario(&text).unwrap_err() else {
            panic!()
        };
        assert_eq!(errs.paths(), ["attacks[0].window"]);
    }
}
