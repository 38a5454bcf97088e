//! Averaged output stage of the isolated AC-DC converter charging a battery
//! under a PI constant-voltage regulator.
//!
//! The switching converter is replaced by a first-order lag from the
//! commanded voltage `d_mag * (V_p + V_n)` to `v_out`. The battery is an
//! EMF behind a series resistance, so the charging current is
//! `(v_out - V_bat) / R_bat` and a 1 V error in `v_out` moves the current
//! by `1 / R_bat` amperes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: &'static str },
    #[error("step {dt} s exceeds tau_p/10 = {limit} s")]
    StepTooLarge { dt: f64, limit: f64 },
}

/// DC operating point of the converter and battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPoint {
    #[serde(rename = "V_bat")]
    pub v_bat: f64,
    #[serde(rename = "R_bat")]
    pub r_bat: f64,
    #[serde(rename = "V_out_ref")]
    pub v_out_ref: f64,
    /// Grid phase angle in degrees. Carried for completeness; the DC model
    /// does not use it.
    #[serde(default)]
    pub phi_grid: f64,
    #[serde(rename = "V_p")]
    pub v_p: f64,
    #[serde(rename = "V_n")]
    pub v_n: f64,
}

impl OperatingPoint {
    /// Operating point of the 2 kW prototype used for CV attack studies.
    pub fn table1() -> Self {
        Self {
            v_bat: 500.0,
            r_bat: 0.5,
            v_out_ref: 502.0,
            phi_grid: 45.0,
            v_p: 480.0,
            v_n: 176.0,
        }
    }

    /// Every violated invariant, as `(field, reason)`.
    pub fn violations(&self) -> Vec<(&'static str, &'static str)> {
        let mut out = Vec::new();
        let all = [
            self.v_bat,
            self.r_bat,
            self.v_out_ref,
            self.phi_grid,
            self.v_p,
            self.v_n,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            out.push(("V_bat", "all operating-point values must be finite"));
        }
        if !(self.r_bat > 0.0) {
            out.push(("R_bat", "must be > 0"));
        }
        if !(self.v_out_ref > self.v_bat) {
            out.push(("V_out_ref", "must exceed V_bat (charging)"));
        }
        if !(self.v_p > 0.0) {
            out.push(("V_p", "must be > 0"));
        }
        if !(self.v_n > 0.0) {
            out.push(("V_n", "must be > 0"));
        }
        out
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        match self.violations().first() {
            Some(&(field, reason)) => Err(PlantError::InvalidParameter { field, reason }),
            None => Ok(()),
        }
    }

    /// Effective bus voltage seen by the duty command.
    pub fn bus_voltage(&self) -> f64 {
        self.v_p + self.v_n
    }
}

/// PI gains and loop rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains {
    pub kp: f64,
    pub ki: f64,
    pub update_rate: f64,
    /// When false the duty is held at its initial value (open loop).
    #[serde(default = "default_true")]
    pub enabled: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub kp: f64,
    pub ki: f64,
    /// Accumulated error in V*s.
    pub integrator: f64,
    pub d_mag: f64,
    pub update_rate: f64,
}

impl ControllerState {
    pub fn new(gains: &ControllerGains) -> Self {
        Self {
            kp: gains.kp,
            ki: gains.ki,
            integrator: 0.0,
            d_mag: 0.0,
            update_rate: gains.update_rate,
        }
    }

    /// State holding duty `d` with zero error, integrator consistent with it.
    pub fn at_duty(gains: &ControllerGains, d: f64) -> Self {
        let d = d.clamp(0.0, 1.0);
        let integrator = if gains.ki > 0.0 { d / gains.ki } else { 0.0 };
        Self {
            integrator,
            d_mag: d,
            ..Self::new(gains)
        }
    }

    pub fn is_saturated(&self) -> bool {
        self.d_mag <= 0.0 || self.d_mag >= 1.0
    }
}

/// One PI update with conditional-integration anti-windup: the integrator
/// is not advanced on a step whose output would saturate.
pub fn controller_step(state: &ControllerState, v_sense: f64, op: &OperatingPoint, dt: f64) -> ControllerState {
    let e = op.v_out_ref - v_sense;
    let integrator = state.integrator + e * dt;
    let u = state.kp * e + state.ki * integrator;
    let mut next = *state;
    if !(0.0..=1.0).contains(&u) {
        next.d_mag = u.clamp(0.0, 1.0);
    } else {
        next.integrator = integrator;
        next.d_mag = u;
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub v_out: f64,
    pub i_out: f64,
    /// Energy dissipated in R_bat so far (J).
    pub joule_heat: f64,
    pub tau_p: f64,
}

impl PlantState {
    pub fn at_voltage(v_out: f64, tau_p: f64, op: &OperatingPoint) -> Self {
        Self {
            v_out,
            i_out: steady_state_current(v_out, op),
            joule_heat: 0.0,
            tau_p,
        }
    }
}

/// Battery current for a given output voltage.
pub fn steady_state_current(v_out: f64, op: &OperatingPoint) -> f64 {
    (v_out - op.v_bat) / op.r_bat
}

/// Explicit Euler step of the output lag. Heat is accumulated with the
/// trapezoidal rule over the step's start and end currents.
pub fn plant_step(state: &PlantState, d_mag: f64, op: &OperatingPoint, dt: f64) -> Result<PlantState, PlantError> {
    if !(dt > 0.0) {
        return Err(PlantError::InvalidParameter {
            field: "step",
            reason: "must be > 0",
        });
    }
    let limit = state.tau_p / 10.0;
    if dt > limit * (1.0 + 1e-12) {
        return Err(PlantError::StepTooLarge { dt, limit });
    }
    let v_cmd = d_mag * op.bus_voltage();
    let v_out = state.v_out + (v_cmd - state.v_out) * dt / state.tau_p;
    let i_out = steady_state_current(v_out, op);
    let joule_heat = state.joule_heat + trapezoid_heat(state.i_out, i_out, op.r_bat, dt);
    Ok(PlantState {
        v_out,
        i_out,
        joule_heat,
        tau_p: state.tau_p,
    })
}

/// Heat dissipated in `r` between two current samples `dt` apart.
pub fn trapezoid_heat(i0: f64, i1: f64, r: f64, dt: f64) -> f64 {
    0.5 * (i0 * i0 + i1 * i1) * r * dt
}
