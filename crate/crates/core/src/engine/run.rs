//! The fixed-step simulation loop.
//!
//! Per step `k` at `t = k * step`:
//! 1. advance the plant from `t - step` with the duty held since the last update;
//! 2. on controller instants, take sensor readings (ADC window ending at `t`)
//!    and run the PI update;
//! 3. evaluate every gate driver and check the bridge legs;
//! 4. record the row.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{AttackMode, AttackPoint, Scenario, SensorConfig, SensorModel};
use super::{reached, Series, SimError, Summary};
use crate::adc::{averaged_reading, AdcConfig};
use crate::coupling::InducedWaveform;
use crate::gate::{detect_shoot_through, gate_response, BridgeTopology, InputDisturbance, SwitchState};
use crate::plant::{controller_step, plant_step, ControllerState, PlantState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    AttackStart { attack: usize },
    AttackStop { attack: usize },
    ShootThrough { leg: usize, switches: (String, String) },
    FalseTurnOn { switch: String },
    Saturation { bound: String },
    ReverseCurrent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub step: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self.kind {
            EventKind::AttackStart { .. } => "attack_start",
            EventKind::AttackStop { .. } => "attack_stop",
            EventKind::ShootThrough { .. } => "shoot_through",
            EventKind::FalseTurnOn { .. } => "false_turn_on",
            EventKind::Saturation { .. } => "saturation",
            EventKind::ReverseCurrent => "reverse_current",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub series: Series,
    pub events: Vec<Event>,
    pub summary: Summary,
}

impl SimResult {
    pub fn count(&self, name: &str) -> usize {
        self.events.iter().filter(|e| e.name() == name).count()
    }
}

/// Attack with its waveform resolved once up front.
struct Prepared {
    point: AttackPoint,
    offset: f64,
    wave: Option<InducedWaveform>,
    target: Option<String>,
    t0: f64,
    t1: f64,
}

impl Prepared {
    fn active(&self, t: f64, step: f64) -> bool {
        reached(t, self.t0, step) && !reached(t, self.t1, step)
    }
}

/// A sensor's reading path with its effective ADC settings.
struct Sensor {
    adc: Option<AdcConfig>,
}

impl Sensor {
    fn new(cfg: &SensorConfig, rng: &mut ChaCha8Rng) -> Self {
        let adc = match (cfg.model, cfg.adc) {
            (SensorModel::Adc, Some(mut adc)) => {
                let period = 1.0 / adc.sample_rate;
                if cfg.random_phase {
                    adc.phase_offset += rng.gen_range(0.0..1.0) * period;
                }
                // the grid repeats every sample period
                adc.phase_offset %= period;
                Some(adc)
            }
            _ => None,
        };
        Self { adc }
    }

    fn read(&self, physical: f64, attacks: &[&Prepared], t: f64) -> Result<f64, SimError> {
        let offset: f64 = attacks.iter().map(|a| a.offset).sum();
        let wave = attacks.iter().find_map(|a| a.wave);
        let base = match &self.adc {
            None => physical,
            Some(adc) => {
                // one period of slack keeps the last sample before t
                let start = t - adc.window_duration() - 1.0 / adc.sample_rate;
                averaged_reading(adc.to_pin_voltage(physical), wave.as_ref(), adc, start, t)?.reported_value
            }
        };
        Ok(base + offset)
    }
}

fn prepare(s: &Scenario) -> Result<Vec<Prepared>, SimError> {
    s.attacks
        .iter()
        .map(|a| {
            let wave = match (a.mode, &a.source, &a.channel) {
                (AttackMode::Waveform, Some(src), Some(ch)) => Some(InducedWaveform::from_attack(src, ch)?),
                _ => None,
            };
            Ok(Prepared {
                point: a.point,
                offset: if a.mode == AttackMode::OffsetInjection {
                    a.offset.unwrap_or(0.0)
                } else {
                    0.0
                },
                wave,
                target: a.target.clone(),
                t0: a.t_start(),
                t1: a.t_stop(),
            })
        })
        .collect()
}

fn check_finite(step: usize, t: f64, values: &[(&'static str, f64)]) -> Result<(), SimError> {
    match values.iter().find(|(_, v)| !v.is_finite()) {
        Some(&(channel, _)) => Err(SimError::Diverged { step, t, channel }),
        None => Ok(()),
    }
}

/// Runs a validated scenario to completion.
pub fn run_scenario(s: &Scenario) -> Result<SimResult, SimError> {
    s.validate().map_err(SimError::Invalid)?;
    let op = s.operating_point;
    let dt = s.step;
    let n = s.step_count();
    let every = s.control_interval();
    let control_dt = 1.0 / s.controller.update_rate;

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let v_sensor = Sensor::new(&s.voltage_sensor, &mut rng);
    let i_sensor = s.current_sensor.as_ref().map(|c| Sensor::new(c, &mut rng));
    let attacks = prepare(s)?;

    let bridge: Option<BridgeTopology> = s.gate.as_ref().map(|g| g.bridge());
    let switch_ids: Vec<String> = bridge
        .as_ref()
        .map(|b| b.switch_ids().map(String::from).collect())
        .unwrap_or_default();
    let mut switches: Vec<SwitchState> = match &s.gate {
        Some(g) => switch_ids
            .iter()
            .map(|id| SwitchState::off(id.clone(), &g.driver))
            .collect(),
        None => Vec::new(),
    };

    let d0 = (op.v_out_ref / op.bus_voltage()).clamp(0.0, 1.0);
    let mut ctrl = ControllerState::at_duty(&s.controller, d0);
    let mut plant = PlantState::at_voltage(op.v_out_ref, s.plant.tau_p, &op);

    let mut series = Series::with_capacity(dt, n + 1, i_sensor.is_some(), &switch_ids);
    let mut events = Vec::new();
    let mut v_sense = plant.v_out;
    let mut i_sense = plant.i_out;
    let mut was_active = vec![false; attacks.len()];
    let mut overlapping = Vec::<usize>::new();
    let mut was_saturated = ctrl.is_saturated();
    let mut was_reverse = plant.i_out < 0.0;

    for k in 0..=n {
        let t = k as f64 * dt;
        if k > 0 {
            plant = plant_step(&plant, ctrl.d_mag, &op, dt)?;
        }

        let active: Vec<&Prepared> = attacks.iter().filter(|a| a.active(t, dt)).collect();
        for (idx, a) in attacks.iter().enumerate() {
            let now = a.active(t, dt);
            if now != was_active[idx] {
                let kind = if now {
                    EventKind::AttackStart { attack: idx }
                } else {
                    EventKind::AttackStop { attack: idx }
                };
                events.push(Event { t, step: k, kind });
                was_active[idx] = now;
            }
        }

        if k % every == 0 {
            let on_point = |p: AttackPoint| active.iter().copied().filter(|a| a.point == p).collect::<Vec<_>>();
            v_sense = v_sensor.read(plant.v_out, &on_point(AttackPoint::VoltageSensor), t)?;
            if let Some(cs) = &i_sensor {
                i_sense = cs.read(plant.i_out, &on_point(AttackPoint::CurrentSensor), t)?;
            }
            if s.controller.enabled {
                ctrl = controller_step(&ctrl, v_sense, &op, control_dt);
            }
        }

        if let (Some(g), Some(bridge)) = (&s.gate, &bridge) {
            let duty = g.duty.unwrap_or(ctrl.d_mag);
            let upper_on = (t * g.switching_frequency).fract() < duty;
            for sw in switches.iter_mut() {
                let Some((_, is_upper)) = bridge.position(&sw.id) else {
                    continue;
                };
                let commanded = upper_on == is_upper;
                let disturbance = active
                    .iter()
                    .find(|a| a.point == AttackPoint::GateSignal && a.target.as_deref() == Some(sw.id.as_str()))
                    .map_or(InputDisturbance::None, |a| match a.wave {
                        Some(w) => InputDisturbance::Sine(w),
                        None => InputDisturbance::Dc(a.offset),
                    });
                let next = gate_response(&g.driver, sw, commanded, &disturbance, t);
                if next.falsely_on() && !sw.falsely_on() {
                    events.push(Event {
                        t,
                        step: k,
                        kind: EventKind::FalseTurnOn {
                            switch: next.id.clone(),
                        },
                    });
                }
                *sw = next;
            }
            let shorts = detect_shoot_through(bridge, &switches, t)?;
            for st in &shorts {
                if !overlapping.contains(&st.leg) {
                    events.push(Event {
                        t,
                        step: k,
                        kind: EventKind::ShootThrough {
                            leg: st.leg,
                            switches: st.switches.clone(),
                        },
                    });
                }
            }
            overlapping = shorts.iter().map(|st| st.leg).collect();
        }

        let saturated = ctrl.is_saturated();
        if saturated && !was_saturated {
            let bound = if ctrl.d_mag >= 1.0 { "upper" } else { "lower" };
            events.push(Event {
                t,
                step: k,
                kind: EventKind::Saturation { bound: bound.into() },
            });
        }
        was_saturated = saturated;
        let reverse = plant.i_out < 0.0;
        if reverse && !was_reverse {
            events.push(Event {
                t,
                step: k,
                kind: EventKind::ReverseCurrent,
            });
        }
        was_reverse = reverse;

        check_finite(
            k,
            t,
            &[
                ("v_out", plant.v_out),
                ("i_out", plant.i_out),
                ("v_sense", v_sense),
                ("i_sense", i_sense),
                ("d_mag", ctrl.d_mag),
                ("integrator", ctrl.integrator),
            ],
        )?;

        series.time.push(t);
        series.v_out.push(plant.v_out);
        series.v_sense.push(v_sense);
        series.i_out.push(plant.i_out);
        series.d_mag.push(ctrl.d_mag);
        series.attack_active.push(!active.is_empty());
        if let Some(i) = series.i_sense.as_mut() {
            i.push(i_sense);
        }
        for (col, sw) in series.gate_voltages.iter_mut().zip(&switches) {
            col.1.push(sw.gate_voltage);
        }
    }

    let summary = Summary::of(&series, s)?;
    debug_assert_eq!(summary.joule_heat_j.to_bits(), plant.joule_heat.to_bits());
    Ok(SimResult {
        series,
        events,
        summary,
    })
}
