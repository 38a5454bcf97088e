//! Independent oracles and scenario builders shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use iemi_sim::adc::AdcConfig;
use iemi_sim::coupling::{mutual_coupling_coefficient, AttackSource, CouplingChannel, Drive, RadiatorGeometry};
use iemi_sim::engine::{fixture, AttackMode, AttackPoint, AttackSpec, Scenario, SensorConfig, SensorModel};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Flux per ampere of an infinite line current through the loop,
/// integrating `B(x) = mu / (2 pi x)` over `x in [d_a, d_a + l]`,
/// `y in [0, w]` with tensor-product Gauss-Legendre on geometric x panels.
pub fn flux_per_amp_quadrature(g: &RadiatorGeometry) -> f64 {
    let gl = gauss_legendre(12);
    let x_panels = 48;
    let y_panels = 3;
    let ratio = ((g.d_a + g.l) / g.d_a).powf(1.0 / x_panels as f64);
    let mut total = 0.0;
    for yp in 0..y_panels {
        let (y0, y1) = (
            g.w * yp as f64 / y_panels as f64,
            g.w * (yp + 1) as f64 / y_panels as f64,
        );
        let mut a = g.d_a;
        for xp in 0..x_panels {
            let b = if xp + 1 == x_panels { g.d_a + g.l } else { a * ratio };
            for &(xi, wx) in &gl {
                let x = 0.5 * (b - a) * xi + 0.5 * (a + b);
                for &(yi, wy) in &gl {
                    let _y = 0.5 * (y1 - y0) * yi + 0.5 * (y0 + y1);
                    let field = g.mu / (2.0 * PI * x);
                    total += 0.25 * (b - a) * (y1 - y0) * wx * wy * field;
                }
            }
            a = b;
        }
    }
    total
}

/// Period mean of the clipped sinusoid by a fine midpoint rule.
pub fn clipped_mean_midpoint(v_s: f64, v_i: f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|k| (v_s + v_i * ((k as f64 + 0.5) * h).sin()).clamp(lo, hi))
        .sum::<f64>()
        / n as f64
}

pub fn load(id: &str) -> Scenario {
    fixture(id)
        .unwrap_or_else(|| panic!("no fixture {id}"))
        .scenario()
        .unwrap()
}

/// CV-1 with an ADC voltage sensor whose zero sits `v_i/pi * gain` below
/// the setpoint, so that a settled attacked loop parks the pin at `v_min`.
pub struct ModeEquivalence {
    pub gain: f64,
    pub v_i: f64,
    pub frequency: f64,
}

impl Default for ModeEquivalence {
    fn default() -> Self {
        Self {
            gain: 10.0,
            v_i: PI / 10.0,
            // 40.618034 * f_s: far from any low-order ratio to the sample rate
            frequency: 406.18034e6,
        }
    }
}

impl ModeEquivalence {
    pub fn offset(&self) -> f64 {
        self.v_i / PI * self.gain
    }

    fn base(&self) -> Scenario {
        let mut s = load("cv-1");
        s.attacks.clear();
        let adc = AdcConfig {
            v_min: 0.0,
            v_max: 3.3,
            bits: 16,
            sample_rate: 10e6,
            averaging_window: 64,
            sensor_gain: self.gain,
            sensor_offset: s.operating_point.v_out_ref - self.offset(),
            phase_offset: 0.0,
        };
        s.voltage_sensor = SensorConfig {
            model: SensorModel::Adc,
            adc: Some(adc),
            random_phase: false,
        };
        s
    }

    pub fn unattacked(&self) -> Scenario {
        self.base()
    }

    pub fn channel(&self) -> CouplingChannel {
        let g = RadiatorGeometry::in_air(0.05, 0.02, 0.01).unwrap();
        CouplingChannel::new(g, self.frequency, 5.0, 1.0).unwrap()
    }

    /// Source current that induces exactly `v_i` through [`Self::channel`].
    pub fn source(&self) -> AttackSource {
        let m = mutual_coupling_coefficient(&self.channel().geometry).unwrap();
        let i_a = self.v_i / (m * 2.0 * PI * self.frequency);
        AttackSource::new(Drive::Current(i_a), self.frequency).unwrap()
    }

    pub fn waveform(&self) -> Scenario {
        let mut s = self.base();
        s.attacks.push(AttackSpec {
            point: AttackPoint::VoltageSensor,
            mode: AttackMode::Waveform,
            offset: None,
            source: Some(self.source()),
            channel: Some(self.channel()),
            target: None,
            window: [0.010, 0.040],
        });
        s
    }

    pub fn offset_injection(&self) -> Scenario {
        let mut s = self.base();
        s.attacks.push(AttackSpec {
            point: AttackPoint::VoltageSensor,
            mode: AttackMode::OffsetInjection,
            offset: Some(self.offset()),
            source: None,
            channel: None,
            target: None,
            window: [0.010, 0.040],
        });
        s
    }
}

/// Same scenario with every attack removed.
pub fn without_attacks(s: &Scenario) -> Scenario {
    let mut c = s.clone();
    c.attacks.clear();
    c
}

/// 1 dB steps from 100 mW up to 20 W.
pub fn power_steps_1db() -> Vec<f64> {
    let mut v: Vec<f64> = (0..=23).map(|k| 0.1 * 10f64.powf(k as f64 / 10.0)).collect();
    v.push(20.0);
    v
}
