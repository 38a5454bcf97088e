mod common;

use std::f64::consts::PI;

use common::{load, without_attacks, ModeEquivalence};
use iemi_sim::adc::{averaged_reading, expected_clipped_mean, AdcConfig};
use iemi_sim::coupling::{InducedWaveform, RadiatorGeometry};
use iemi_sim::engine::{apply_parameter, run_scenario, run_sweep, summarize, AttackPoint, SimError, Summary, Window};
use iemi_sim::gate::false_turnon_threshold;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn cv1_current_steps_from_four_to_six_amps() {
    let r = run_scenario(&load("cv-1")).unwrap();
    let s = &r.summary;
    assert!(rel(s.mean("pre", "i_out_A").unwrap(), 4.0) < 0.02);
    assert!(rel(s.mean("during", "i_out_A").unwrap(), 6.0) < 0.02);
    assert!(rel(s.mean("post", "i_out_A").unwrap(), 4.0) < 0.02);
    assert_eq!(r.series.len(), 6001);
    assert_eq!(r.count("attack_start"), 1);
}

#[test]
fn cv1_without_offset_is_flat() {
    let mut s = load("cv-1");
    s.attacks[0].offset = Some(0.0);
    let r = run_scenario(&s).unwrap();
    for &i in &r.series.i_out {
        assert!((i - 4.0).abs() < 1e-9);
    }
}

#[test]
fn cv1_late_window_mean() {
    let s = load("cv-1");
    let r = run_scenario(&s).unwrap();
    let w = summarize(
        &r.series,
        &[Window::new("late", 0.030, 0.040)],
        &s.attack_edges(),
        0.015,
    )
    .unwrap();
    assert!(rel(w[0].mean("i_out_A").unwrap(), 6.0) < 0.02);
}

#[test]
fn constant_sensed_offset_shifts_output_exactly() {
    // integral action: settled v_out = V_out_ref - offset
    for offset in [-2.0, -0.5, 0.25, 1.5] {
        let mut s = load("cv-1");
        s.attacks[0].offset = Some(offset);
        let r = run_scenario(&s).unwrap();
        let v = r.summary.mean("during", "v_out_V").unwrap();
        assert!((v - (502.0 - offset)).abs() < 2e-3, "offset {offset}: {v}");
        let i = r.summary.mean("during", "i_out_A").unwrap();
        assert!((i - (4.0 - offset / 0.5)).abs() < 4e-3);
    }
}

#[test]
fn no_attack_loop_holds_setpoint() {
    let r = run_scenario(&without_attacks(&load("cv-1"))).unwrap();
    for (&v, &vs) in r.series.v_out.iter().zip(&r.series.v_sense) {
        assert!((vs - 502.0).abs() <= 0.001 * 502.0);
        assert!((v - 502.0).abs() < 1e-9);
    }
    assert_eq!(r.summary.windows[0].label, "run");
}

#[test]
fn bms_reported_current() {
    let r = run_scenario(&load("bms-i")).unwrap();
    let s = &r.summary;
    for (w, want) in [("pre", 1.05), ("during", 1.36), ("post", 1.05)] {
        let got = s.mean(w, "i_sense_A").unwrap();
        assert!(rel(got, want) < 0.01, "{w}: {got}");
    }
    // the sensor sits outside the voltage loop
    assert!(rel(s.mean("during", "i_out_A").unwrap(), 1.05) < 1e-9);
}

#[test]
fn gate_fixture_logs_shoot_through_at_first_overlap() {
    let s = load("gd-1");
    let r = run_scenario(&s).unwrap();
    let first = r
        .events
        .iter()
        .find(|e| e.name() == "shoot_through")
        .expect("shoot-through");
    assert!(first.t >= s.attacks[0].window[0] - 1e-12);
    // at that step both S1 and S2 are at V_on
    let k = first.step;
    let v1 = r.series.gate_voltages[0].1[k];
    let v2 = r.series.gate_voltages[1].1[k];
    assert_eq!((v1, v2), (18.0, 18.0));
    // and the step before, they were not
    let prev = (r.series.gate_voltages[0].1[k - 1], r.series.gate_voltages[1].1[k - 1]);
    assert_ne!(prev, (18.0, 18.0));

    let quiet = run_scenario(&load("gd-1-intertwined")).unwrap();
    assert_eq!(quiet.count("shoot_through"), 0);
    assert_eq!(quiet.count("false_turn_on"), 0);
}

#[test]
fn legal_pwm_never_shoots_through() {
    let r = run_scenario(&without_attacks(&load("gd-1"))).unwrap();
    assert_eq!(r.count("shoot_through"), 0);
    // complementary pairs: exactly one switch per leg at V_on each step
    for k in 0..r.series.len() {
        for leg in 0..4 {
            let a = r.series.gate_voltages[2 * leg].1[k];
            let b = r.series.gate_voltages[2 * leg + 1].1[k];
            assert!((a == 18.0) ^ (b == 18.0));
        }
    }
}

#[test]
fn deterministic_across_runs() {
    for id in ["cv-1", "sens-v", "gd-1"] {
        let s = load(id);
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a, b, "{id}");
    }
}

#[test]
fn random_phase_is_seeded() {
    let mut s = load("sens-v");
    s.voltage_sensor.random_phase = true;
    // a single-sample window makes the reading phase sensitive
    s.voltage_sensor.adc.as_mut().unwrap().averaging_window = 1;
    let a = run_scenario(&s).unwrap();
    let b = run_scenario(&s).unwrap();
    assert_eq!(a.series, b.series);
    s.seed = 7;
    let c = run_scenario(&s).unwrap();
    assert_ne!(a.series.v_sense, c.series.v_sense);
}

#[test]
fn diverging_plant_names_the_step() {
    let mut s = load("cv-1");
    s.operating_point.v_p = 1e308;
    s.operating_point.v_n = 1e308;
    match run_scenario(&s) {
        Err(SimError::Diverged { step, .. }) => assert_eq!(step, 1),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn saturation_and_reverse_current_are_logged() {
    let mut s = load("cv-1");
    // a huge negative reading offset drives the duty to its ceiling
    s.attacks[0].offset = Some(-400.0);
    let r = run_scenario(&s).unwrap();
    assert!(r.count("saturation") >= 1);
    assert!(r.series.d_mag.iter().all(|d| (0.0..=1.0).contains(d)));
    // the reverse: reading far too high collapses the output below V_bat
    s.attacks[0].offset = Some(400.0);
    let r = run_scenario(&s).unwrap();
    assert!(r.count("reverse_current") >= 1);
}

#[test]
fn waveform_reading_offset_matches_clipping_mean() {
    // Open-loop reading through the engine equals the quadrature mean.
    let m = ModeEquivalence::default();
    let mut s = m.waveform();
    s.controller.enabled = false;
    let r = run_scenario(&s).unwrap();
    let adc = s.voltage_sensor.adc.unwrap();
    let pin = adc.to_pin_voltage(502.0);
    let expected = adc.to_physical(expected_clipped_mean(pin, m.v_i, &adc));
    let got = r.summary.mean("during", "v_sense_V").unwrap();
    assert!((got - expected).abs() < 0.01 * m.v_i * m.gain, "{got} vs {expected}");
}

#[test]
fn frequency_sweep_peaks_at_resonance() {
    let s = load("sens-v");
    let f_res = s.attacks[0].channel.unwrap().resonant_frequency;
    let values: Vec<f64> = (10..=40).map(|k| k as f64 * f_res / 20.0).collect();
    let pts = run_sweep(&s, "attacks[0].source.frequency", &values).unwrap();
    let manip: Vec<f64> = pts
        .iter()
        .map(|p| p.summary.mean("during", "v_sense_V").unwrap() - p.summary.mean("pre", "v_sense_V").unwrap())
        .collect();
    let best = manip.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert_eq!(pts[best].value, f_res);
}

#[test]
fn power_sweep_threshold_matches_closed_form() {
    let s = load("gd-1");
    let a = &s.attacks[0];
    let ch = a.channel.unwrap();
    let f = a.source.unwrap().frequency;
    let i_th = false_turnon_threshold(&s.gate.as_ref().unwrap().driver, &ch, f).unwrap();
    let p_th = i_th * i_th * 50.0 / 2.0;
    let values: Vec<f64> = (1..=40).map(|k| p_th * (0.8 + 0.01 * k as f64)).collect();
    let pts = run_sweep(&s, "attacks[0].source.power", &values).unwrap();
    let first_on = pts.iter().position(|p| p.events.contains_key("false_turn_on")).unwrap();
    let predicted = values.iter().position(|&p| p > p_th).unwrap();
    assert!(first_on.abs_diff(predicted) <= 1, "{first_on} vs {predicted}");
    assert!(pts[first_on..].iter().all(|p| p.events.contains_key("shoot_through")));
}

#[test]
fn sweep_edge_cases() {
    let s = load("cv-1");
    assert!(run_sweep(&s, "attacks[0].offset", &[]).unwrap().is_empty());
    assert!(matches!(
        run_sweep(&s, "attacks[0].nope", &[1.0]),
        Err(SimError::Config(_))
    ));
    assert!(matches!(
        apply_parameter(&s, "attacks[3].offset", 1.0),
        Err(SimError::Config(_))
    ));
    assert!(matches!(apply_parameter(&s, "name", 1.0), Err(SimError::Config(_))));
    // invalid values are caught by validation
    assert!(matches!(
        apply_parameter(&s, "operating_point.R_bat", 0.0),
        Err(SimError::Invalid(_))
    ));
    let t = apply_parameter(&s, "operating_point.V_bat", 499.0).unwrap();
    assert_eq!(t.operating_point.v_bat, 499.0);
}

#[test]
fn sweep_order_independent() {
    let s = load("cv-1");
    let fwd = run_sweep(&s, "attacks[0].offset", &[-1.0, -0.5, 0.0, 0.5]).unwrap();
    let rev = run_sweep(&s, "attacks[0].offset", &[0.5, 0.0, -0.5, -1.0]).unwrap();
    assert_eq!(fwd, rev);
    assert_eq!(fwd.iter().map(|p| p.value).collect::<Vec<_>>(), [-1.0, -0.5, 0.0, 0.5]);
}

#[test]
fn summary_recomputable_from_series() {
    let s = load("cv-1");
    let r = run_scenario(&s).unwrap();
    assert_eq!(Summary::of(&r.series, &s).unwrap(), r.summary);
}

#[test]
fn averaged_reading_converges_for_incommensurate_tones() {
    let cfg = AdcConfig {
        sample_rate: 1e6,
        averaging_window: 2000,
        ..AdcConfig::default()
    };
    for (v_s, v_i) in [(0.0, 1.0), (1.65, 1.0), (3.0, 0.8), (0.4, 2.5)] {
        let w = InducedWaveform::sine(v_i, 1e6 * (3.0 + (5f64.sqrt() - 1.0) / 2.0));
        let r = averaged_reading(v_s, Some(&w), &cfg, 0.0, 1.0).unwrap();
        let want = common::clipped_mean_midpoint(v_s, v_i, 0.0, 3.3, 2_000_000);
        assert!(
            (r.mean_voltage - want).abs() < 0.01 * v_i,
            "{v_s},{v_i}: {} vs {want}",
            r.mean_voltage
        );
    }
}

#[test]
fn clipping_mean_against_midpoint_oracle() {
    let cfg = AdcConfig {
        v_min: -1.0,
        v_max: 2.0,
        ..AdcConfig::default()
    };
    for (v_s, v_i) in [(-1.0, 0.5), (1.9, 0.4), (0.5, 3.0), (0.5, 0.2), (-0.8, 7.0)] {
        let q = expected_clipped_mean(v_s, v_i, &cfg);
        let o = common::clipped_mean_midpoint(v_s, v_i, -1.0, 2.0, 4_000_000);
        assert!((q - o).abs() < 1e-9, "{v_s},{v_i}: {q} vs {o}");
    }
    assert!(
        (expected_clipped_mean(
            -1.0,
            PI,
            &AdcConfig {
                v_min: -1.0,
                v_max: 4.0,
                ..cfg
            }
        ) - (-1.0 + 1.0))
            .abs()
            < 1e-9
    );
}

#[test]
fn coupling_matches_surface_quadrature() {
    for (d, w, l) in [(0.01, 0.02, 0.01), (0.1, 0.02, 0.02), (0.003, 0.5, 0.9)] {
        let g = RadiatorGeometry::in_air(d, w, l).unwrap();
        let m = iemi_sim::coupling::mutual_coupling_coefficient(&g).unwrap();
        assert!(rel(m, common::flux_per_amp_quadrature(&g)) < 1e-9);
    }
}

#[test]
fn attack_points_cover_all_kinds() {
    let pts: Vec<AttackPoint> = ["cv-1", "bms-i", "gd-1"]
        .iter()
        .map(|id| load(id).attacks[0].point)
        .collect();
    assert_eq!(
        pts,
        [
            AttackPoint::VoltageSensor,
            AttackPoint::CurrentSensor,
            AttackPoint::GateSignal
        ]
    );
}
