//! Per-window statistics over a recorded series.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{reached, Scenario, Series, SimError};
use crate::plant::trapezoid_heat;

/// Half-open `[t0, t1)`; closed at the end of the series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub label: String,
    pub t0: f64,
    pub t1: f64,
}

impl Window {
    pub fn new(label: impl Into<String>, t0: f64, t1: f64) -> Self {
        Self {
            label: label.into(),
            t0,
            t1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    /// `None` when the guard excludes every sample of the window.
    pub mean: Option<f64>,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryWindow {
    pub label: String,
    pub t0: f64,
    pub t1: f64,
    pub samples: usize,
    /// Samples left after removing settling guards; these form the means.
    pub settled_samples: usize,
    pub channels: BTreeMap<String, ChannelStats>,
}

impl SummaryWindow {
    pub fn mean(&self, channel: &str) -> Option<f64> {
        self.channels.get(channel).and_then(|c| c.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub windows: Vec<SummaryWindow>,
    pub settling_guard_s: f64,
    #[serde(rename = "joule_heat_J")]
    pub joule_heat_j: f64,
}

impl Summary {
    pub fn window(&self, label: &str) -> Option<&SummaryWindow> {
        self.windows.iter().find(|w| w.label == label)
    }

    /// Mean of `channel` over the window labelled `label`.
    pub fn mean(&self, label: &str, channel: &str) -> Option<f64> {
        self.window(label).and_then(|w| w.mean(channel))
    }

    /// Summary with the scenario's default windows: `pre`, `during` and
    /// `post` around the attacks, or a single `run` window without attacks.
    pub fn of(series: &Series, scenario: &Scenario) -> Result<Self, SimError> {
        let windows = default_windows(scenario);
        let edges = scenario.attack_edges();
        let guard = scenario.summary.settling_guard;
        Ok(Self {
            windows: summarize(series, &windows, &edges, guard)?,
            settling_guard_s: guard,
            joule_heat_j: joule_heat(series, scenario.operating_point.r_bat),
        })
    }
}

pub fn default_windows(s: &Scenario) -> Vec<Window> {
    let end = s.duration;
    if s.attacks.is_empty() {
        return vec![Window::new("run", 0.0, end)];
    }
    let first = s.attacks.iter().map(|a| a.t_start()).fold(f64::INFINITY, f64::min);
    let last = s.attacks.iter().map(|a| a.t_stop()).fold(f64::NEG_INFINITY, f64::max);
    let mut w = Vec::with_capacity(3);
    if first > 0.0 {
        w.push(Window::new("pre", 0.0, first));
    }
    w.push(Window::new("during", first, last));
    if last < end {
        w.push(Window::new("post", last, end));
    }
    w
}

/// Battery heat from the recorded current, trapezoidal in step order.
pub fn joule_heat(series: &Series, r_bat: f64) -> f64 {
    series
        .i_out
        .windows(2)
        .fold(0.0, |acc, w| acc + trapezoid_heat(w[0], w[1], r_bat, series.step))
}

/// Mean, min and max of every channel in each window. Samples within
/// `guard` seconds after any of `edges` are left out of the means.
pub fn summarize(
    series: &Series,
    windows: &[Window],
    edges: &[f64],
    guard: f64,
) -> Result<Vec<SummaryWindow>, SimError> {
    let step = series.step;
    let (Some(&first), Some(&last)) = (series.time.first(), series.time.last()) else {
        return Err(SimError::Range("empty series".into()));
    };
    let channels = series.channels();
    let mut out = Vec::with_capacity(windows.len());
    for w in windows {
        if !(w.t1 > w.t0) || !reached(w.t0, first, step) || !reached(last, w.t1, step) {
            return Err(SimError::Range(format!(
                "window `{}` [{}, {}] is outside the series [{first}, {last}]",
                w.label, w.t0, w.t1
            )));
        }
        let closes_series = reached(w.t1, last, step);
        let members: Vec<usize> = (0..series.len())
            .filter(|&k| {
                let t = series.time[k];
                reached(t, w.t0, step) && (!reached(t, w.t1, step) || (closes_series && k + 1 == series.len()))
            })
            .collect();
        let settled: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&k| {
                let t = series.time[k];
                !edges
                    .iter()
                    .any(|&e| reached(t, e, step) && !reached(t, e + guard, step))
            })
            .collect();
        let mut stats = BTreeMap::new();
        for (name, values) in &channels {
            let (min, max) = members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| {
                (lo.min(values[k]), hi.max(values[k]))
            });
            let mean = if settled.is_empty() {
                None
            } else {
                Some(settled.iter().fold(0.0, |acc, &k| acc + values[k]) / settled.len() as f64)
            };
            stats.insert(name.clone(), ChannelStats { mean, min, max });
        }
        out.push(SummaryWindow {
            label: w.label.clone(),
            t0: w.t0,
            t1: w.t1,
            samples: members.len(),
            settled_samples: settled.len(),
            channels: stats,
        });
    }
    Ok(out)
}
