//! One-parameter sweeps over a scenario.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{run_scenario, Scenario, SimError, Summary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: Summary,
    /// Event counts by kind.
    pub events: BTreeMap<String, usize>,
}

enum Segment<'a> {
    Key(&'a str),
    Index(usize),
}

fn parse_path(path: &str) -> Result<Vec<Segment<'_>>, SimError> {
    let bad = || SimError::Config(format!("malformed parameter path `{path}`"));
    let mut out = Vec::new();
    for part in path.split('.') {
        let (key, mut rest) = match part.find('[') {
            Some(i) => part.split_at(i),
            None => (part, ""),
        };
        if key.is_empty() {
            return Err(bad());
        }
        out.push(Segment::Key(key));
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(bad)?;
            let idx = rest[1..close].parse().map_err(|_| bad())?;
            out.push(Segment::Index(idx));
            rest = &rest[close + 1..];
            if !rest.is_empty() && !rest.starts_with('[') {
                return Err(bad());
            }
        }
    }
    Ok(out)
}

/// Copy of `s` with the numeric field at `path` (e.g. `attacks[0].source.power`)
/// set to `value`, revalidated.
pub fn apply_parameter(s: &Scenario, path: &str, value: f64) -> Result<Scenario, SimError> {
    let unknown = || SimError::Config(format!("unknown parameter path `{path}`"));
    let mut doc = serde_json::to_value(s).map_err(|e| SimError::Config(e.to_string()))?;
    let mut node = &mut doc;
    for seg in parse_path(path)? {
        node = match seg {
            Segment::Key(k) => node.get_mut(k),
            Segment::Index(i) => node.get_mut(i),
        }
        .ok_or_else(unknown)?;
    }
    if !node.is_number() {
        return Err(SimError::Config(format!("parameter `{path}` is not numeric")));
    }
    *node = if node.is_u64() && value >= 0.0 && value.fract() == 0.0 {
        Value::from(value as u64)
    } else {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| SimError::Config(format!("sweep value {value} is not finite")))?
    };
    let next: Scenario =
        serde_json::from_value(doc).map_err(|e| SimError::Config(format!("parameter `{path}`: {e}")))?;
    next.validate().map_err(SimError::Invalid)?;
    Ok(next)
}

/// One run per value, executed in parallel, returned sorted by value.
pub fn run_sweep(s: &Scenario, path: &str, values: &[f64]) -> Result<Vec<SweepPoint>, SimError> {
    // Resolve the path once so a bad path fails even for an empty list.
    if values.is_empty() {
        parse_path(path)?;
        return Ok(Vec::new());
    }
    let mut points = values
        .par_iter()
        .map(|&v| {
            let scenario = apply_parameter(s, path, v)?;
            let r = run_scenario(&scenario)?;
            let mut events = BTreeMap::new();
            for e in &r.events {
                *events.entry(e.name().to_string()).or_insert(0) += 1;
            }
            Ok(SweepPoint {
                value: v,
                summary: r.summary,
                events,
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(points)
}

/// `from, from + step, ...` up to and including `to` (within 1e-9 step).
pub fn linear_values(from: f64, to: f64, step: f64) -> Result<Vec<f64>, SimError> {
    if !(step > 0.0) || !from.is_finite() || !to.is_finite() {
        return Err(SimError::Config("sweep needs finite bounds and step > 0".into()));
    }
    if to < from {
        return Ok(Vec::new());
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| from + k as f64 * step).collect())
}
