//! Result files: `timeseries.csv` and `summary.json`, plus sweep tables.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{Event, Scenario, Series, SimError, SimResult, Summary, SweepPoint};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SWEEP_CSV_FILE: &str = "sweep.csv";
pub const SWEEP_JSON_FILE: &str = "sweep.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub scenario: Scenario,
    #[serde(flatten)]
    pub summary: Summary,
    pub events: Vec<Event>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> SimError {
    SimError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, SimError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

/// Writes the time series and summary for one run into `dir`.
pub fn emit_results(r: &SimResult, scenario: &Scenario, dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let csv = dir.join(TIMESERIES_FILE);
    let mut w = create(&csv)?;
    r.series.write_csv(&mut w).map_err(|e| io_err(&csv, e))?;
    w.flush().map_err(|e| io_err(&csv, e))?;

    let json = dir.join(SUMMARY_FILE);
    let doc = SummaryDocument {
        scenario: scenario.clone(),
        summary: r.summary.clone(),
        events: r.events.clone(),
    };
    let mut w = create(&json)?;
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| io_err(&json, e))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| io_err(&json, e))?;
    Ok(vec![csv, json])
}

pub fn read_summary(path: &Path) -> Result<SummaryDocument, SimError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| SimError::Parse(format!("{}: {e}", path.display())))
}

pub fn read_series(path: &Path, step: f64) -> Result<Series, SimError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    Series::read_csv(BufReader::new(f), step)
}

/// Summary rebuilt from the emitted CSV and the scenario echoed in
/// `summary.json`, alongside the stored one.
pub fn recompute_summary(dir: &Path) -> Result<(Summary, Summary), SimError> {
    let doc = read_summary(&dir.join(SUMMARY_FILE))?;
    let series = read_series(&dir.join(TIMESERIES_FILE), doc.scenario.step)?;
    let fresh = Summary::of(&series, &doc.scenario)?;
    Ok((doc.summary, fresh))
}

/// `sweep.csv` has one row per value: the value, the mean of every channel
/// in every summary window (`<window>.<channel>`), and event counts
/// (`events.<kind>`). Empty cells mark means that do not exist.
pub fn emit_sweep(points: &[SweepPoint], parameter: &str, dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut mean_cols: Vec<(String, String)> = Vec::new();
    let mut seen = BTreeSet::new();
    for p in points {
        for w in &p.summary.windows {
            for ch in w.channels.keys() {
                if seen.insert((w.label.clone(), ch.clone())) {
                    mean_cols.push((w.label.clone(), ch.clone()));
                }
            }
        }
    }
    let kinds: BTreeSet<&String> = points.iter().flat_map(|p| p.events.keys()).collect();

    let csv = dir.join(SWEEP_CSV_FILE);
    let mut w = create(&csv)?;
    let mut header = vec![parameter.to_string()];
    header.extend(mean_cols.iter().map(|(w, c)| format!("{w}.{c}")));
    header.extend(kinds.iter().map(|k| format!("events.{k}")));
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "{}", header.join(","))?;
        for p in points {
            let mut row = vec![p.value.to_string()];
            for (label, ch) in &mean_cols {
                row.push(p.summary.mean(label, ch).map(|m| m.to_string()).unwrap_or_default());
            }
            for k in &kinds {
                row.push(p.events.get(*k).copied().unwrap_or(0).to_string());
            }
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| io_err(&csv, e))?;

    let json = dir.join(SWEEP_JSON_FILE);
    let mut w = create(&json)?;
    serde_json::to_writer_pretty(&mut w, &serde_json::json!({ "parameter": parameter, "points": points }))
        .map_err(|e| io_err(&json, e))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| io_err(&json, e))?;
    Ok(vec![csv, json])
}
