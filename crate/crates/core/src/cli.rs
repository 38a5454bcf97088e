//! Command-line front end.
//!
//! Exit codes: 0 on success (safety events are data, not failures),
//! 1 on configuration or I/O errors, 2 when the simulation diverges.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::engine::{self, fixture, fixtures, load_scenario, run_scenario, Scenario, SimError};
use crate::io::{emit_results, emit_sweep};
use crate::units::parse_quantity;

#[derive(Debug, Parser)]
#[command(
    name = "iemi-sim",
    version,
    about = "IEMI attack simulator for EV fast-charger control loops"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write timeseries.csv and summary.json.
    Simulate {
        /// Scenario file, or `fixture:<id>` for a shipped fixture.
        scenario: String,
        #[arg(short, long, default_value = "out")]
        output_dir: PathBuf,
    },
    /// Run a scenario once per value of a numeric parameter.
    Sweep {
        /// Scenario file, or `fixture:<id>`.
        scenario: String,
        #[command(flatten)]
        range: SweepRange,
        #[arg(short, long, default_value = "out")]
        output_dir: PathBuf,
    },
    /// List the shipped fixtures, optionally writing them to a directory.
    Fixtures {
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Load and validate a scenario without running it.
    Validate {
        /// Scenario file, or `fixture:<id>`.
        scenario: String,
    },
}

#[derive(Debug, Args)]
pub struct SweepRange {
    /// Dotted field path, e.g. `attacks[0].source.frequency`.
    #[arg(long)]
    pub param: String,
    /// First value; unit suffixes such as `300 MHz` are accepted.
    #[arg(long, requires_all = ["to", "step"], conflicts_with = "values", allow_hyphen_values = true)]
    pub from: Option<String>,
    /// Last value, included when the range lands on it.
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<String>,
    /// Positive increment.
    #[arg(long)]
    pub step: Option<String>,
    /// Explicit comma-separated values instead of a linear range.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Option<Vec<String>>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let code = if matches!(e, SimError::Diverged { .. }) { 2 } else { 1 };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn quantity(s: &str) -> Result<f64, SimError> {
    parse_quantity(s).map(|q| q.value).map_err(SimError::Config)
}

/// Reads a scenario file, or a shipped fixture when given `fixture:<id>`.
pub fn resolve_scenario(spec: &str) -> Result<Scenario, SimError> {
    match spec.strip_prefix("fixture:") {
        Some(id) => fixture(id)
            .ok_or_else(|| SimError::Config(format!("no fixture named `{id}`")))?
            .scenario(),
        None => load_scenario(spec),
    }
}

fn sweep_values(r: &SweepRange) -> Result<Vec<f64>, SimError> {
    match (&r.values, &r.from, &r.to, &r.step) {
        (Some(vals), _, _, _) => vals.iter().map(|v| quantity(v)).collect(),
        (None, Some(from), Some(to), Some(step)) => {
            engine::linear_values(quantity(from)?, quantity(to)?, quantity(step)?)
        }
        _ => Err(SimError::Config("sweep needs --from/--to/--step or --values".into())),
    }
}

fn list_paths(out: &mut dyn Write, paths: &[PathBuf]) -> std::io::Result<()> {
    for p in paths {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::from(SimError::Io(e.to_string()));
    match &cli.command {
        Command::Simulate { scenario, output_dir } => {
            let s = resolve_scenario(scenario)?;
            let r = run_scenario(&s)?;
            let paths = emit_results(&r, &s, output_dir)?;
            for w in &r.summary.windows {
                if let Some(i) = w.mean("i_out_A") {
                    writeln!(out, "{:>7} i_out mean {i:.6} A", w.label).map_err(io)?;
                }
            }
            writeln!(
                out,
                "{} events, joule heat {:.6} J",
                r.events.len(),
                r.summary.joule_heat_j
            )
            .map_err(io)?;
            list_paths(out, &paths).map_err(io)?;
        }
        Command::Sweep {
            scenario,
            range,
            output_dir,
        } => {
            let s = resolve_scenario(scenario)?;
            let values = sweep_values(range)?;
            // resolve the path against the scenario before spending time on runs
            if let Some(&v) = values.first() {
                engine::apply_parameter(&s, &range.param, v)?;
            }
            let points = engine::run_sweep(&s, &range.param, &values)?;
            let paths = emit_sweep(&points, &range.param, output_dir)?;
            writeln!(out, "{} runs of {}", points.len(), range.param).map_err(io)?;
            list_paths(out, &paths).map_err(io)?;
        }
        Command::Fixtures { export } => {
            for f in fixtures() {
                let s = f.scenario()?;
                writeln!(out, "{:<18} {}", f.id, s.description).map_err(io)?;
            }
            if let Some(dir) = export {
                std::fs::create_dir_all(dir).map_err(io)?;
                for f in fixtures() {
                    let p = dir.join(f.file_name());
                    std::fs::write(&p, f.text).map_err(io)?;
                    writeln!(out, "wrote {}", p.display()).map_err(io)?;
                }
            }
        }
        Command::Validate { scenario } => {
            let s = resolve_scenario(scenario)?;
            writeln!(
                out,
                "ok: {} ({} steps, {} attacks)",
                if s.name.is_empty() {
                    scenario.as_str()
                } else {
                    s.name.as_str()
                },
                s.step_count(),
                s.attacks.len()
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
