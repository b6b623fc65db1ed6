//! Experiment runs, persistence, the brute-force oracle and plot-data export.
//!
//! A run writes `<out>/<experiment>/<seed>/history.csv` and `summary.json`.

mod export;
mod format;
mod history;
mod oracle;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::circuit::{connection_resistance, obstacle_contact, simulate, Junction, Pattern};
use crate::cocabo::{self, TrialRecord};
use crate::error::{Error, Result};
use crate::experiment::{ExperimentKind, ExperimentSpec};
use crate::gp::FitReport;

pub use export::{export_plotdata, write_plotdata, ExportKind};
pub use format::{mm3, sig9};
pub use history::{history_to_string, read_history, write_history, HistoryRow, HISTORY_HEADER};
pub use oracle::{
    circle_stats, enumerate_oracle, offset_grid, read_oracle, write_oracle, CircleStats,
    OracleEntry, OracleTable, ORACLE_HEADER,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub history: Vec<TrialRecord>,
    pub fits: Vec<FitReport>,
    pub best_pattern: Pattern,
    pub best_voltage: f64,
    pub duration: Duration,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub n_init: usize,
    pub n_iter: usize,
    pub trials: usize,
    pub best_iteration: usize,
    pub best_pattern: String,
    pub best_voltage: f64,
    pub best_contact: bool,
    pub hyperparameter_fits: usize,
    pub duration_seconds: f64,
    pub spec: ExperimentSpec,
}

impl RunResult {
    pub fn summary(&self, spec: &ExperimentSpec) -> RunSummary {
        let best_iteration = self
            .history
            .iter()
            .find(|r| r.voltage == self.best_voltage)
            .map_or(0, |r| r.iteration);
        RunSummary {
            experiment: self.experiment,
            seed: self.seed,
            n_init: spec.config.n_init,
            n_iter: spec.config.n_iter,
            trials: self.history.len(),
            best_iteration,
            best_pattern: self.best_pattern.to_string(),
            best_voltage: self.best_voltage,
            best_contact: obstacle_contact(&self.best_pattern),
            hyperparameter_fits: self.fits.len(),
            duration_seconds: self.duration.as_secs_f64(),
            spec: spec.clone(),
        }
    }
}

/// Runs the optimizer against the simulator without touching the disk.
pub fn execute(spec: &ExperimentSpec) -> Result<RunResult> {
    spec.validate()?;
    let start = Instant::now();
    let trace = cocabo::run(|p| crate::circuit::load_voltage(p, spec), &spec.config)?;
    let duration = start.elapsed();
    // First occurrence wins on ties.
    let best = trace
        .records
        .iter()
        .fold(None::<&TrialRecord>, |b, r| match b {
            Some(b) if b.voltage >= r.voltage => Some(b),
            _ => Some(r),
        })
        .ok_or_else(|| Error::InvalidConfig("run produced no trials".into()))?;
    Ok(RunResult {
        experiment: spec.name,
        seed: spec.config.seed,
        best_pattern: best.pattern()?,
        best_voltage: best.voltage,
        history: trace.records,
        fits: trace.fits,
        duration,
    })
}

pub fn run_dir(out_root: &Path, experiment: ExperimentKind, seed: u64) -> PathBuf {
    out_root.join(experiment.as_str()).join(seed.to_string())
}

/// [`execute`], then persist history and summary under `out_root`.
pub fn run_experiment(spec: &ExperimentSpec, out_root: &Path) -> Result<RunResult> {
    let result = execute(spec)?;
    let dir = run_dir(out_root, result.experiment, result.seed);
    std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    write_history(&dir.join("history.csv"), &result.history)?;
    write_summary(&dir.join("summary.json"), &result.summary(spec))?;
    Ok(result)
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// What `simulate` prints for a single pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub pattern: Pattern,
    pub experiment: ExperimentKind,
    pub load_voltage: f64,
    pub resistance: Option<f64>,
    pub junctions: Vec<Junction>,
    pub contact: bool,
    pub obstacle_attached: bool,
}

pub fn simulate_once(pattern: &Pattern, experiment: &ExperimentSpec) -> Result<SimulationReport> {
    let sim = simulate(pattern, experiment)?;
    Ok(SimulationReport {
        pattern: *pattern,
        experiment: experiment.name,
        load_voltage: sim.load_voltage(),
        resistance: connection_resistance(&sim.graph)?,
        junctions: sim.junctions,
        contact: obstacle_contact(pattern),
        obstacle_attached: sim.obstacle_attached,
    })
}

impl std::fmt::Display for SimulationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "pattern: {}", self.pattern)?;
        writeln!(f, "experiment: {}", self.experiment)?;
        writeln!(f, "load_voltage_V: {}", sig9(self.load_voltage))?;
        match self.resistance {
            Some(r) => writeln!(f, "resistance_ohm: {}", sig9(r))?,
            None => writeln!(f, "resistance_ohm: open")?,
        }
        writeln!(f, "contact: {}", self.contact)?;
        writeln!(f, "junctions: {}", self.junctions.len())?;
        for j in &self.junctions {
            let members: Vec<String> = j.members.iter().map(|m| format!("{m:?}")).collect();
            writeln!(
                f,
                "  ({}, {}) {}",
                mm3(j.position.x),
                mm3(j.position.y),
                members.join(" ")
            )?;
        }
        Ok(())
    }
}
