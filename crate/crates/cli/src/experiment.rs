use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use dist_align::solver::{ida_run, rs_run};
use dist_align::{SolverError, SolverOutcome, SolverTrace};
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SolverConfig};
use crate::error::CliError;
use crate::trace_csv::write_trace;

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: Option<String>,
    pub solver: String,
    pub labels: Vec<String>,
    /// Loss of the last evaluation.
    pub final_kl: f64,
    pub best_kl: f64,
    /// Weights the solver returned.
    pub weights: Vec<f64>,
    /// Normalized frequencies of the last evaluation.
    pub final_freq: Vec<f64>,
    pub converged: bool,
    pub evaluations: usize,
    /// Index of the last solver iteration.
    pub last_iteration: usize,
}

impl Summary {
    pub fn new(cfg: &ExperimentConfig, outcome: &SolverOutcome<f64>) -> Self {
        let last = outcome.trace.last().expect("solvers evaluate at least once");
        Self {
            name: cfg.name.clone(),
            solver: cfg.solver.name().into(),
            labels: cfg.labels.clone(),
            final_kl: last.kl,
            best_kl: outcome.best_kl(),
            weights: outcome.weights.as_slice().to_vec(),
            final_freq: last.sbar.probs().to_vec(),
            converged: outcome.converged,
            evaluations: outcome.trace.len(),
            last_iteration: last.iteration,
        }
    }
}

pub fn solve(cfg: &ExperimentConfig) -> Result<Result<SolverOutcome<f64>, SolverError<f64>>, CliError> {
    let oracle = cfg.build_oracle()?;
    let ocfg = cfg.oracle_config()?;
    let n = cfg.n();
    Ok(match cfg.solver {
        SolverConfig::Ida { .. } => ida_run(&oracle, n, &cfg.ida_params()?, &ocfg),
        SolverConfig::Rs { .. } => rs_run(&oracle, n, &cfg.rs_params()?, &ocfg),
    })
}

pub fn write_trace_file(dir: &Path, n: usize, trace: &SolverTrace<f64>) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(TRACE_FILE);
    let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    write_trace(BufWriter::new(file), n, trace)?;
    Ok(path)
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<PathBuf, CliError> {
    let path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(summary).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Outcome of `run`, mapped to the process exit code.
#[derive(Debug)]
pub enum RunStatus {
    Converged(Summary),
    NotConverged(Summary),
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Converged(_) => 0,
            RunStatus::NotConverged(_) => 2,
        }
    }

    pub fn summary(&self) -> &Summary {
        match self {
            RunStatus::Converged(s) | RunStatus::NotConverged(s) => s,
        }
    }
}

/// Runs the configured solver and writes both output files. A solver that
/// fails part-way still leaves the evaluations it completed in `trace.csv`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunStatus, CliError> {
    let dir = &cfg.output_dir;
    match solve(cfg)? {
        Ok(outcome) => {
            let trace = write_trace_file(dir, cfg.n(), &outcome.trace)?;
            let summary = Summary::new(cfg, &outcome);
            write_summary(dir, &summary)?;
            info!("wrote {} and {}", trace.display(), dir.join(SUMMARY_FILE).display());
            Ok(if outcome.converged {
                RunStatus::Converged(summary)
            } else {
                RunStatus::NotConverged(summary)
            })
        }
        Err(SolverError { source, trace }) => {
            if !trace.is_empty() {
                write_trace_file(dir, cfg.n(), &trace)?;
            }
            Err(source.into())
        }
    }
}
