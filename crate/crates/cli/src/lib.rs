//! Command-line front end: experiment configs, run orchestration, trace
//! files and reports.

pub mod config;
pub mod error;
pub mod experiment;
pub mod presets;
pub mod report;
pub mod trace_csv;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use experiment::{run, RunStatus, Summary};

use dist_align::distribution::kl_to_uniform;
use dist_align::NormalizedDistribution;

/// KL-to-uniform of the normalized values, which must be at least two
/// non-negative numbers with a positive sum.
pub fn eval_loss(values: &[String]) -> Result<f64, CliError> {
    if values.len() < 2 {
        return Err(CliError::Config(format!("need at least 2 values, got {}", values.len())));
    }
    let parsed: Vec<f64> = values
        .iter()
        .map(|v| v.parse::<f64>().map_err(|e| CliError::Config(format!("{v:?}: {e}"))))
        .collect::<Result<_, _>>()?;
    let p = NormalizedDistribution::from_weights(&parsed)?;
    Ok(kl_to_uniform(&p))
}
