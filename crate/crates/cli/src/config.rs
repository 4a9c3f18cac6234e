//! Experiment configuration files.
//!
//! JSON with a `version` field. Unknown keys are rejected everywhere so a
//! misspelt parameter fails loudly instead of silently taking its default.

use std::path::{Path, PathBuf};
use std::time::Duration;

use dist_align::engine::{DiffusionSchedule, GuidanceParams, MixtureModel, ToyDefaults};
use dist_align::oracle::{RemoteOracle, SimOracle, SimOracleSpec, ToyDiffusionOracle};
use dist_align::solver::{BaselineMode, IdaParams, RewardBaseline, RsParams};
use dist_align::{BackendKind, NormalizedDistribution, Oracle, OracleConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub name: Option<String>,
    /// One label per attribute group; fixes `n`.
    pub labels: Vec<String>,
    pub backend: BackendConfig,
    pub solver: SolverConfig,
    pub oracle: OracleSettings,
    #[serde(default)]
    pub baseline_mode: BaselineMode,
    /// Where `trace.csv` and `summary.json` go.
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BackendConfig {
    Toy {
        prior: Vec<f64>,
        #[serde(default = "default_std")]
        component_std: f64,
        #[serde(default)]
        layout: MeanLayout,
        #[serde(default)]
        schedule: ScheduleConfig,
        #[serde(default)]
        guidance: GuidanceConfig,
    },
    Sim {
        hidden_dim: usize,
        weight_seed: u64,
        #[serde(default = "yes")]
        sample_noise: bool,
    },
    Remote {
        endpoint: String,
        prompt: String,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

fn default_std() -> f64 {
    ToyDefaults::COMPONENT_STD
}

fn yes() -> bool {
    true
}

fn default_timeout() -> u64 {
    RemoteOracle::DEFAULT_TIMEOUT.as_secs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeanLayout {
    /// Mean `i` at `radius * e_i` in `n` dimensions.
    Axes {
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// Means at equal angles on the unit circle in two dimensions.
    Circle {
        #[serde(default)]
        phase: f64,
    },
}

fn default_radius() -> f64 {
    ToyDefaults::RADIUS
}

impl Default for MeanLayout {
    fn default() -> Self {
        MeanLayout::Axes { radius: ToyDefaults::RADIUS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            steps: ToyDefaults::STEPS,
            beta_start: ToyDefaults::BETA_START,
            beta_end: ToyDefaults::BETA_END,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuidanceConfig {
    pub guidance_scale: f64,
    pub safety_scale: f64,
    pub threshold: f64,
    pub warmup: usize,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        let g = GuidanceParams::<f64>::default();
        Self {
            guidance_scale: g.guidance_scale,
            safety_scale: g.safety_scale,
            threshold: g.threshold,
            warmup: g.warmup,
        }
    }
}

impl From<GuidanceConfig> for GuidanceParams<f64> {
    fn from(g: GuidanceConfig) -> Self {
        GuidanceParams {
            guidance_scale: g.guidance_scale,
            safety_scale: g.safety_scale,
            threshold: g.threshold,
            warmup: g.warmup,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolverConfig {
    Ida {
        #[serde(default = "IdaDefaults::alpha")]
        alpha: f64,
        #[serde(default = "IdaDefaults::threshold")]
        threshold: f64,
        #[serde(default = "IdaDefaults::max_iters")]
        max_iters: usize,
    },
    Rs {
        #[serde(default = "RsDefaults::eta")]
        eta: f64,
        #[serde(default = "RsDefaults::population")]
        population: usize,
        #[serde(default = "RsDefaults::max_iters")]
        max_iters: usize,
        #[serde(default = "RsDefaults::threshold")]
        threshold: f64,
        #[serde(default)]
        baseline: RewardBaseline,
        #[serde(default = "RsDefaults::momentum")]
        momentum: f64,
        #[serde(default)]
        init_seed: u64,
    },
}

struct IdaDefaults;

impl IdaDefaults {
    fn alpha() -> f64 {
        IdaParams::<f64>::default().alpha
    }
    fn threshold() -> f64 {
        IdaParams::<f64>::default().threshold
    }
    fn max_iters() -> usize {
        IdaParams::<f64>::default().max_iters
    }
}

struct RsDefaults;

impl RsDefaults {
    fn eta() -> f64 {
        RsParams::<f64>::default().eta
    }
    fn population() -> usize {
        RsParams::<f64>::default().population
    }
    fn max_iters() -> usize {
        RsParams::<f64>::default().max_iters
    }
    fn threshold() -> f64 {
        RsParams::<f64>::default().threshold
    }
    fn momentum() -> f64 {
        RsParams::<f64>::default().momentum
    }
}

impl SolverConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SolverConfig::Ida { .. } => "ida",
            SolverConfig::Rs { .. } => "rs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSettings {
    #[serde(default = "default_num_samples")]
    pub num_samples: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_num_samples() -> u64 {
    OracleConfig::DEFAULT_NUM_SAMPLES
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, or a bundled preset of that name when no such file exists.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => match crate::presets::find(&path.to_string_lossy()) {
                Some(text) => text.to_string(),
                None => return Err(CliError::Io(format!("{}: {e}", path.display()))),
            },
        };
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let n = self.n();
        if n < 2 {
            return Err(CliError::Config(format!("need at least 2 labels, got {n}")));
        }
        if let BackendConfig::Toy { prior, .. } = &self.backend {
            if prior.len() != n {
                return Err(CliError::Config(format!(
                    "labels has {n} entries but backend prior has {}",
                    prior.len()
                )));
            }
        }
        if self.oracle.num_samples == 0 {
            return Err(CliError::Config("oracle.num_samples must be >= 1".into()));
        }
        match self.solver {
            SolverConfig::Ida { .. } => self.ida_params()?.validate()?,
            SolverConfig::Rs { .. } => self.rs_params()?.validate()?,
        }
        Ok(())
    }

    pub fn backend_kind(&self) -> BackendKind {
        match self.backend {
            BackendConfig::Toy { .. } => BackendKind::ToyDiffusion,
            BackendConfig::Sim { .. } => BackendKind::SoftmaxSim,
            BackendConfig::Remote { .. } => BackendKind::Remote,
        }
    }

    pub fn oracle_config(&self) -> Result<OracleConfig, CliError> {
        Ok(OracleConfig::new(self.backend_kind(), self.oracle.num_samples, self.oracle.seed)?)
    }

    pub fn ida_params(&self) -> Result<IdaParams<f64>, CliError> {
        match self.solver {
            SolverConfig::Ida { alpha, threshold, max_iters } => Ok(IdaParams {
                alpha,
                threshold,
                max_iters,
                baseline: self.baseline_mode,
            }),
            _ => Err(CliError::Config("solver is not ida".into())),
        }
    }

    pub fn rs_params(&self) -> Result<RsParams<f64>, CliError> {
        match self.solver {
            SolverConfig::Rs { eta, population, max_iters, threshold, baseline, momentum, init_seed } => Ok(RsParams {
                eta,
                population,
                max_iters,
                threshold,
                baseline,
                momentum,
                init_seed,
            }),
            _ => Err(CliError::Config("solver is not rs".into())),
        }
    }

    pub fn build_oracle(&self) -> Result<Box<dyn Oracle<f64>>, CliError> {
        let labels = self.labels.clone();
        Ok(match &self.backend {
            BackendConfig::Toy { prior, component_std, layout, schedule, guidance } => {
                let prior = NormalizedDistribution::from_weights(prior)?;
                let mixture = match *layout {
                    MeanLayout::Axes { radius } => MixtureModel::on_axes(prior, *component_std, radius)?,
                    MeanLayout::Circle { phase } => MixtureModel::on_unit_circle(prior, *component_std, phase)?,
                };
                let schedule = DiffusionSchedule::linear(schedule.steps, schedule.beta_start, schedule.beta_end)?;
                Box::new(ToyDiffusionOracle::new(labels, mixture, schedule, (*guidance).into())?)
            }
            BackendConfig::Sim { hidden_dim, weight_seed, sample_noise } => Box::new(SimOracle::<f64>::new(&SimOracleSpec {
                n: self.n(),
                hidden_dim: *hidden_dim,
                weight_seed: *weight_seed,
                sample_noise: *sample_noise,
            })?),
            BackendConfig::Remote { endpoint, prompt, timeout_secs } => Box::new(RemoteOracle::with_timeout(
                endpoint.as_str(),
                prompt.as_str(),
                labels,
                Duration::from_secs(*timeout_secs),
            )?),
        })
    }
}
