//! Black-box generators mapping a weight vector to class counts.
//!
//! Three backends implement [`Oracle`]: the analytic diffusion testbed
//! ([`ToyDiffusionOracle`]), a fixed random softmax network ([`SimOracle`])
//! and an HTTP client for a real text-to-image service ([`RemoteOracle`]).

mod remote;
mod sim;
mod toy;

pub use remote::{remote_evaluate, EvaluateRequest, EvaluateResponse, RemoteOracle};
pub use sim::{make_sim_oracle, SimOracle, SimOracleSpec};
pub use toy::ToyDiffusionOracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distribution::{FrequencyVector, WeightVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    ToyDiffusion,
    SoftmaxSim,
    Remote,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::ToyDiffusion => "toy-diffusion",
            BackendKind::SoftmaxSim => "softmax-sim",
            BackendKind::Remote => "remote",
        })
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy-diffusion" => Ok(BackendKind::ToyDiffusion),
            "softmax-sim" => Ok(BackendKind::SoftmaxSim),
            "remote" => Ok(BackendKind::Remote),
            other => Err(Error::InvalidConfig(format!("unknown backend {other:?}"))),
        }
    }
}

/// Per-evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Generated samples per evaluation.
    pub num_samples: u64,
    pub seed: u64,
    pub backend: BackendKind,
}

impl OracleConfig {
    pub const DEFAULT_NUM_SAMPLES: u64 = 100;

    pub fn new(backend: BackendKind, num_samples: u64, seed: u64) -> Result<Self> {
        if num_samples == 0 {
            return Err(Error::InvalidConfig("num_samples must be >= 1".into()));
        }
        Ok(Self {
            num_samples,
            seed,
            backend,
        })
    }

    /// Copy with the seed replaced by one derived from `(seed, index)`.
    pub fn derive(&self, index: u64) -> Self {
        Self {
            seed: stream_seed(self.seed, index),
            ..*self
        }
    }
}

pub trait Oracle<S: Scalar>: Send + Sync {
    /// Number of attribute groups.
    fn arity(&self) -> usize;

    fn backend(&self) -> BackendKind;

    /// Generates `cfg.num_samples` outputs for weights `a` and counts them
    /// per group. Pure in `(self, a, cfg)`.
    fn evaluate(&self, a: &WeightVector<S>, cfg: &OracleConfig) -> Result<FrequencyVector>;

    /// Output of the generator with weight-driven guidance switched off.
    /// Backends without such a switch evaluate the zero vector.
    fn evaluate_unguided(&self, cfg: &OracleConfig) -> Result<FrequencyVector> {
        self.evaluate(&WeightVector::zeros(self.arity()), cfg)
    }
}

impl<S: Scalar, O: Oracle<S> + ?Sized> Oracle<S> for Box<O> {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn backend(&self) -> BackendKind {
        (**self).backend()
    }
    fn evaluate(&self, a: &WeightVector<S>, cfg: &OracleConfig) -> Result<FrequencyVector> {
        (**self).evaluate(a, cfg)
    }
    fn evaluate_unguided(&self, cfg: &OracleConfig) -> Result<FrequencyVector> {
        (**self).evaluate_unguided(cfg)
    }
}

pub(crate) fn check_request<S: Scalar>(
    oracle: &(impl Oracle<S> + ?Sized),
    a: &WeightVector<S>,
    cfg: &OracleConfig,
) -> Result<()> {
    if a.len() != oracle.arity() {
        return Err(Error::InvalidInput(format!(
            "weight vector has {} entries but oracle has {} groups",
            a.len(),
            oracle.arity()
        )));
    }
    if cfg.num_samples == 0 {
        return Err(Error::InvalidInput("num_samples must be >= 1".into()));
    }
    if cfg.backend != oracle.backend() {
        return Err(Error::InvalidInput(format!(
            "config selects backend {} but oracle is {}",
            cfg.backend,
            oracle.backend()
        )));
    }
    Ok(())
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent seed for item `index` of the stream rooted at `seed`.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index)
}

/// Splits `total` into integer counts proportional to `probs` by the
/// largest-remainder rule, ties going to the lowest index.
pub fn apportion(probs: &[f64], total: u64) -> Vec<u64> {
    let quotas: Vec<f64> = probs.iter().map(|&p| p * total as f64).collect();
    let mut counts: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut left = total.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..probs.len()).collect();
    // stable sort keeps lower indices first among equal remainders
    order.sort_by(|&i, &j| {
        let ri = quotas[i] - quotas[i].floor();
        let rj = quotas[j] - quotas[j].floor();
        rj.total_cmp(&ri)
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}
