use std::fmt;
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};

use crate::distribution::WeightVector;
use crate::error::{Error, Result};
use crate::oracle::{Oracle, OracleConfig};
use crate::scalar::Scalar;
use crate::solver::{check_arity, check_total, evaluate_scored, score, SolverError, SolverOutcome, SolverTrace};

/// How the t = 0 measurement is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMode {
    /// Generator with weight-driven guidance disabled.
    #[default]
    Off,
    /// Generator guided by the all-zero weight vector.
    ZeroWeights,
}

impl fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineMode::Off => "off",
            BaselineMode::ZeroWeights => "zero-weights",
        })
    }
}

impl FromStr for BaselineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(BaselineMode::Off),
            "zero-weights" => Ok(BaselineMode::ZeroWeights),
            other => Err(Error::InvalidConfig(format!("unknown baseline mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdaParams<S: Scalar = f64> {
    /// Step size of the residual update (t >= 2).
    pub alpha: S,
    /// Stop once the loss drops below this value.
    pub threshold: S,
    /// Maximum number of evaluations, t = 0..max_iters-1.
    pub max_iters: usize,
    pub baseline: BaselineMode,
}

impl<S: Scalar> Default for IdaParams<S> {
    fn default() -> Self {
        Self {
            alpha: S::one(),
            threshold: S::lit(0.005),
            max_iters: 10,
            baseline: BaselineMode::Off,
        }
    }
}

impl<S: Scalar> IdaParams<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > S::zero() && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig("alpha must be finite and > 0".into()));
        }
        if !(self.threshold > S::zero()) {
            return Err(Error::InvalidConfig("threshold must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Iterative distribution alignment.
///
/// Starts from `a = 0`; the first update sets `a_i = sbar_i - 1/n`, later
/// ones add `alpha (sbar_i - 1/n)` using the previous measurement. Groups
/// over-represented in the output get larger weights, i.e. are pushed
/// harder away from.
pub fn ida_run<S: Scalar, O: Oracle<S> + ?Sized>(
    oracle: &O,
    n: usize,
    params: &IdaParams<S>,
    cfg: &OracleConfig,
) -> Result<SolverOutcome<S>, SolverError<S>> {
    let mut trace = SolverTrace::new();
    if let Err(e) = params.validate().and_then(|_| check_arity(oracle, n)) {
        return Err(SolverError::new(e, trace));
    }

    let mut a = WeightVector::zeros(n);
    for t in 0..params.max_iters {
        let eval_cfg = cfg.derive(t as u64);
        let scored = if t == 0 && params.baseline == BaselineMode::Off {
            oracle
                .evaluate_unguided(&eval_cfg)
                .and_then(|c| check_total(&c, &eval_cfg).map(|_| c))
                .and_then(|c| score(c, n))
        } else {
            evaluate_scored(oracle, &a, &eval_cfg)
        };
        let scored = match scored {
            Ok(s) => s,
            Err(e) => return Err(SolverError::new(e, trace)),
        };
        info!("ida t={t} kl={:.6} freq={:?}", scored.kl, scored.sbar.probs());
        let rec = trace.push(t, a.clone(), scored.counts, scored.sbar, scored.kl, None);
        if rec.kl < params.threshold {
            return Ok(SolverOutcome {
                weights: a,
                trace,
                converged: true,
            });
        }
        let step = if t == 0 { S::one() } else { params.alpha };
        let next: Vec<S> = a
            .as_slice()
            .iter()
            .zip(rec.sbar.residual_from_uniform())
            .map(|(&ai, r)| ai + step * r)
            .collect();
        a = match WeightVector::new(next) {
            Ok(a) => a,
            Err(e) => return Err(SolverError::new(e, trace)),
        };
    }

    let best = trace.best().expect("at least one evaluation").a.clone();
    Ok(SolverOutcome {
        weights: best,
        trace,
        converged: false,
    })
}
