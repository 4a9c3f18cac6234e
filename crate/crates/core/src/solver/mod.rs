//! Optimizers over a black-box [`Oracle`](crate::oracle::Oracle).
//!
//! Both solvers record every oracle evaluation in a [`SolverTrace`] and
//! return the lowest-loss weights seen when the loss threshold is never hit.

mod ida;
mod rs;

pub use ida::{ida_run, BaselineMode, IdaParams};
pub use rs::{policy_gradient, rs_run, RewardBaseline, RsParams};

use std::fmt;

use crate::distribution::{frequency_loss, normalize_frequency, FrequencyVector, NormalizedDistribution, WeightVector};
use crate::error::Error;
use crate::oracle::{Oracle, OracleConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardStats<S: Scalar = f64> {
    pub mean: S,
    pub min: S,
    pub max: S,
}

impl<S: Scalar> RewardStats<S> {
    pub fn of(rewards: &[S]) -> Option<Self> {
        if rewards.is_empty() {
            return None;
        }
        let sum: S = rewards.iter().copied().sum();
        Some(Self {
            mean: sum / S::from_count(rewards.len() as u64),
            min: rewards.iter().copied().fold(S::infinity(), S::min),
            max: rewards.iter().copied().fold(S::neg_infinity(), S::max),
        })
    }
}

/// One oracle evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<S: Scalar = f64> {
    /// Evaluation index, 0-based and strictly increasing.
    pub t: usize,
    /// Solver iteration the evaluation belongs to. Equals `t` for IDA; the
    /// policy-gradient solver evaluates a whole population per iteration.
    pub iteration: usize,
    pub a: WeightVector<S>,
    pub counts: FrequencyVector,
    pub sbar: NormalizedDistribution<S>,
    pub kl: S,
    pub reward_stats: Option<RewardStats<S>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverTrace<S: Scalar = f64> {
    records: Vec<TraceRecord<S>>,
}

impl<S: Scalar> SolverTrace<S> {
    pub fn new() -> Self {
        Self { records: Vec::new() }
    }

    /// Appends an evaluation; `t` is assigned from the position.
    pub(crate) fn push(
        &mut self,
        iteration: usize,
        a: WeightVector<S>,
        counts: FrequencyVector,
        sbar: NormalizedDistribution<S>,
        kl: S,
        reward_stats: Option<RewardStats<S>>,
    ) -> &TraceRecord<S> {
        let t = self.records.len();
        self.records.push(TraceRecord {
            t,
            iteration,
            a,
            counts,
            sbar,
            kl,
            reward_stats,
        });
        &self.records[t]
    }

    pub fn records(&self) -> &[TraceRecord<S>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord<S>> {
        self.records.last()
    }

    /// Lowest-loss evaluation, earliest on ties.
    pub fn best(&self) -> Option<&TraceRecord<S>> {
        self.records
            .iter()
            .fold(None, |best: Option<&TraceRecord<S>>, r| match best {
                Some(b) if b.kl <= r.kl => Some(b),
                _ => Some(r),
            })
    }

    /// Mean loss over the evaluations of each iteration, in iteration order.
    pub fn iteration_mean_losses(&self) -> Vec<(usize, S)> {
        let mut out: Vec<(usize, S, u64)> = Vec::new();
        for r in &self.records {
            match out.last_mut() {
                Some((it, sum, count)) if *it == r.iteration => {
                    *sum += r.kl;
                    *count += 1;
                }
                _ => out.push((r.iteration, r.kl, 1)),
            }
        }
        out.into_iter()
            .map(|(it, sum, count)| (it, sum / S::from_count(count)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutcome<S: Scalar = f64> {
    /// Weights that met the threshold, or the lowest-loss weights evaluated.
    pub weights: WeightVector<S>,
    pub trace: SolverTrace<S>,
    pub converged: bool,
}

impl<S: Scalar> SolverOutcome<S> {
    pub fn best_kl(&self) -> S {
        self.trace.best().map_or(S::infinity(), |r| r.kl)
    }
}

/// A failed run together with every evaluation completed before the failure.
#[derive(Debug, Clone)]
pub struct SolverError<S: Scalar = f64> {
    pub source: Error,
    pub trace: SolverTrace<S>,
}

impl<S: Scalar> fmt::Display for SolverError<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} evaluations)", self.source, self.trace.len())
    }
}

impl<S: Scalar> std::error::Error for SolverError<S> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl<S: Scalar> SolverError<S> {
    pub(crate) fn new(source: Error, trace: SolverTrace<S>) -> Self {
        Self { source, trace }
    }
}

/// Evaluation plus its loss.
pub(crate) struct Scored<S: Scalar> {
    pub counts: FrequencyVector,
    pub sbar: NormalizedDistribution<S>,
    pub kl: S,
}

pub(crate) fn score<S: Scalar>(counts: FrequencyVector, arity: usize) -> Result<Scored<S>, Error> {
    if counts.len() != arity {
        return Err(Error::Protocol(format!(
            "oracle returned {} counts for {arity} groups",
            counts.len()
        )));
    }
    let sbar = normalize_frequency(&counts)?;
    let kl = frequency_loss(&counts)?;
    Ok(Scored { counts, sbar, kl })
}

pub(crate) fn evaluate_scored<S: Scalar, O: Oracle<S> + ?Sized>(
    oracle: &O,
    a: &WeightVector<S>,
    cfg: &OracleConfig,
) -> Result<Scored<S>, Error> {
    let counts = oracle.evaluate(a, cfg)?;
    check_total(&counts, cfg)?;
    score(counts, oracle.arity())
}

pub(crate) fn check_total(counts: &FrequencyVector, cfg: &OracleConfig) -> Result<(), Error> {
    if counts.total() != cfg.num_samples {
        return Err(Error::Protocol(format!(
            "oracle returned {} samples, expected {}",
            counts.total(),
            cfg.num_samples
        )));
    }
    Ok(())
}

pub(crate) fn check_arity<S: Scalar, O: Oracle<S> + ?Sized>(oracle: &O, n: usize) -> Result<(), Error> {
    if oracle.arity() != n {
        return Err(Error::InvalidInput(format!(
            "solver configured for {n} groups but oracle has {}",
            oracle.arity()
        )));
    }
    Ok(())
}
