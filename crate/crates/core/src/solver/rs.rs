use std::fmt;
use std::str::FromStr;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::WeightVector;
use crate::error::{Error, Result};
use crate::oracle::{Oracle, OracleConfig};
use crate::scalar::Scalar;
use crate::solver::{check_arity, evaluate_scored, RewardStats, SolverError, SolverOutcome, SolverTrace};

/// Reward baseline `v_t` subtracted before the policy-gradient update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardBaseline {
    None,
    #[default]
    Mean,
    Min,
}

impl fmt::Display for RewardBaseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardBaseline::None => "none",
            RewardBaseline::Mean => "mean",
            RewardBaseline::Min => "min",
        })
    }
}

impl FromStr for RewardBaseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(RewardBaseline::None),
            "mean" => Ok(RewardBaseline::Mean),
            "min" => Ok(RewardBaseline::Min),
            other => Err(Error::InvalidConfig(format!("unknown reward baseline {other:?}"))),
        }
    }
}

impl RewardBaseline {
    fn value<S: Scalar>(self, rewards: &[S]) -> S {
        match self {
            RewardBaseline::None => S::zero(),
            // Offsets from the first reward, so equal rewards give exactly that reward.
            RewardBaseline::Mean => {
                let Some(&r0) = rewards.first() else { return S::zero() };
                r0 + rewards.iter().map(|&r| r - r0).sum::<S>() / S::from_count(rewards.len() as u64)
            }
            RewardBaseline::Min => rewards.iter().copied().fold(S::infinity(), S::min),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsParams<S: Scalar = f64> {
    /// Learning rate.
    pub eta: S,
    /// Candidates drawn per iteration.
    pub population: usize,
    pub max_iters: usize,
    /// Stop once the summed candidate loss of an iteration drops below this.
    /// Scale it with `population`.
    pub threshold: S,
    pub baseline: RewardBaseline,
    /// Momentum coefficient in [0, 1).
    pub momentum: S,
    /// Seed for the initial policy mean and the candidate draws.
    pub init_seed: u64,
}

impl<S: Scalar> Default for RsParams<S> {
    fn default() -> Self {
        Self {
            eta: S::lit(0.01),
            population: 60,
            max_iters: 1000,
            threshold: S::lit(0.3),
            baseline: RewardBaseline::Mean,
            momentum: S::lit(0.9),
            init_seed: 0,
        }
    }
}

impl<S: Scalar> RsParams<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > S::zero() && self.eta.is_finite()) {
            return Err(Error::InvalidConfig("eta must be finite and > 0".into()));
        }
        if self.population == 0 {
            return Err(Error::InvalidConfig("population must be >= 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.threshold > S::zero()) {
            return Err(Error::InvalidConfig("threshold must be > 0".into()));
        }
        if !(self.momentum >= S::zero() && self.momentum < S::one()) {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Score-function estimate `sum_k (R_k - v) (a_k - A)` for the unit-variance
/// Gaussian policy centred at `center`.
pub fn policy_gradient<S: Scalar>(
    center: &[S],
    candidates: &[WeightVector<S>],
    rewards: &[S],
    baseline: RewardBaseline,
) -> Vec<S> {
    assert_eq!(candidates.len(), rewards.len(), "one reward per candidate");
    let v = baseline.value(rewards);
    let mut grad = vec![S::zero(); center.len()];
    for (cand, &r) in candidates.iter().zip(rewards) {
        let adv = r - v;
        for ((g, &ak), &c) in grad.iter_mut().zip(cand.as_slice()).zip(center) {
            *g += adv * (ak - c);
        }
    }
    grad
}

fn normal_vec<S: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vec<S> {
    (0..n).map(|_| S::lit(rng.sample::<f64, _>(StandardNormal))).collect()
}

/// Policy-gradient solver over a Gaussian search distribution `N(A, I)` with
/// reward `exp(-KL)`, optional reward baseline and momentum.
///
/// Every candidate evaluation lands in the trace; `iteration` groups the
/// candidates of one population. A ChaCha8 stream seeded with `init_seed`
/// supplies the initial mean (`n` standard normals) followed by the noise of
/// each candidate in order.
pub fn rs_run<S: Scalar, O: Oracle<S> + ?Sized>(
    oracle: &O,
    n: usize,
    params: &RsParams<S>,
    cfg: &OracleConfig,
) -> Result<SolverOutcome<S>, SolverError<S>> {
    let mut trace = SolverTrace::new();
    if let Err(e) = params.validate().and_then(|_| check_arity(oracle, n)) {
        return Err(SolverError::new(e, trace));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.init_seed);
    let mut center: Vec<S> = normal_vec(&mut rng, n);
    let mut velocity = vec![S::zero(); n];
    let k = params.population;

    for it in 0..params.max_iters {
        let candidates: Vec<WeightVector<S>> = (0..k)
            .map(|_| {
                let noise = normal_vec::<S>(&mut rng, n);
                let a = center.iter().zip(noise).map(|(&c, z)| c + z).collect();
                WeightVector::new(a)
            })
            .collect::<Result<_>>()
            .map_err(|e| SolverError::new(e, trace.clone()))?;

        let base = (it * k) as u64;
        let results: Vec<_> = candidates
            .par_iter()
            .enumerate()
            .map(|(j, a)| evaluate_scored(oracle, a, &cfg.derive(base + j as u64)))
            .collect();

        let mut scored = Vec::with_capacity(k);
        for r in results {
            match r {
                Ok(s) => scored.push(s),
                Err(e) => {
                    for (a, s) in candidates.iter().zip(scored) {
                        trace.push(it, a.clone(), s.counts, s.sbar, s.kl, None);
                    }
                    return Err(SolverError::new(e, trace));
                }
            }
        }

        let losses: Vec<S> = scored.iter().map(|s| s.kl).collect();
        let rewards: Vec<S> = losses.iter().map(|&e| (-e).exp()).collect();
        let stats = RewardStats::of(&rewards);
        let total_loss: S = losses.iter().copied().sum();
        for (a, s) in candidates.iter().zip(scored) {
            trace.push(it, a.clone(), s.counts, s.sbar, s.kl, stats);
        }
        if it % 50 == 0 {
            info!(
                "rs iter={it} mean_kl={:.6} best_kl={:.6}",
                total_loss / S::from_count(k as u64),
                trace.best().map_or(S::nan(), |r| r.kl)
            );
        }
        if total_loss < params.threshold {
            let best = trace.best().expect("population evaluated").a.clone();
            return Ok(SolverOutcome {
                weights: best,
                trace,
                converged: true,
            });
        }

        let grad = policy_gradient(&center, &candidates, &rewards, params.baseline);
        for ((c, v), g) in center.iter_mut().zip(&mut velocity).zip(grad) {
            *v = params.momentum * *v + g;
            *c += params.eta * *v;
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(SolverError::new(
                Error::NumericDegenerate(format!("policy mean diverged at iteration {it}")),
                trace,
            ));
        }
    }

    let best = trace.best().expect("at least one evaluation").a.clone();
    Ok(SolverOutcome {
        weights: best,
        trace,
        converged: false,
    })
}
