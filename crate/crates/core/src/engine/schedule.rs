use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Noise schedule for T diffusion steps. Step indices are 1-based: step `t`
/// lives at position `t - 1` of every vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule<S: Scalar = f64> {
    betas: Vec<S>,
    alphas: Vec<S>,
    alpha_bars: Vec<S>,
    sigmas: Vec<S>,
}

impl<S: Scalar> DiffusionSchedule<S> {
    /// Linear betas from `beta_start` to `beta_end` inclusive, with
    /// `sigma_t = sqrt(beta_t)`.
    pub fn linear(steps: usize, beta_start: S, beta_end: S) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidConfig("schedule needs at least one step".into()));
        }
        if !(beta_start > S::zero() && beta_start <= beta_end && beta_end < S::one()) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < beta_start <= beta_end < 1, got [{beta_start}, {beta_end}]"
            )));
        }
        let betas: Vec<S> = if steps == 1 {
            vec![beta_start]
        } else {
            let span = beta_end - beta_start;
            let denom = S::from_count(steps as u64 - 1);
            (0..steps)
                .map(|i| beta_start + span * S::from_count(i as u64) / denom)
                .collect()
        };
        let sigmas = betas.iter().map(|b| b.sqrt()).collect();
        Self::from_parts(betas, sigmas)
    }

    /// Arbitrary betas and per-step sampling noise scales.
    pub fn from_parts(betas: Vec<S>, sigmas: Vec<S>) -> Result<Self> {
        if betas.is_empty() || betas.len() != sigmas.len() {
            return Err(Error::InvalidConfig(format!(
                "{} betas but {} sigmas",
                betas.len(),
                sigmas.len()
            )));
        }
        if betas.iter().any(|&b| !(b > S::zero() && b < S::one())) {
            return Err(Error::InvalidConfig("every beta must lie in (0, 1)".into()));
        }
        if sigmas.iter().any(|&s| !(s >= S::zero() && s.is_finite())) {
            return Err(Error::InvalidConfig("sigmas must be finite and non-negative".into()));
        }
        let alphas: Vec<S> = betas.iter().map(|&b| S::one() - b).collect();
        let alpha_bars: Vec<S> = alphas
            .iter()
            .scan(S::one(), |acc, &a| {
                *acc *= a;
                Some(*acc)
            })
            .collect();
        if alpha_bars.iter().any(|&ab| !(ab > S::zero())) {
            return Err(Error::InvalidConfig("cumulative alpha underflowed to zero".into()));
        }
        Ok(Self {
            betas,
            alphas,
            alpha_bars,
            sigmas,
        })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta(&self, t: usize) -> S {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> S {
        self.alphas[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> S {
        self.alpha_bars[t - 1]
    }

    pub fn sigma(&self, t: usize) -> S {
        self.sigmas[t - 1]
    }

    pub fn alpha_bars(&self) -> &[S] {
        &self.alpha_bars
    }

    pub(crate) fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::InvalidInput(format!(
                "step {t} outside 1..={}",
                self.steps()
            )));
        }
        Ok(())
    }
}
