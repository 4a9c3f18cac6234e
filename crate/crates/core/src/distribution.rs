//! Domain types for attribute groups and the distribution math that scores
//! a generator's output: softmax over weights, frequency normalization and
//! the KL divergence to the uniform distribution.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The n attribute groups together with their guidance directions `g_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSet<S: Scalar = f64> {
    labels: Vec<String>,
    directions: Vec<Vec<S>>,
}

impl<S: Scalar> AttributeSet<S> {
    pub fn new(labels: Vec<String>, directions: Vec<Vec<S>>) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "attribute set needs at least 2 groups, got {n}"
            )));
        }
        if directions.len() != n {
            return Err(Error::InvalidInput(format!(
                "{n} labels but {} direction vectors",
                directions.len()
            )));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if label.is_empty() {
                return Err(Error::InvalidInput("empty group label".into()));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate group label {label:?}")));
            }
        }
        let dim = directions[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("direction vectors must be non-empty".into()));
        }
        if let Some(bad) = directions.iter().position(|g| g.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "direction {bad} has dimension {} but direction 0 has {dim}",
                directions[bad].len()
            )));
        }
        if directions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite direction entry".into()));
        }
        Ok(Self { labels, directions })
    }

    /// Groups whose directions are the standard basis vectors `e_i`.
    pub fn one_hot(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        let directions = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { S::one() } else { S::zero() })
                    .collect()
            })
            .collect();
        Self::new(labels, directions)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn directions(&self) -> &[Vec<S>] {
        &self.directions
    }

    pub fn direction_dim(&self) -> usize {
        self.directions[0].len()
    }
}

/// The optimization variable: one finite coefficient per attribute group.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<S: Scalar = f64>(Vec<S>);

impl<S: Scalar> WeightVector<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("weight a_{i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![S::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<S> {
        self.0
    }

    pub fn sum(&self) -> S {
        self.0.iter().copied().sum()
    }

    /// Softmax of the weights. Cannot fail since entries are finite.
    pub fn softmax(&self) -> NormalizedDistribution<S> {
        softmax(&self.0).expect("weight vector entries are finite")
    }
}

/// Raw class counts `s` produced by one evaluation of a generator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrequencyVector {
    counts: Vec<u64>,
    total: u64,
}

impl FrequencyVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        let total = counts.iter().try_fold(0u64, |acc, &c| acc.checked_add(c));
        match total {
            None => Err(Error::InvalidInput("count total overflows u64".into())),
            Some(0) => Err(Error::EmptySample),
            Some(total) => Ok(Self { counts, total }),
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// A probability vector over the n groups.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDistribution<S: Scalar = f64>(Vec<S>);

impl<S: Scalar> NormalizedDistribution<S> {
    /// Validates entries in [0, 1] summing to one within [`Scalar::norm_tol`].
    pub fn new(probs: Vec<S>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        if let Some(i) = probs
            .iter()
            .position(|&p| !p.is_finite() || p < S::zero() || p > S::one())
        {
            return Err(Error::InvalidInput(format!(
                "probability p_{i} = {} outside [0, 1]",
                probs[i]
            )));
        }
        let sum: S = probs.iter().copied().sum();
        if (sum - S::one()).abs() > S::norm_tol() {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self(probs))
    }

    /// Divides non-negative weights by their sum.
    pub fn from_weights(weights: &[S]) -> Result<Self> {
        if weights.iter().any(|&w| !w.is_finite() || w < S::zero()) {
            return Err(Error::InvalidInput(
                "weights must be finite and non-negative".into(),
            ));
        }
        let sum: S = weights.iter().copied().sum();
        if !(sum > S::zero()) {
            return Err(Error::InvalidInput("weights sum to zero".into()));
        }
        Self::new(weights.iter().map(|&w| w / sum).collect())
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over zero groups");
        let p = S::one() / S::from_count(n as u64);
        Self(vec![p; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probs(&self) -> &[S] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<S> {
        self.0
    }

    /// The residual `p_i - 1/n` that drives the alignment update.
    pub fn residual_from_uniform(&self) -> Vec<S> {
        let u = S::one() / S::from_count(self.0.len() as u64);
        self.0.iter().map(|&p| p - u).collect()
    }
}

/// Softmax with max-subtraction.
pub fn softmax<S: Scalar>(values: &[S]) -> Result<NormalizedDistribution<S>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("softmax of empty vector".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("softmax input {i} is not finite")));
    }
    let max = values.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = values.iter().map(|&v| (v - max).exp()).collect();
    let denom: S = exps.iter().copied().sum();
    // denom >= 1 because the max entry contributes exp(0)
    Ok(NormalizedDistribution(exps.into_iter().map(|e| e / denom).collect()))
}

pub fn normalize_frequency<S: Scalar>(s: &FrequencyVector) -> Result<NormalizedDistribution<S>> {
    if s.total == 0 {
        return Err(Error::EmptySample);
    }
    let total = S::from_count(s.total);
    Ok(NormalizedDistribution(
        s.counts.iter().map(|&c| S::from_count(c) / total).collect(),
    ))
}

/// `sum_i p_i ln(n p_i)` with `0 ln 0 = 0`.
pub fn kl_to_uniform<S: Scalar>(p: &NormalizedDistribution<S>) -> S {
    let n = S::from_count(p.len() as u64);
    let kl: S = p
        .0
        .iter()
        .filter(|&&pi| pi > S::zero())
        .map(|&pi| pi * (n * pi).ln())
        .sum();
    // Rounding can leave a tiny negative value for near-uniform input.
    kl.max(S::zero())
}

/// KL-to-uniform of raw class counts.
pub fn frequency_loss<S: Scalar>(s: &FrequencyVector) -> Result<S> {
    normalize_frequency::<S>(s).map(|p| kl_to_uniform(&p))
}
