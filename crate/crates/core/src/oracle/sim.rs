use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::distribution::{softmax, FrequencyVector, NormalizedDistribution, WeightVector};
use crate::error::{Error, Result};
use crate::oracle::{apportion, check_request, BackendKind, Oracle, OracleConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOracleSpec {
    pub n: usize,
    pub hidden_dim: usize,
    pub weight_seed: u64,
    /// Draw multinomial counts instead of apportioning the exact probabilities.
    pub sample_noise: bool,
}

/// One-hidden-layer network `softmax(W2 tanh(W1 a + b1) + b2)` with fixed
/// random weights, used as a smooth stand-in for a generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOracle<S: Scalar = f64> {
    w1: Vec<Vec<S>>,
    b1: Vec<S>,
    w2: Vec<Vec<S>>,
    b2: Vec<S>,
    sample_noise: bool,
}

pub fn make_sim_oracle<S: Scalar>(spec: &SimOracleSpec) -> Result<SimOracle<S>> {
    SimOracle::new(spec)
}

impl<S: Scalar> SimOracle<S> {
    /// W entries are N(0, 1) / sqrt(fan_in), biases N(0, 1), drawn in the
    /// order W1 (row-major), b1, W2, b2 from `weight_seed`.
    pub fn new(spec: &SimOracleSpec) -> Result<Self> {
        if spec.n < 2 {
            return Err(Error::InvalidConfig(format!("sim oracle needs n >= 2, got {}", spec.n)));
        }
        if spec.hidden_dim == 0 {
            return Err(Error::InvalidConfig("hidden_dim must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.weight_seed);
        let mut normal = |scale: f64| {
            let z: f64 = StandardNormal.sample(&mut rng);
            S::lit(z * scale)
        };
        let s1 = 1.0 / (spec.n as f64).sqrt();
        let w1 = (0..spec.hidden_dim)
            .map(|_| (0..spec.n).map(|_| normal(s1)).collect())
            .collect();
        let b1 = (0..spec.hidden_dim).map(|_| normal(1.0)).collect();
        let s2 = 1.0 / (spec.hidden_dim as f64).sqrt();
        let w2 = (0..spec.n)
            .map(|_| (0..spec.hidden_dim).map(|_| normal(s2)).collect())
            .collect();
        let b2 = (0..spec.n).map(|_| normal(1.0)).collect();
        Ok(Self {
            w1,
            b1,
            w2,
            b2,
            sample_noise: spec.sample_noise,
        })
    }

    /// Network with every weight and bias zero, mapping any input to uniform.
    pub fn zeroed(n: usize, hidden_dim: usize, sample_noise: bool) -> Self {
        Self {
            w1: vec![vec![S::zero(); n]; hidden_dim],
            b1: vec![S::zero(); hidden_dim],
            w2: vec![vec![S::zero(); hidden_dim]; n],
            b2: vec![S::zero(); n],
            sample_noise,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.b1.len()
    }

    pub fn probabilities(&self, a: &WeightVector<S>) -> Result<NormalizedDistribution<S>> {
        if a.len() != self.arity() {
            return Err(Error::InvalidInput(format!(
                "weight vector has {} entries but network takes {}",
                a.len(),
                self.arity()
            )));
        }
        let hidden: Vec<S> = self
            .w1
            .iter()
            .zip(&self.b1)
            .map(|(row, &b)| (row.iter().zip(a.as_slice()).map(|(&w, &x)| w * x).sum::<S>() + b).tanh())
            .collect();
        let logits: Vec<S> = self
            .w2
            .iter()
            .zip(&self.b2)
            .map(|(row, &b)| row.iter().zip(&hidden).map(|(&w, &h)| w * h).sum::<S>() + b)
            .collect();
        softmax(&logits)
    }
}

impl<S: Scalar> Oracle<S> for SimOracle<S> {
    fn arity(&self) -> usize {
        self.b2.len()
    }

    fn backend(&self) -> BackendKind {
        BackendKind::SoftmaxSim
    }

    fn evaluate(&self, a: &WeightVector<S>, cfg: &OracleConfig) -> Result<FrequencyVector> {
        check_request(self, a, cfg)?;
        let p: Vec<f64> = self.probabilities(a)?.probs().iter().map(|v| v.as_f64()).collect();
        let counts = if self.sample_noise {
            multinomial(&p, cfg.num_samples, cfg.seed)?
        } else {
            apportion(&p, cfg.num_samples)
        };
        FrequencyVector::new(counts)
    }
}

/// Multinomial draw by sequential conditional binomials.
fn multinomial(p: &[f64], total: u64, seed: u64) -> Result<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; p.len()];
    let mut left = total;
    let mut mass = 1.0f64;
    for (i, &pi) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == p.len() {
            counts[i] = left;
            break;
        }
        let q = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(left, q)
            .map_err(|e| Error::NumericDegenerate(format!("binomial({left}, {q}): {e}")))?
            .sample(&mut rng);
        counts[i] = draw;
        left -= draw;
        mass -= pi;
    }
    Ok(counts)
}
