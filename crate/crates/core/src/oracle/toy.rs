use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distribution::{AttributeSet, FrequencyVector, WeightVector};
use crate::engine::{compose_unsafe, reverse_sample, ConditionSpec, DiffusionSchedule, GuidanceParams, MixtureModel};
use crate::error::{Error, Result};
use crate::oracle::{check_request, stream_seed, BackendKind, Oracle, OracleConfig};
use crate::scalar::Scalar;

/// Generates samples from the guided mixture diffusion and classifies each
/// clean sample to its most probable component.
#[derive(Debug, Clone)]
pub struct ToyDiffusionOracle<S: Scalar = f64> {
    mixture: MixtureModel<S>,
    schedule: DiffusionSchedule<S>,
    params: GuidanceParams<S>,
    attrs: AttributeSet<S>,
    prompt: ConditionSpec<S>,
}

impl<S: Scalar> ToyDiffusionOracle<S> {
    /// The prompt condition defaults to the mixture prior.
    pub fn new(
        labels: Vec<String>,
        mixture: MixtureModel<S>,
        schedule: DiffusionSchedule<S>,
        params: GuidanceParams<S>,
    ) -> Result<Self> {
        if labels.len() != mixture.components() {
            return Err(Error::InvalidConfig(format!(
                "{} labels but mixture has {} components",
                labels.len(),
                mixture.components()
            )));
        }
        params.validate(schedule.steps())?;
        let prompt = mixture.unconditioned();
        Ok(Self {
            attrs: AttributeSet::one_hot(labels)?,
            mixture,
            schedule,
            params,
            prompt,
        })
    }

    pub fn with_prompt(mut self, prompt: ConditionSpec<S>) -> Result<Self> {
        if prompt.len() != self.mixture.components() {
            return Err(Error::InvalidConfig(format!(
                "prompt has {} weights but mixture has {} components",
                prompt.len(),
                self.mixture.components()
            )));
        }
        self.prompt = prompt;
        Ok(self)
    }

    pub fn mixture(&self) -> &MixtureModel<S> {
        &self.mixture
    }

    pub fn params(&self) -> &GuidanceParams<S> {
        &self.params
    }

    pub fn labels(&self) -> &[String] {
        self.attrs.labels()
    }

    fn generate(&self, unsafe_cond: &ConditionSpec<S>, params: &GuidanceParams<S>, cfg: &OracleConfig) -> Result<FrequencyVector> {
        let labels: Vec<usize> = (0..cfg.num_samples)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, k));
                let x0 = reverse_sample(&mut rng, &self.prompt, unsafe_cond, params, &self.mixture, &self.schedule)?;
                Ok(self.mixture.classify(&x0))
            })
            .collect::<Result<_>>()?;
        let mut counts = vec![0u64; self.arity()];
        for i in labels {
            counts[i] += 1;
        }
        FrequencyVector::new(counts)
    }
}

impl<S: Scalar> Oracle<S> for ToyDiffusionOracle<S> {
    fn arity(&self) -> usize {
        self.attrs.len()
    }

    fn backend(&self) -> BackendKind {
        BackendKind::ToyDiffusion
    }

    fn evaluate(&self, a: &WeightVector<S>, cfg: &OracleConfig) -> Result<FrequencyVector> {
        check_request(self, a, cfg)?;
        let unsafe_cond = compose_unsafe(a, &self.attrs)?;
        self.generate(&unsafe_cond, &self.params, cfg)
    }

    fn evaluate_unguided(&self, cfg: &OracleConfig) -> Result<FrequencyVector> {
        let zeros = WeightVector::zeros(self.arity());
        check_request(self, &zeros, cfg)?;
        let params = self.params.without_safety();
        self.generate(&self.prompt, &params, cfg)
    }
}
