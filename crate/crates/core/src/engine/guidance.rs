//! Guided noise estimates: classifier-free guidance and the safety-guided
//! variant that steers away from an "unsafe" condition built from weighted
//! attribute directions.

use crate::distribution::{AttributeSet, NormalizedDistribution, WeightVector};
use crate::engine::mixture::{ConditionSpec, MixtureModel};
use crate::engine::schedule::DiffusionSchedule;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Scalars of the guided estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceParams<S: Scalar = f64> {
    /// Prompt guidance scale `s_g`.
    pub guidance_scale: S,
    /// Safety guidance scale `s_S`.
    pub safety_scale: S,
    /// Element-wise gate threshold `lambda`.
    pub threshold: S,
    /// Reverse steps, counted from the start of sampling, without safety guidance.
    pub warmup: usize,
}

impl<S: Scalar> Default for GuidanceParams<S> {
    fn default() -> Self {
        Self {
            guidance_scale: S::lit(7.5),
            safety_scale: S::lit(1.5),
            threshold: S::lit(0.01),
            warmup: 0,
        }
    }
}

impl<S: Scalar> GuidanceParams<S> {
    pub fn validate(&self, steps: usize) -> Result<()> {
        if !self.guidance_scale.is_finite() || self.guidance_scale < S::zero() {
            return Err(Error::InvalidConfig("guidance_scale must be finite and >= 0".into()));
        }
        if !self.safety_scale.is_finite() || self.safety_scale < S::zero() {
            return Err(Error::InvalidConfig("safety_scale must be finite and >= 0".into()));
        }
        if self.threshold.is_nan() {
            return Err(Error::InvalidConfig("threshold is NaN".into()));
        }
        if self.warmup > steps {
            return Err(Error::InvalidConfig(format!(
                "warmup {} exceeds {steps} diffusion steps",
                self.warmup
            )));
        }
        Ok(())
    }

    /// Same parameters with the safety term switched off.
    pub fn without_safety(mut self) -> Self {
        self.safety_scale = S::zero();
        self
    }
}

/// Builds the unsafe condition `u = sum_i softmax(a)_i g_i`.
pub fn compose_unsafe<S: Scalar>(a: &WeightVector<S>, attrs: &AttributeSet<S>) -> Result<ConditionSpec<S>> {
    if a.len() != attrs.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} attribute groups",
            a.len(),
            attrs.len()
        )));
    }
    let weights = a.softmax();
    let mut u = vec![S::zero(); attrs.direction_dim()];
    for (&w, g) in weights.probs().iter().zip(attrs.directions()) {
        for (ui, &gi) in u.iter_mut().zip(g) {
            *ui += w * gi;
        }
    }
    if let Some(i) = u.iter().position(|&v| v < S::zero()) {
        return Err(Error::InvalidDirection(format!(
            "combined direction has negative entry {} at {i}",
            u[i]
        )));
    }
    NormalizedDistribution::new(u)
        .map(ConditionSpec::new)
        .map_err(|e| Error::InvalidDirection(e.to_string()))
}

/// Both estimates share `eps_u + s_g (eps_p - eps_u)` written as
/// `eps_p + (s_g - 1)(eps_p - eps_u)`, which is exact for `s_g = 1` and for
/// `eps_p = eps_u`.
fn cfg_combine<S: Scalar>(eps_u: &[S], eps_p: &[S], guidance_scale: S) -> Vec<S> {
    let k = guidance_scale - S::one();
    eps_p
        .iter()
        .zip(eps_u)
        .map(|(&p, &u)| p + k * (p - u))
        .collect()
}

/// Classifier-free guided estimate `eps(z) + s_g (eps(z, c_p) - eps(z))`.
pub fn cfg_epsilon<S: Scalar>(
    z: &[S],
    t: usize,
    prompt: &ConditionSpec<S>,
    params: &GuidanceParams<S>,
    mix: &MixtureModel<S>,
    sched: &DiffusionSchedule<S>,
) -> Result<Vec<S>> {
    let eps_u = mix.conditional_epsilon(z, t, &mix.unconditioned(), sched)?;
    let eps_p = mix.conditional_epsilon(z, t, prompt, sched)?;
    Ok(cfg_combine(&eps_u, &eps_p, params.guidance_scale))
}

/// Safety-guided estimate
/// `eps(z) + s_g (eps(z, c_p) - eps(z) - gamma(z, c_p, c_S))` where
/// `gamma_j = s_S (eps(z, c_S) - eps(z))_j` wherever
/// `(eps(z, c_p) - eps(z, c_S))_j < lambda`, zero elsewhere and zero
/// throughout warmup.
#[allow(clippy::too_many_arguments)]
pub fn sld_epsilon<S: Scalar>(
    z: &[S],
    t: usize,
    prompt: &ConditionSpec<S>,
    unsafe_cond: &ConditionSpec<S>,
    params: &GuidanceParams<S>,
    mix: &MixtureModel<S>,
    sched: &DiffusionSchedule<S>,
    step_from_start: usize,
) -> Result<Vec<S>> {
    let eps_u = mix.conditional_epsilon(z, t, &mix.unconditioned(), sched)?;
    let eps_p = mix.conditional_epsilon(z, t, prompt, sched)?;
    let mut out = cfg_combine(&eps_u, &eps_p, params.guidance_scale);
    if step_from_start < params.warmup || params.safety_scale == S::zero() {
        return Ok(out);
    }
    let eps_s = mix.conditional_epsilon(z, t, unsafe_cond, sched)?;
    for j in 0..out.len() {
        if eps_p[j] - eps_s[j] < params.threshold {
            let gamma = params.safety_scale * (eps_s[j] - eps_u[j]);
            out[j] -= params.guidance_scale * gamma;
        }
    }
    Ok(out)
}
