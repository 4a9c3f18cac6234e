use rand::Rng;
use rand_distr::StandardNormal;

use crate::engine::guidance::{sld_epsilon, GuidanceParams};
use crate::engine::mixture::{ConditionSpec, MixtureModel};
use crate::engine::schedule::DiffusionSchedule;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn standard_normal<S: Scalar, R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<S> {
    (0..d)
        .map(|_| S::lit(rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

/// Ancestral sampling from `x_T ~ N(0, I)` down to a clean sample `x_0`
/// using the safety-guided noise estimate at every step.
pub fn reverse_sample<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    prompt: &ConditionSpec<S>,
    unsafe_cond: &ConditionSpec<S>,
    params: &GuidanceParams<S>,
    mix: &MixtureModel<S>,
    sched: &DiffusionSchedule<S>,
) -> Result<Vec<S>> {
    let steps = sched.steps();
    let mut x = standard_normal::<S, R>(rng, mix.dim());
    for t in (1..=steps).rev() {
        let eps = sld_epsilon(&x, t, prompt, unsafe_cond, params, mix, sched, steps - t)?;
        let coef = sched.beta(t) / (S::one() - sched.alpha_bar(t)).sqrt();
        let inv_sqrt_alpha = S::one() / sched.alpha(t).sqrt();
        for (xj, &ej) in x.iter_mut().zip(&eps) {
            *xj = (*xj - coef * ej) * inv_sqrt_alpha;
        }
        if t > 1 {
            let sigma = sched.sigma(t);
            let noise = standard_normal::<S, R>(rng, x.len());
            for (xj, nj) in x.iter_mut().zip(noise) {
                *xj += sigma * nj;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: t });
        }
    }
    Ok(x)
}
