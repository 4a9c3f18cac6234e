use crate::distribution::NormalizedDistribution;
use crate::engine::schedule::DiffusionSchedule;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Isotropic Gaussian mixture standing in for the clean data distribution.
/// Component `i` is group `i`; `prior` is the (biased) share of each group.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel<S: Scalar = f64> {
    means: Vec<Vec<S>>,
    component_std: S,
    prior: NormalizedDistribution<S>,
}

/// A condition, i.e. a distribution over mixture components. The
/// unconditioned model is the condition equal to the prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSpec<S: Scalar = f64> {
    pub weights: NormalizedDistribution<S>,
}

impl<S: Scalar> ConditionSpec<S> {
    pub fn new(weights: NormalizedDistribution<S>) -> Self {
        Self { weights }
    }

    pub fn one_hot(n: usize, i: usize) -> Self {
        let mut w = vec![S::zero(); n];
        w[i] = S::one();
        Self {
            weights: NormalizedDistribution::new(w).expect("one-hot is a distribution"),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl<S: Scalar> MixtureModel<S> {
    pub fn new(means: Vec<Vec<S>>, component_std: S, prior: NormalizedDistribution<S>) -> Result<Self> {
        if means.len() != prior.len() {
            return Err(Error::InvalidConfig(format!(
                "{} component means but prior has {} entries",
                means.len(),
                prior.len()
            )));
        }
        let d = means.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::InvalidConfig("mixture needs at least one component of dimension >= 1".into()));
        }
        if means.iter().any(|m| m.len() != d) {
            return Err(Error::InvalidConfig("component means differ in dimension".into()));
        }
        if means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite component mean".into()));
        }
        for i in 0..means.len() {
            for j in 0..i {
                if means[i] == means[j] {
                    return Err(Error::InvalidConfig(format!(
                        "components {j} and {i} share the same mean"
                    )));
                }
            }
        }
        if !(component_std > S::zero() && component_std.is_finite()) {
            return Err(Error::InvalidConfig("component_std must be positive".into()));
        }
        Ok(Self {
            means,
            component_std,
            prior,
        })
    }

    /// Two-dimensional mixture with means at equal angles on the unit circle,
    /// the first one at angle `phase` (radians).
    pub fn on_unit_circle(prior: NormalizedDistribution<S>, component_std: S, phase: S) -> Result<Self> {
        let n = prior.len();
        let step = S::TAU() / S::from_count(n as u64);
        let means = (0..n)
            .map(|i| {
                let angle = phase + step * S::from_count(i as u64);
                vec![angle.cos(), angle.sin()]
            })
            .collect();
        Self::new(means, component_std, prior)
    }

    /// `n`-dimensional mixture with mean `i` at `radius * e_i`. Every pair of
    /// means is `radius * sqrt(2)` apart and each group owns one coordinate.
    pub fn on_axes(prior: NormalizedDistribution<S>, component_std: S, radius: S) -> Result<Self> {
        let n = prior.len();
        let means = (0..n)
            .map(|i| {
                let mut m = vec![S::zero(); n];
                m[i] = radius;
                m
            })
            .collect();
        Self::new(means, component_std, prior)
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn components(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[Vec<S>] {
        &self.means
    }

    pub fn component_std(&self) -> S {
        self.component_std
    }

    pub fn prior(&self) -> &NormalizedDistribution<S> {
        &self.prior
    }

    pub fn unconditioned(&self) -> ConditionSpec<S> {
        ConditionSpec::new(self.prior.clone())
    }

    /// Variance of each diffused component after `t` forward steps.
    fn diffused_variance(&self, alpha_bar: S) -> S {
        (S::one() - alpha_bar) + alpha_bar * self.component_std * self.component_std
    }

    fn check(&self, z: &[S], c: &ConditionSpec<S>) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "state has dimension {} but mixture has {}",
                z.len(),
                self.dim()
            )));
        }
        if c.len() != self.components() {
            return Err(Error::InvalidInput(format!(
                "condition has {} weights but mixture has {} components",
                c.len(),
                self.components()
            )));
        }
        Ok(())
    }

    /// Per-component log weights `ln c_i - |z - sqrt(abar) mu_i|^2 / (2 v)`;
    /// `None` for components with zero weight.
    fn component_logits(&self, z: &[S], alpha_bar: S, var: S, c: &ConditionSpec<S>) -> Vec<Option<S>> {
        let scale = alpha_bar.sqrt();
        let two = S::lit(2.0);
        self.means
            .iter()
            .zip(c.weights.probs())
            .map(|(mu, &w)| {
                (w > S::zero()).then(|| {
                    let sq: S = z
                        .iter()
                        .zip(mu)
                        .map(|(&zj, &mj)| {
                            let r = zj - scale * mj;
                            r * r
                        })
                        .sum();
                    w.ln() - sq / (two * var)
                })
            })
            .collect()
    }

    /// Log density of the diffused conditional marginal
    /// `q_t(z | c) = sum_i c_i N(z; sqrt(abar_t) mu_i, v_t I)`.
    pub fn log_marginal(&self, z: &[S], t: usize, c: &ConditionSpec<S>, sched: &DiffusionSchedule<S>) -> Result<S> {
        self.check(z, c)?;
        sched.check_step(t)?;
        let ab = sched.alpha_bar(t);
        let var = self.diffused_variance(ab);
        let logits = self.component_logits(z, ab, var, c);
        let max = logits.iter().flatten().copied().fold(S::neg_infinity(), S::max);
        let lse = max + logits.iter().flatten().map(|&l| (l - max).exp()).sum::<S>().ln();
        let d = S::from_count(self.dim() as u64);
        Ok(lse - d / S::lit(2.0) * (S::TAU() * var).ln())
    }

    /// Exact noise prediction `-sqrt(1 - abar_t) * grad_z log q_t(z | c)`.
    pub fn conditional_epsilon(
        &self,
        z: &[S],
        t: usize,
        c: &ConditionSpec<S>,
        sched: &DiffusionSchedule<S>,
    ) -> Result<Vec<S>> {
        self.check(z, c)?;
        sched.check_step(t)?;
        self.epsilon_unchecked(z, sched.alpha_bar(t), c)
    }

    pub(crate) fn epsilon_unchecked(&self, z: &[S], alpha_bar: S, c: &ConditionSpec<S>) -> Result<Vec<S>> {
        let var = self.diffused_variance(alpha_bar);
        let logits = self.component_logits(z, alpha_bar, var, c);
        let max = logits.iter().flatten().copied().fold(S::neg_infinity(), S::max);
        let resp: Vec<S> = logits
            .iter()
            .map(|l| l.map_or(S::zero(), |l| (l - max).exp()))
            .collect();
        let total: S = resp.iter().copied().sum();
        if !(total > S::zero()) || !total.is_finite() {
            return Err(Error::NumericDegenerate(
                "all component responsibilities vanished".into(),
            ));
        }
        let scale = alpha_bar.sqrt();
        let noise_scale = (S::one() - alpha_bar).sqrt();
        let mut eps = vec![S::zero(); z.len()];
        for (mu, &r) in self.means.iter().zip(&resp) {
            if r == S::zero() {
                continue;
            }
            let r = r / total;
            for ((e, &zj), &mj) in eps.iter_mut().zip(z).zip(mu) {
                *e += r * (scale * mj - zj);
            }
        }
        for e in &mut eps {
            *e = -noise_scale * *e / var;
        }
        Ok(eps)
    }

    /// Maximum a-posteriori component of a clean sample under the prior,
    /// lowest index on ties.
    pub fn classify(&self, x0: &[S]) -> usize {
        let two_var = S::lit(2.0) * self.component_std * self.component_std;
        let mut best = 0;
        let mut best_score = S::neg_infinity();
        for (i, (mu, &w)) in self.means.iter().zip(self.prior.probs()).enumerate() {
            let sq: S = x0
                .iter()
                .zip(mu)
                .map(|(&x, &m)| (x - m) * (x - m))
                .sum();
            let score = if w > S::zero() { w.ln() - sq / two_var } else { S::neg_infinity() };
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sched() -> DiffusionSchedule<f64> {
        DiffusionSchedule::linear(50, 1e-4, 0.05).unwrap()
    }

    fn random_mixture(rng: &mut impl Rng, n: usize, d: usize) -> MixtureModel<f64> {
        let means = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        MixtureModel::new(means, rng.random_range(0.1..0.6), NormalizedDistribution::from_weights(&w).unwrap()).unwrap()
    }

    #[test]
    fn epsilon_vanishes_at_component_mean() {
        let prior = NormalizedDistribution::from_weights(&[0.74, 0.26]).unwrap();
        let mix = MixtureModel::on_unit_circle(prior, 0.15, 0.3).unwrap();
        let s = sched();
        for t in [1, 10, 50] {
            let scale = s.alpha_bar(t).sqrt();
            let z: Vec<f64> = mix.means()[1].iter().map(|m| scale * m).collect();
            let eps = mix.conditional_epsilon(&z, t, &ConditionSpec::one_hot(2, 1), &s).unwrap();
            assert!(eps.iter().all(|e| e.abs() < 1e-12), "{eps:?}");
        }
    }

    #[test]
    fn epsilon_vanishes_between_symmetric_means() {
        let mix = MixtureModel::new(
            vec![vec![0.7, -0.2], vec![-0.7, 0.2]],
            0.2,
            NormalizedDistribution::uniform(2),
        )
        .unwrap();
        let eps = mix
            .conditional_epsilon(&[0.0, 0.0], 20, &mix.unconditioned(), &sched())
            .unwrap();
        assert!(eps.iter().all(|e| e.abs() < 1e-15));
    }

    #[test]
    fn epsilon_matches_finite_difference_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = sched();
        let h = 1e-5;
        for _ in 0..200 {
            let n = rng.random_range(2..7);
            let d = rng.random_range(1..4);
            let mix = random_mixture(&mut rng, n, d);
            let t = rng.random_range(1..=50);
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let c = ConditionSpec::new(NormalizedDistribution::from_weights(&w).unwrap());
            let z: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
            let eps = mix.conditional_epsilon(&z, t, &c, &s).unwrap();
            let noise = (1.0 - s.alpha_bar(t)).sqrt();
            for j in 0..d {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[j] += h;
                zm[j] -= h;
                let fd = (mix.log_marginal(&zp, t, &c, &s).unwrap() - mix.log_marginal(&zm, t, &c, &s).unwrap())
                    / (2.0 * h);
                let score = -eps[j] / noise;
                let err = (score - fd).abs() / fd.abs().max(1e-3);
                assert!(err < 1e-5, "score {score} vs fd {fd}");
            }
        }
    }

    #[test]
    fn far_away_state_stays_finite() {
        let prior = NormalizedDistribution::from_weights(&[0.5, 0.5]).unwrap();
        let mix = MixtureModel::on_unit_circle(prior, 0.15, 0.0).unwrap();
        let s = sched();
        let eps = mix
            .conditional_epsilon(&[1e4, -3e4], 1, &mix.unconditioned(), &s)
            .unwrap();
        assert!(eps.iter().all(|e| e.is_finite()));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let prior = NormalizedDistribution::<f64>::uniform(3);
        let mix = MixtureModel::on_unit_circle(prior, 0.15, 0.0).unwrap();
        let s = sched();
        assert!(mix.conditional_epsilon(&[0.0], 1, &mix.unconditioned(), &s).is_err());
        assert!(mix.conditional_epsilon(&[0.0, 0.0], 0, &mix.unconditioned(), &s).is_err());
        assert!(mix.conditional_epsilon(&[0.0, 0.0], 51, &mix.unconditioned(), &s).is_err());
        assert!(mix
            .conditional_epsilon(&[0.0, 0.0], 1, &ConditionSpec::one_hot(2, 0), &s)
            .is_err());
    }

    #[test]
    fn classify_examples() {
        let mix = MixtureModel::<f64>::on_unit_circle(NormalizedDistribution::uniform(4), 0.15, 0.0).unwrap();
        for i in 0..4 {
            assert_eq!(mix.classify(&mix.means()[i].clone()), i);
        }
        let two = MixtureModel::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], 0.15, NormalizedDistribution::uniform(2)).unwrap();
        assert_eq!(two.classify(&[0.0, 0.3]), 0);
    }

    #[test]
    fn axis_layout() {
        let mix = MixtureModel::<f64>::on_axes(NormalizedDistribution::uniform(3), 0.15, 2.0).unwrap();
        assert_eq!(mix.dim(), 3);
        assert_eq!(mix.means()[1], vec![0.0, 2.0, 0.0]);
        for i in 0..3 {
            assert_eq!(mix.classify(&mix.means()[i].clone()), i);
        }
    }

    #[test]
    fn classify_matches_density_comparison() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.random_range(2..7);
            let mix = random_mixture(&mut rng, n, 2);
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-2.5..2.5)).collect();
            // explicit weighted normal densities
            let sd = mix.component_std();
            let dens: Vec<f64> = (0..n)
                .map(|i| {
                    let sq: f64 = x.iter().zip(&mix.means()[i]).map(|(a, b)| (a - b).powi(2)).sum();
                    mix.prior().probs()[i] * (-sq / (2.0 * sd * sd)).exp() / (std::f64::consts::TAU * sd * sd)
                })
                .collect();
            let max = dens.iter().cloned().fold(f64::MIN, f64::max);
            if max <= 0.0 {
                continue; // both underflow; log-domain classifier still decides
            }
            let expected = dens.iter().position(|&v| v == max).unwrap();
            assert_eq!(mix.classify(&x), expected);
        }
    }
}
