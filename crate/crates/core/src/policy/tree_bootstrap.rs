use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::RngCore;

use super::{check_action, ArmGuard, GuardConfig, Policy};
use crate::dataset::ActionDataset;
use crate::error::{Error, Result};
use crate::math::argmax_uniform;
use crate::schema::{ContextVector, FeatureSchema, Observation};
use crate::tree::{fit_cart, CartConfig};

/// Thompson sampling by bootstrap: every select refits each arm's tree on a resample of its
/// history and plays the arm whose resampled tree predicts the highest success probability.
#[derive(Debug, Clone)]
pub struct TreeBootstrap {
    schema: Arc<FeatureSchema>,
    datasets: Vec<ActionDataset>,
    guard: ArmGuard,
    cart: CartConfig,
    primed: bool,
}

impl TreeBootstrap {
    pub fn new(schema: Arc<FeatureSchema>, num_actions: usize, cart: CartConfig, guard: GuardConfig) -> Result<Self> {
        cart.validate()?;
        guard.validate()?;
        if num_actions == 0 {
            return Err(Error::InvalidConfig("at least one action is required".into()));
        }
        Ok(Self {
            schema,
            datasets: (0..num_actions).map(ActionDataset::new).collect(),
            guard: ArmGuard::new(num_actions, guard),
            cart,
            primed: false,
        })
    }

    pub fn guard(&self) -> &ArmGuard {
        &self.guard
    }

    pub fn dataset(&self, action: usize) -> &ActionDataset {
        &self.datasets[action]
    }

    /// Probability estimate of `action` at `context` from one bootstrap resample.
    pub fn sample_score(&self, action: usize, context: &ContextVector, rng: &mut dyn RngCore) -> Result<f64> {
        let data = &self.datasets[action];
        if data.training_len() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let resample = data.bootstrap(rng);
        fit_cart(&self.schema, &resample, &self.cart, rng)?.predict_success_prob(context)
    }
}

impl Policy for TreeBootstrap {
    fn num_actions(&self) -> usize {
        self.datasets.len()
    }

    fn select(&mut self, context: &ContextVector, rng: &mut dyn RngCore) -> Result<usize> {
        self.schema.validate(context)?;
        if self.guard.config().prior_injection && !self.primed {
            for d in &mut self.datasets {
                d.push_prior(Observation::new(context.clone(), true));
                d.push_prior(Observation::new(context.clone(), false));
            }
            self.primed = true;
        }
        if let Some(a) = self.guard.next_forced() {
            return Ok(a);
        }
        let mut scores = Vec::with_capacity(self.datasets.len());
        for a in 0..self.datasets.len() {
            scores.push(if self.guard.playable(a) { self.sample_score(a, context, rng)? } else { f64::NAN });
        }
        argmax_uniform(&scores, rng).ok_or(Error::NoPlayableArm)
    }

    fn update(&mut self, context: &ContextVector, action: usize, reward: bool) -> Result<()> {
        check_action(action, self.datasets.len())?;
        self.schema.validate(context)?;
        self.datasets[action].push(Observation::new(context.clone(), reward));
        self.guard.record(action, reward);
        Ok(())
    }

    fn history_len(&self, action: usize) -> usize {
        self.datasets[action].len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Feature;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn schema() -> Arc<FeatureSchema> {
        Arc::new(FeatureSchema::new(vec![Feature::categorical("g", ["a", "b"])]).unwrap())
    }

    #[test]
    fn empty_start_offers_first_arm() {
        let mut p = TreeBootstrap::new(schema(), 3, CartConfig::default(), GuardConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(p.select(&ContextVector::from_levels(&[0]), &mut rng).unwrap(), 0);
    }

    #[test]
    fn all_eliminated_is_an_error() {
        let guard = GuardConfig { failure_threshold: Some(2), prior_injection: false };
        let mut p = TreeBootstrap::new(schema(), 2, CartConfig::default(), guard).unwrap();
        let ctx = ContextVector::from_levels(&[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..4 {
            let a = p.select(&ctx, &mut rng).unwrap();
            p.update(&ctx, a, false).unwrap();
        }
        assert_eq!(p.select(&ctx, &mut rng), Err(Error::NoPlayableArm));
        assert!(p.update(&ctx, 2, true).is_err());
    }

    #[test]
    fn prior_injection_skips_forcing() {
        let guard = GuardConfig { failure_threshold: Some(1), prior_injection: true };
        let mut p = TreeBootstrap::new(schema(), 2, CartConfig::default(), guard).unwrap();
        let ctx = ContextVector::from_levels(&[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut seen = [0; 2];
        for _ in 0..200 {
            let a = p.select(&ctx, &mut rng).unwrap();
            seen[a] += 1;
            p.update(&ctx, a, false).unwrap();
        }
        assert!(seen[0] > 0 && seen[1] > 0);
        assert_eq!(p.history_len(0) + p.history_len(1), 200);
        assert_eq!(p.dataset(0).prior_rows().len(), 2);
    }
}
