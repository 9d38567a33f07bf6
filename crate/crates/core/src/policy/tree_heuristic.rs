use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use super::{check_action, Policy};
use crate::dataset::ActionDataset;
use crate::error::{Error, Result};
use crate::math::argmax_uniform;
use crate::schema::{ContextVector, FeatureSchema, Observation};
use crate::tree::{fit_cart, CartConfig, DecisionTree, Leaf};

/// Per-leaf Thompson sampling: each arm keeps one tree, and a context is treated as a
/// Beta–Bernoulli bandit over the leaves it reaches.
///
/// Trees are refit from scratch when an arm's history reaches 1 or 2 rows and whenever it has
/// grown by the refit factor since the last refit; in between, only the routed leaf's counts are
/// incremented. The default factor 1 refits on every update.
#[derive(Debug, Clone)]
pub struct TreeHeuristic {
    schema: Arc<FeatureSchema>,
    datasets: Vec<ActionDataset>,
    trees: Vec<DecisionTree>,
    refit_at: Vec<usize>,
    prior: (f64, f64),
    cart: CartConfig,
    refit_growth: f64,
    refit_rng: ChaCha8Rng,
}

/// Refit on every update, as an incremental tree would.
pub const DEFAULT_REFIT_GROWTH: f64 = 1.0;

impl TreeHeuristic {
    /// `refit_seed` drives the cross-validation folds of the refits.
    pub fn new(
        schema: Arc<FeatureSchema>,
        num_actions: usize,
        cart: CartConfig,
        prior_successes: f64,
        prior_failures: f64,
        refit_seed: u64,
    ) -> Result<Self> {
        cart.validate()?;
        if num_actions == 0 {
            return Err(Error::InvalidConfig("at least one action is required".into()));
        }
        let valid = |v: f64| v.is_finite() && v >= 0.0;
        if !valid(prior_successes) || !valid(prior_failures) {
            return Err(Error::InvalidConfig(format!("prior counts ({prior_successes}, {prior_failures}) must be non-negative")));
        }
        Ok(Self {
            trees: (0..num_actions).map(|_| DecisionTree::single_leaf(schema.clone(), Leaf::from_counts(0, 0))).collect(),
            datasets: (0..num_actions).map(ActionDataset::new).collect(),
            refit_at: alloc::vec![0; num_actions],
            schema,
            prior: (prior_successes, prior_failures),
            cart,
            refit_growth: DEFAULT_REFIT_GROWTH,
            refit_rng: ChaCha8Rng::seed_from_u64(refit_seed),
        })
    }

    /// Refit once an arm's history reaches `growth` times its size at the last refit
    /// (2 = doubling).
    pub fn with_refit_growth(mut self, growth: f64) -> Result<Self> {
        if !(growth.is_finite() && growth >= 1.0) {
            return Err(Error::InvalidConfig(format!("refit growth {growth} must be at least 1")));
        }
        self.refit_growth = growth;
        Ok(self)
    }

    pub fn tree(&self, action: usize) -> &DecisionTree {
        &self.trees[action]
    }

    pub fn dataset(&self, action: usize) -> &ActionDataset {
        &self.datasets[action]
    }

    /// Replaces an arm's tree, e.g. to start from given leaf counts.
    pub fn set_tree(&mut self, action: usize, tree: DecisionTree) -> Result<()> {
        check_action(action, self.trees.len())?;
        if tree.schema() != &self.schema {
            return Err(Error::SchemaMismatch("tree built over a different schema".into()));
        }
        self.trees[action] = tree;
        Ok(())
    }

    /// One posterior draw `Beta(N1 + S0, N0 + F0)` for `action` at `context`.
    pub fn sample_score(&self, action: usize, context: &ContextVector, rng: &mut dyn RngCore) -> Result<f64> {
        let (n1, n0) = self.trees[action].leaf_counts(context)?;
        beta_draw(n1 as f64 + self.prior.0, n0 as f64 + self.prior.1, rng)
    }
}

/// Draws from `Beta(a, b)`, treating a zero parameter as a point mass at the other end.
pub(crate) fn beta_draw(a: f64, b: f64, rng: &mut dyn RngCore) -> Result<f64> {
    match (a > 0.0, b > 0.0) {
        (true, true) => {
            let d = Beta::new(a, b).map_err(|e| Error::NumericalFailure(format!("Beta({a}, {b}): {e}")))?;
            Ok(d.sample(rng))
        }
        (true, false) => Ok(1.0),
        (false, true) => Ok(0.0),
        (false, false) => Err(Error::ImproperPrior),
    }
}

impl Policy for TreeHeuristic {
    fn num_actions(&self) -> usize {
        self.trees.len()
    }

    fn select(&mut self, context: &ContextVector, rng: &mut dyn RngCore) -> Result<usize> {
        self.schema.validate(context)?;
        let mut scores = Vec::with_capacity(self.trees.len());
        for a in 0..self.trees.len() {
            scores.push(self.sample_score(a, context, rng)?);
        }
        // continuous draws tie with probability zero; the uniform rule only matters for point masses
        Ok(argmax_uniform(&scores, rng).expect("at least one arm"))
    }

    fn update(&mut self, context: &ContextVector, action: usize, reward: bool) -> Result<()> {
        check_action(action, self.trees.len())?;
        let observation = Observation::new(context.clone(), reward);
        self.trees[action].increment_leaf(&observation)?;
        self.datasets[action].push(observation);
        let n = self.datasets[action].len();
        if n <= 2 || n as f64 >= self.refit_growth * self.refit_at[action] as f64 {
            let data = self.datasets[action].training_set();
            self.trees[action] = fit_cart(&self.schema, &data, &self.cart, &mut self.refit_rng)?;
            self.refit_at[action] = n;
        }
        Ok(())
    }

    fn history_len(&self, action: usize) -> usize {
        self.datasets[action].len()
    }
}
