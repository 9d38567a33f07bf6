//! Reward worlds: the simulated sports-ads environment with tree-shaped ground truth and the
//! classification-to-bandit adapter, plus the preprocessing used by the linear baselines.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::Result;
use crate::schema::{ContextVector, FeatureSchema};

mod classification;
mod preprocess;
mod sports;

pub use classification::{shuffled_order, ClassificationEnv, ClassificationTable, DEFAULT_RARE_CLASS_CUTOFF};
pub use preprocess::{preprocess_for_linear, Encoder, PreprocessSpec};
pub use sports::{SportsEnv, TruthSpec};

/// A stream of contexts with Bernoulli rewards whose means are known to the harness.
///
/// Actions are zero-based indices `0..num_actions()`.
pub trait BanditEnvironment {
    fn num_actions(&self) -> usize;

    fn schema(&self) -> &Arc<FeatureSchema>;

    /// Draws the next context and makes it the current one.
    fn next_context(&mut self, rng: &mut dyn RngCore) -> Result<ContextVector>;

    /// Realizes the reward of `action` at `context`.
    fn realize_reward(&mut self, context: &ContextVector, action: usize, rng: &mut dyn RngCore) -> Result<bool>;

    /// True success probability of every action at `context`.
    ///
    /// Dataset-backed environments answer for the current row (the label is not a function of
    /// the context alone).
    fn oracle_probs(&self, context: &ContextVector) -> Result<Vec<f64>>;
}
