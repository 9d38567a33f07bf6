use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, RngCore};

use super::{check_action, Policy};
use crate::dataset::TrainingSet;
use crate::env::ClassificationTable;
use crate::error::{Error, Result};
use crate::math::argmax_uniform;
use crate::schema::ContextVector;
use crate::tree::{fit_cart, CartConfig, DecisionTree};

/// One-vs-rest classification trees fit offline on all rows outside a holdout; plays the class
/// with the highest predicted probability and never learns online.
#[derive(Debug, Clone)]
pub struct OfflineTree {
    trees: Vec<DecisionTree>,
    offered: Vec<usize>,
}

impl OfflineTree {
    /// Fits one tree per class on every row of `table` not listed in `holdout`.
    pub fn fit<R: Rng + ?Sized>(
        table: &ClassificationTable,
        holdout: &[usize],
        config: &CartConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let mut held = vec![false; table.len()];
        for &i in holdout {
            *held.get_mut(i).ok_or_else(|| Error::InvalidArgument(format!("holdout row {i} out of range")))? = true;
        }
        let train: Vec<usize> = (0..table.len()).filter(|&i| !held[i]).collect();
        if train.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let (contexts, labels) = (table.contexts(), table.labels());
        let trees = (0..table.num_classes())
            .map(|class| {
                let data = TrainingSet::from_rows(train.iter().map(|&i| (&contexts[i], labels[i] == class)));
                fit_cart(table.schema(), &data, config, rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { offered: vec![0; trees.len()], trees })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Predicted membership probability of every class.
    pub fn scores(&self, context: &ContextVector) -> Result<Vec<f64>> {
        self.trees.iter().map(|t| t.predict_success_prob(context)).collect()
    }
}

/// Draws `holdout_size` rows uniformly without replacement and fits [`OfflineTree`] on the rest.
/// Returns the policy and the holdout row indices.
pub fn offline_tree_fit<R: Rng + ?Sized>(
    table: &ClassificationTable,
    holdout_size: usize,
    config: &CartConfig,
    rng: &mut R,
) -> Result<(OfflineTree, Vec<usize>)> {
    if holdout_size >= table.len() {
        return Err(Error::InvalidArgument(format!(
            "holdout of {holdout_size} rows leaves nothing to train on ({} rows)",
            table.len()
        )));
    }
    let holdout = sample(rng, table.len(), holdout_size).into_vec();
    let policy = OfflineTree::fit(table, &holdout, config, rng)?;
    Ok((policy, holdout))
}

impl Policy for OfflineTree {
    fn num_actions(&self) -> usize {
        self.trees.len()
    }

    fn select(&mut self, context: &ContextVector, rng: &mut dyn RngCore) -> Result<usize> {
        let scores = self.scores(context)?;
        Ok(argmax_uniform(&scores, rng).expect("at least one class"))
    }

    /// Frozen: only counts what it was offered.
    fn update(&mut self, _context: &ContextVector, action: usize, _reward: bool) -> Result<()> {
        check_action(action, self.trees.len())?;
        self.offered[action] += 1;
        Ok(())
    }

    fn history_len(&self, action: usize) -> usize {
        self.offered[action]
    }
}
