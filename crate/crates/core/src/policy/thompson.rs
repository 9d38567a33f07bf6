use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::tree_heuristic::beta_draw;
use super::{check_action, Policy};
use crate::error::{Error, Result};
use crate::math::argmax_uniform;
use crate::schema::ContextVector;

/// Beta–Bernoulli Thompson sampling that ignores the context, with a uniform `Beta(1, 1)` prior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextFreeTs {
    pulls: Vec<u64>,
    successes: Vec<u64>,
}

impl ContextFreeTs {
    pub fn new(num_actions: usize) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::InvalidConfig("at least one action is required".into()));
        }
        Ok(Self { pulls: vec![0; num_actions], successes: vec![0; num_actions] })
    }

    /// Starts from given `(n_a, successes_a)` counts.
    pub fn with_counts(counts: &[(u64, u64)]) -> Result<Self> {
        let mut p = Self::new(counts.len())?;
        for (a, &(n, s)) in counts.iter().enumerate() {
            if s > n {
                return Err(Error::InvalidArgument("successes exceed pulls".into()));
            }
            p.pulls[a] = n;
            p.successes[a] = s;
        }
        Ok(p)
    }

    pub fn counts(&self, action: usize) -> (u64, u64) {
        (self.pulls[action], self.successes[action])
    }
}

impl Policy for ContextFreeTs {
    fn num_actions(&self) -> usize {
        self.pulls.len()
    }

    fn select(&mut self, _context: &ContextVector, rng: &mut dyn RngCore) -> Result<usize> {
        let mut scores = Vec::with_capacity(self.pulls.len());
        for (&n, &s) in self.pulls.iter().zip(&self.successes) {
            scores.push(beta_draw((s + 1) as f64, (n - s + 1) as f64, rng)?);
        }
        Ok(argmax_uniform(&scores, rng).expect("at least one arm"))
    }

    fn update(&mut self, _context: &ContextVector, action: usize, reward: bool) -> Result<()> {
        check_action(action, self.pulls.len())?;
        self.pulls[action] += 1;
        self.successes[action] += u64::from(reward);
        Ok(())
    }

    fn history_len(&self, action: usize) -> usize {
        self.pulls[action] as usize
    }
}
