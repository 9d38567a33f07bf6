//! Per-action histories and the weighted training sets the tree learner consumes.
//!
//! Identical contexts are aggregated into one weighted sample. Gini splitting only depends on
//! success/failure counts, so a grouped set grows exactly the same tree as the raw rows, and a
//! bootstrap resample reduces to one multinomial draw over the grouped cells.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::schema::{ContextVector, Observation};

/// Success and failure counts observed at one distinct context.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextCounts {
    pub context: ContextVector,
    pub successes: u64,
    pub failures: u64,
}

/// History `D_{t,a}` of one action: append-only rows plus optional fabricated prior rows.
#[derive(Debug, Clone)]
pub struct ActionDataset {
    action: usize,
    rows: Vec<Observation>,
    prior: Vec<Observation>,
    groups: Vec<ContextCounts>,
    index: BTreeMap<Vec<u64>, usize>,
}

impl ActionDataset {
    pub fn new(action: usize) -> Self {
        Self { action, rows: Vec::new(), prior: Vec::new(), groups: Vec::new(), index: BTreeMap::new() }
    }

    pub fn from_observations(action: usize, rows: impl IntoIterator<Item = Observation>) -> Self {
        let mut d = Self::new(action);
        for o in rows {
            d.push(o);
        }
        d
    }

    pub fn action(&self) -> usize {
        self.action
    }

    /// Number of real (non-fabricated) rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows used for training, fabricated prior rows included.
    pub fn training_len(&self) -> usize {
        self.rows.len() + self.prior.len()
    }

    pub fn rows(&self) -> &[Observation] {
        &self.rows
    }

    pub fn prior_rows(&self) -> &[Observation] {
        &self.prior
    }

    pub fn successes(&self) -> u64 {
        self.rows.iter().filter(|o| o.reward).count() as u64
    }

    pub fn push(&mut self, observation: Observation) {
        self.count(&observation);
        self.rows.push(observation);
    }

    /// Adds a fabricated row that trains trees but is not part of the observed history.
    pub fn push_prior(&mut self, observation: Observation) {
        self.count(&observation);
        self.prior.push(observation);
    }

    fn count(&mut self, o: &Observation) {
        let key = o.context.key();
        let idx = match self.index.get(&key) {
            Some(&i) => i,
            None => {
                self.groups.push(ContextCounts { context: o.context.clone(), successes: 0, failures: 0 });
                self.index.insert(key, self.groups.len() - 1);
                self.groups.len() - 1
            }
        };
        if o.reward {
            self.groups[idx].successes += 1;
        } else {
            self.groups[idx].failures += 1;
        }
    }

    /// Distinct contexts with their counts, in first-seen order.
    pub fn groups(&self) -> &[ContextCounts] {
        &self.groups
    }

    pub fn training_set(&self) -> TrainingSet<'_> {
        TrainingSet {
            samples: self
                .groups
                .iter()
                .map(|g| WeightedSample { context: &g.context, successes: g.successes, failures: g.failures })
                .collect(),
        }
    }

    /// Resamples `training_len()` rows with replacement.
    pub fn bootstrap<R: Rng + ?Sized>(&self, rng: &mut R) -> TrainingSet<'_> {
        let mut remaining = self.training_len() as u64;
        let mut mass = remaining;
        let mut samples = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let s = draw_share(remaining, g.successes, mass, rng);
            remaining -= s;
            mass -= g.successes;
            let f = draw_share(remaining, g.failures, mass, rng);
            remaining -= f;
            mass -= g.failures;
            if s + f > 0 {
                samples.push(WeightedSample { context: &g.context, successes: s, failures: f });
            }
        }
        debug_assert_eq!(remaining, 0);
        TrainingSet { samples }
    }
}

/// One conditional-binomial step of a multinomial draw: how many of `trials` land in a cell
/// holding `cell` out of `mass` units.
pub(crate) fn draw_share<R: Rng + ?Sized>(trials: u64, cell: u64, mass: u64, rng: &mut R) -> u64 {
    if trials == 0 || cell == 0 {
        return 0;
    }
    if cell >= mass {
        return trials;
    }
    let p = cell as f64 / mass as f64;
    Binomial::new(trials, p).expect("probability in (0,1)").sample(rng)
}

/// A distinct context carrying integer success and failure weights.
#[derive(Debug, Clone, Copy)]
pub struct WeightedSample<'a> {
    pub context: &'a ContextVector,
    pub successes: u64,
    pub failures: u64,
}

impl WeightedSample<'_> {
    pub fn weight(&self) -> u64 {
        self.successes + self.failures
    }
}

/// Weighted training rows for the tree learner.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet<'a> {
    pub samples: Vec<WeightedSample<'a>>,
}

impl<'a> TrainingSet<'a> {
    pub fn new(samples: Vec<WeightedSample<'a>>) -> Self {
        Self { samples }
    }

    /// Groups raw `(context, reward)` rows by identical context.
    pub fn from_rows(rows: impl IntoIterator<Item = (&'a ContextVector, bool)>) -> Self {
        let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let mut samples: Vec<WeightedSample<'a>> = Vec::new();
        for (context, reward) in rows {
            let i = *index.entry(context.key()).or_insert_with(|| {
                samples.push(WeightedSample { context, successes: 0, failures: 0 });
                samples.len() - 1
            });
            if reward {
                samples[i].successes += 1;
            } else {
                samples[i].failures += 1;
            }
        }
        Self { samples }
    }

    pub fn total(&self) -> u64 {
        self.samples.iter().map(|s| s.weight()).sum()
    }

    pub fn total_successes(&self) -> u64 {
        self.samples.iter().map(|s| s.successes).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs(level: u32, reward: bool) -> Observation {
        Observation::new(ContextVector::from_levels(&[level]), reward)
    }

    #[test]
    fn groups_identical_contexts() {
        let d = ActionDataset::from_observations(0, [obs(0, true), obs(1, false), obs(0, false), obs(0, true)]);
        assert_eq!(d.len(), 4);
        assert_eq!(d.groups().len(), 2);
        assert_eq!((d.groups()[0].successes, d.groups()[0].failures), (2, 1));
        assert_eq!(d.training_set().total(), 4);
    }

    #[test]
    fn prior_rows_train_but_do_not_count_as_history() {
        let mut d = ActionDataset::new(1);
        d.push_prior(obs(0, true));
        d.push_prior(obs(0, false));
        assert_eq!(d.len(), 0);
        assert_eq!(d.training_len(), 2);
        assert_eq!(d.training_set().total_successes(), 1);
    }

    #[test]
    fn bootstrap_preserves_size_and_matches_binomial_mean() {
        let rows = (0..10).map(|i| obs(i % 3, i % 2 == 0));
        let d = ActionDataset::from_observations(0, rows);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut succ = 0u64;
        let reps = 20_000;
        for _ in 0..reps {
            let b = d.bootstrap(&mut rng);
            assert_eq!(b.total(), 10);
            succ += b.total_successes();
        }
        // E[successes] = n * p = 5
        let mean = succ as f64 / reps as f64;
        assert!((mean - 5.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn from_rows_groups() {
        let a = ContextVector::from_reals(&[1.0]);
        let b = ContextVector::from_reals(&[-0.0]);
        let c = ContextVector::from_reals(&[0.0]);
        let t = TrainingSet::from_rows([(&a, true), (&b, false), (&c, true)]);
        assert_eq!(t.samples.len(), 2);
        assert_eq!(t.total(), 3);
    }
}
