use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BanditEnvironment;
use crate::error::{Error, Result};
use crate::schema::{ContextVector, FeatureSchema};

/// Classes holding less than this fraction of the rows are removed at ingestion.
pub const DEFAULT_RARE_CLASS_CUTOFF: f64 = 0.0005;

/// Labelled rows with dense zero-based labels `0..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationTable {
    schema: Arc<FeatureSchema>,
    contexts: Vec<ContextVector>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl ClassificationTable {
    /// Builds a table from already-dense labels; every class must occur at least once.
    pub fn new(schema: Arc<FeatureSchema>, rows: Vec<(ContextVector, usize)>, class_names: Vec<String>) -> Result<Self> {
        let mut seen = vec![false; class_names.len()];
        for (i, (ctx, label)) in rows.iter().enumerate() {
            schema.validate(ctx).map_err(|e| Error::SchemaMismatch(format!("row {}: {e}", i + 1)))?;
            *seen.get_mut(*label).ok_or_else(|| Error::InvalidArgument(format!("row {}: label {label} out of range", i + 1)))? = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!("class `{}` has no rows", class_names[k])));
        }
        let (contexts, labels) = rows.into_iter().unzip();
        Ok(Self { schema, contexts, labels, class_names })
    }

    /// Builds a table from textual labels: classes below `rare_class_cutoff` of the rows are
    /// dropped and the survivors are numbered in lexicographic order.
    pub fn from_named_labels(
        schema: Arc<FeatureSchema>,
        rows: Vec<(ContextVector, String)>,
        rare_class_cutoff: f64,
    ) -> Result<Self> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for (_, label) in &rows {
            *counts.entry(label.as_str()).or_default() += 1;
        }
        let kept = surviving_classes(counts.values().copied(), rows.len(), rare_class_cutoff)?;
        let names: Vec<String> = counts.keys().zip(&kept).filter(|(_, k)| **k).map(|(n, _)| String::from(*n)).collect();
        let index: BTreeMap<String, usize> = names.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        let dense = rows.into_iter().filter_map(|(ctx, label)| index.get(&label).map(|&y| (ctx, y))).collect();
        Self::new(schema, dense, names)
    }

    /// Drops rows of classes holding less than `cutoff` of the rows and renumbers the rest,
    /// preserving their order.
    pub fn remove_rare_classes(&self, cutoff: f64) -> Result<Self> {
        let kept = surviving_classes(self.class_counts().into_iter(), self.len(), cutoff)?;
        let mut relabel = vec![usize::MAX; kept.len()];
        let mut names = Vec::new();
        for (k, _) in kept.iter().enumerate().filter(|(_, k)| **k) {
            relabel[k] = names.len();
            names.push(self.class_names[k].clone());
        }
        let rows = self
            .contexts
            .iter()
            .zip(&self.labels)
            .filter(|(_, &y)| kept[y])
            .map(|(c, &y)| (c.clone(), relabel[y]))
            .collect();
        Self::new(self.schema.clone(), rows, names)
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn contexts(&self) -> &[ContextVector] {
        &self.contexts
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

fn surviving_classes(counts: impl Iterator<Item = usize>, total: usize, cutoff: f64) -> Result<Vec<bool>> {
    if !(0.0..1.0).contains(&cutoff) {
        return Err(Error::InvalidConfig(format!("rare-class cutoff {cutoff} outside [0, 1)")));
    }
    let kept: Vec<bool> = counts.map(|c| c as f64 >= cutoff * total as f64).collect();
    if !kept.contains(&true) {
        return Err(Error::InvalidArgument("no class survives the rare-class cutoff".into()));
    }
    Ok(kept)
}

/// A uniformly random permutation of `0..n` determined by `seed`.
pub fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Replays a table's rows once each in shuffled order; reward 1 iff the action is the label.
#[derive(Debug, Clone)]
pub struct ClassificationEnv {
    table: Arc<ClassificationTable>,
    order: Vec<usize>,
    position: usize,
}

impl ClassificationEnv {
    pub fn new(table: Arc<ClassificationTable>, shuffle_seed: u64) -> Self {
        let order = shuffled_order(table.len(), shuffle_seed);
        Self { table, order, position: 0 }
    }

    pub fn table(&self) -> &ClassificationTable {
        &self.table
    }

    /// Row indices in replay order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Label of the most recently drawn row.
    pub fn current_label(&self) -> Option<usize> {
        self.position.checked_sub(1).map(|i| self.table.labels[self.order[i]])
    }

    fn label_or_err(&self) -> Result<usize> {
        self.current_label().ok_or_else(|| Error::InvalidArgument("no context has been drawn yet".into()))
    }
}

impl BanditEnvironment for ClassificationEnv {
    fn num_actions(&self) -> usize {
        self.table.num_classes()
    }

    fn schema(&self) -> &Arc<FeatureSchema> {
        &self.table.schema
    }

    fn next_context(&mut self, _rng: &mut dyn RngCore) -> Result<ContextVector> {
        let row = *self.order.get(self.position).ok_or(Error::HorizonExceedsDataset)?;
        self.position += 1;
        Ok(self.table.contexts[row].clone())
    }

    fn realize_reward(&mut self, _context: &ContextVector, action: usize, _rng: &mut dyn RngCore) -> Result<bool> {
        if action >= self.num_actions() {
            return Err(Error::InvalidAction { action, num_actions: self.num_actions() });
        }
        Ok(action == self.label_or_err()?)
    }

    fn oracle_probs(&self, _context: &ContextVector) -> Result<Vec<f64>> {
        let y = self.label_or_err()?;
        Ok((0..self.num_actions()).map(|a| if a == y { 1.0 } else { 0.0 }).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Feature;
    use alloc::string::ToString;

    fn schema() -> Arc<FeatureSchema> {
        Arc::new(FeatureSchema::new(vec![Feature::continuous("x")]).unwrap())
    }

    fn named(n: usize, rare: usize) -> Vec<(ContextVector, String)> {
        (0..n)
            .map(|i| {
                let label = if i < rare { "zz" } else if i % 2 == 0 { "b" } else { "a" };
                (ContextVector::from_reals(&[i as f64]), label.to_string())
            })
            .collect()
    }

    #[test]
    fn rare_class_is_removed_and_labels_densified() {
        let t = ClassificationTable::from_named_labels(schema(), named(10_000, 3), DEFAULT_RARE_CLASS_CUTOFF).unwrap();
        assert_eq!(t.num_classes(), 2);
        assert_eq!(t.len(), 9_997);
        assert_eq!(t.class_names(), ["a", "b"]);
        assert_eq!(t.remove_rare_classes(DEFAULT_RARE_CLASS_CUTOFF).unwrap(), t);

        let kept = ClassificationTable::from_named_labels(schema(), named(10_000, 5), DEFAULT_RARE_CLASS_CUTOFF).unwrap();
        assert_eq!((kept.num_classes(), kept.len()), (3, 10_000));
        assert_eq!(kept.class_names(), ["a", "b", "zz"]);
    }

    #[test]
    fn stream_visits_each_row_once() {
        let t = Arc::new(ClassificationTable::from_named_labels(schema(), named(50, 0), 0.0).unwrap());
        let mut env = ClassificationEnv::new(t.clone(), 9);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen = [false; 50];
        for _ in 0..50 {
            let ctx = env.next_context(&mut rng).unwrap();
            let row = ctx.get(0).as_real().unwrap() as usize;
            assert!(!seen[row]);
            seen[row] = true;
            let y = env.current_label().unwrap();
            assert_eq!(y, t.labels()[row]);
            let probs = env.oracle_probs(&ctx).unwrap();
            assert_eq!(probs.iter().sum::<f64>(), 1.0);
            assert_eq!(probs[y], 1.0);
            assert!(env.realize_reward(&ctx, y, &mut rng).unwrap());
            assert!(!env.realize_reward(&ctx, 1 - y, &mut rng).unwrap());
        }
        assert_eq!(env.next_context(&mut rng), Err(Error::HorizonExceedsDataset));
        assert_eq!(ClassificationEnv::new(t.clone(), 9).order(), env.order());
        assert_ne!(ClassificationEnv::new(t, 10).order(), env.order());
    }

    #[test]
    fn rejects_bad_tables() {
        let rows = vec![(ContextVector::from_reals(&[0.0]), 1)];
        assert!(ClassificationTable::new(schema(), rows, vec!["a".into(), "b".into()]).is_err());
        assert!(ClassificationTable::from_named_labels(schema(), named(10, 0), 1.0).is_err());
        let bad = vec![(ContextVector::from_levels(&[0]), "a".to_string())];
        assert!(ClassificationTable::from_named_labels(schema(), bad, 0.0).is_err());
    }
}
