//! CART for binary responses: greedy Gini splitting, cost-complexity pruning, and a pruning
//! level picked by K-fold cross-validation with the one-standard-error rule.
//!
//! Node risk is the weighted Gini impurity `n * (1 - p² - q²) = 2 N1 N0 / n`, which is also
//! twice the Brier loss of predicting `p̂ = N1 / n` on the node's own rows. Held-out rows are
//! scored with the Brier loss of the leaf estimate they land in.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dataset::{draw_share, TrainingSet};
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::schema::{ContextVector, FeatureKind, FeatureSchema, FeatureValue};
use crate::tree::{DecisionTree, Leaf, Node, SplitRule};

#[derive(Debug, Clone, PartialEq)]
pub struct CartConfig {
    /// Minimum total weight of each child produced by a split.
    pub min_leaf_size: u64,
    pub cv_folds: usize,
    /// Candidate complexity parameters, relative to the root risk of the tree being pruned.
    pub complexity_grid: Vec<f64>,
}

impl Default for CartConfig {
    fn default() -> Self {
        Self {
            min_leaf_size: 5,
            cv_folds: 10,
            complexity_grid: vec![0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05],
        }
    }
}

impl CartConfig {
    /// Configuration that never prunes away a useful split.
    pub fn unpruned(min_leaf_size: u64) -> Self {
        Self { min_leaf_size, complexity_grid: vec![0.0], ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_leaf_size == 0 {
            return Err(Error::InvalidConfig("min_leaf_size must be positive".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidConfig("cv_folds must be at least 2".into()));
        }
        let g = &self.complexity_grid;
        if g.first() != Some(&0.0) {
            return Err(Error::InvalidConfig("complexity grid must start at 0".into()));
        }
        if g.windows(2).any(|w| !(w[0] < w[1])) || g.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("complexity grid must be finite and strictly ascending".into()));
        }
        Ok(())
    }
}

/// A candidate split and its risk reduction `R(parent) - R(left) - R(right)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub rule: SplitRule,
    pub gain: f64,
}

#[inline]
fn risk(s: u64, f: u64) -> f64 {
    let n = s + f;
    if n == 0 {
        0.0
    } else {
        2.0 * s as f64 * f as f64 / n as f64
    }
}

#[derive(Debug, Clone)]
struct GrownNode {
    successes: u64,
    failures: u64,
    risk: f64,
    split: Option<(SplitRule, usize, usize)>,
}

impl GrownNode {
    fn estimate(&self) -> f64 {
        Leaf::from_counts(self.successes, self.failures).estimate
    }
}

#[derive(Debug, Clone)]
struct GrownTree {
    nodes: Vec<GrownNode>,
}

impl GrownTree {
    /// Flags nodes that become leaves in the smallest subtree minimising `R + alpha * leaves`.
    fn prune(&self, alpha: f64) -> Vec<bool> {
        let n = self.nodes.len();
        let mut cost = vec![0.0; n];
        let mut collapsed = vec![false; n];
        // children always come after their parent
        for i in (0..n).rev() {
            let node = &self.nodes[i];
            let own = node.risk + alpha;
            match &node.split {
                None => {
                    cost[i] = own;
                    collapsed[i] = true;
                }
                Some((_, l, r)) => {
                    let sub = cost[*l] + cost[*r];
                    if own <= sub + 1e-12 * (1.0 + sub.abs()) {
                        cost[i] = own;
                        collapsed[i] = true;
                    } else {
                        cost[i] = sub;
                    }
                }
            }
        }
        collapsed
    }

    fn route(&self, collapsed: &[bool], context: &ContextVector) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i].split {
                Some((rule, l, r)) if !collapsed[i] => i = if rule.goes_left(context) { *l } else { *r },
                _ => return i,
            }
        }
    }

    fn count_leaves(&self, collapsed: &[bool]) -> usize {
        let mut stack = vec![0usize];
        let mut leaves = 0;
        while let Some(i) = stack.pop() {
            match &self.nodes[i].split {
                Some((_, l, r)) if !collapsed[i] => {
                    stack.push(*l);
                    stack.push(*r);
                }
                _ => leaves += 1,
            }
        }
        leaves
    }

    fn into_tree(self, schema: Arc<FeatureSchema>, collapsed: &[bool]) -> DecisionTree {
        let mut nodes = Vec::new();
        // (source index, destination index)
        let mut stack = vec![(0usize, 0usize)];
        nodes.push(Node::Leaf(Leaf::from_counts(0, 0)));
        while let Some((src, dst)) = stack.pop() {
            let g = &self.nodes[src];
            match &g.split {
                Some((rule, l, r)) if !collapsed[src] => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf(Leaf::from_counts(0, 0)));
                    nodes.push(Node::Leaf(Leaf::from_counts(0, 0)));
                    nodes[dst] = Node::Split { rule: rule.clone(), left, right: left + 1 };
                    stack.push((*r, left + 1));
                    stack.push((*l, left));
                }
                _ => nodes[dst] = Node::Leaf(Leaf::from_counts(g.successes, g.failures)),
            }
        }
        DecisionTree { schema, nodes }
    }
}

struct Grower<'s> {
    schema: &'s FeatureSchema,
    contexts: Vec<&'s ContextVector>,
    min_leaf: u64,
}

impl<'s> Grower<'s> {
    fn new(schema: &'s FeatureSchema, data: &'s TrainingSet<'s>, min_leaf: u64) -> Self {
        Self { schema, contexts: data.samples.iter().map(|s| s.context).collect(), min_leaf }
    }

    fn grow(&self, weights: &[(u64, u64)]) -> GrownTree {
        let mut scratch = Scratch::default();
        let root: Vec<usize> = (0..weights.len()).filter(|&i| weights[i].0 + weights[i].1 > 0).collect();
        let mut nodes = vec![GrownNode { successes: 0, failures: 0, risk: 0.0, split: None }];
        let mut stack = vec![(0usize, root)];
        while let Some((at, idx)) = stack.pop() {
            let (s, f) = idx.iter().fold((0, 0), |(s, f), &i| (s + weights[i].0, f + weights[i].1));
            nodes[at] = GrownNode { successes: s, failures: f, risk: risk(s, f), split: None };
            if s == 0 || f == 0 || s + f < 2 * self.min_leaf {
                continue;
            }
            let Some(best) = self.best_split(weights, &idx, s, f, &mut scratch) else { continue };
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| best.rule.goes_left(self.contexts[i]));
            let left = nodes.len();
            nodes.push(GrownNode { successes: 0, failures: 0, risk: 0.0, split: None });
            nodes.push(GrownNode { successes: 0, failures: 0, risk: 0.0, split: None });
            nodes[at].split = Some((best.rule, left, left + 1));
            stack.push((left + 1, right_idx));
            stack.push((left, left_idx));
        }
        GrownTree { nodes }
    }

    /// Best split of the rows `idx`, scanning features in index order and thresholds in
    /// ascending order; a later candidate must be strictly better to replace an earlier one.
    fn best_split(&self, weights: &[(u64, u64)], idx: &[usize], s: u64, f: u64, scratch: &mut Scratch) -> Option<SplitCandidate> {
        let parent = risk(s, f);
        let mut best: Option<SplitCandidate> = None;
        // the rule is only built for candidates that win
        let mut consider = |rule: &dyn Fn() -> SplitRule, ls: u64, lf: u64| {
            let (rs, rf) = (s - ls, f - lf);
            let gain = (parent - risk(ls, lf) - risk(rs, rf)).max(0.0);
            let better = match &best {
                None => true,
                Some(b) => gain > b.gain + 1e-10 * (1.0 + b.gain),
            };
            if better {
                best = Some(SplitCandidate { rule: rule(), gain });
            }
        };
        let min_leaf = self.min_leaf;
        let admissible = |lw: u64| lw >= min_leaf && s + f - lw >= min_leaf;

        for (feature, spec) in self.schema.features().iter().enumerate() {
            match &spec.kind {
                FeatureKind::Continuous => {
                    let values = &mut scratch.values;
                    values.clear();
                    values.extend(idx.iter().map(|&i| {
                        let x = match self.contexts[i].get(feature) {
                            FeatureValue::Real(x) => x,
                            FeatureValue::Level(_) => unreachable!("validated context"),
                        };
                        (x, weights[i].0, weights[i].1)
                    }));
                    values.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let (mut ls, mut lf) = (0u64, 0u64);
                    for k in 0..values.len() - 1 {
                        ls += values[k].1;
                        lf += values[k].2;
                        let (lo, hi) = (values[k].0, values[k + 1].0);
                        if lo == hi || !admissible(ls + lf) {
                            continue;
                        }
                        let mut threshold = lo + (hi - lo) / 2.0;
                        if !(threshold < hi) {
                            threshold = lo;
                        }
                        consider(&|| SplitRule::Threshold { feature, threshold }, ls, lf);
                    }
                }
                FeatureKind::Categorical(levels) => {
                    let per_level = &mut scratch.per_level;
                    per_level.clear();
                    per_level.resize(levels.len(), (0, 0));
                    for &i in idx {
                        let l = match self.contexts[i].get(feature) {
                            FeatureValue::Level(l) => l as usize,
                            FeatureValue::Real(_) => unreachable!("validated context"),
                        };
                        per_level[l].0 += weights[i].0;
                        per_level[l].1 += weights[i].1;
                    }
                    let present = &mut scratch.present;
                    present.clear();
                    present.extend((0..levels.len()).filter(|&l| per_level[l].0 + per_level[l].1 > 0));
                    if present.len() < 2 {
                        continue;
                    }
                    // order by success rate, then level index
                    present.sort_by(|&a, &b| {
                        let (sa, na) = (per_level[a].0 as u128, (per_level[a].0 + per_level[a].1) as u128);
                        let (sb, nb) = (per_level[b].0 as u128, (per_level[b].0 + per_level[b].1) as u128);
                        (sa * nb).cmp(&(sb * na)).then(a.cmp(&b))
                    });
                    let left = &mut scratch.left;
                    left.clear();
                    left.resize(levels.len(), false);
                    let (mut ls, mut lf) = (0u64, 0u64);
                    for &l in &present[..present.len() - 1] {
                        left[l] = true;
                        ls += per_level[l].0;
                        lf += per_level[l].1;
                        if admissible(ls + lf) {
                            consider(&|| SplitRule::Levels { feature, left: left.to_vec() }, ls, lf);
                        }
                    }
                }
            }
        }
        best
    }
}

/// Buffers reused across `best_split` calls.
#[derive(Default)]
struct Scratch {
    values: Vec<(f64, u64, u64)>,
    per_level: Vec<(u64, u64)>,
    present: Vec<usize>,
    left: Vec<bool>,
}

fn weights_of(data: &TrainingSet<'_>) -> Vec<(u64, u64)> {
    data.samples.iter().map(|s| (s.successes, s.failures)).collect()
}

fn check_inputs(schema: &FeatureSchema, data: &TrainingSet<'_>, config: &CartConfig) -> Result<()> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    for s in &data.samples {
        schema.validate(s.context)?;
    }
    Ok(())
}

/// Best root split of `data` under `min_leaf_size`, or `None` if no admissible split exists.
pub fn best_split(schema: &FeatureSchema, data: &TrainingSet<'_>, min_leaf_size: u64) -> Result<Option<SplitCandidate>> {
    check_inputs(schema, data, &CartConfig::unpruned(min_leaf_size.max(1)))?;
    let grower = Grower::new(schema, data, min_leaf_size.max(1));
    let weights = weights_of(data);
    let idx: Vec<usize> = (0..weights.len()).filter(|&i| weights[i].0 + weights[i].1 > 0).collect();
    let (s, f) = (data.total_successes(), data.total() - data.total_successes());
    Ok(grower.best_split(&weights, &idx, s, f, &mut Scratch::default()))
}

/// The fully grown tree before any pruning (pure nodes and nodes too small to split are leaves).
pub fn grow_unpruned(schema: &Arc<FeatureSchema>, data: &TrainingSet<'_>, min_leaf_size: u64) -> Result<DecisionTree> {
    check_inputs(schema, data, &CartConfig::unpruned(min_leaf_size.max(1)))?;
    let grown = Grower::new(schema, data, min_leaf_size.max(1)).grow(&weights_of(data));
    let keep = vec![false; grown.nodes.len()];
    Ok(grown.into_tree(schema.clone(), &keep))
}

/// Grows a tree and prunes it at a fixed relative complexity `cp` (no cross-validation).
pub fn prune_at(schema: &Arc<FeatureSchema>, data: &TrainingSet<'_>, min_leaf_size: u64, cp: f64) -> Result<DecisionTree> {
    check_inputs(schema, data, &CartConfig::unpruned(min_leaf_size.max(1)))?;
    if !(cp >= 0.0) {
        return Err(Error::InvalidConfig("complexity must be non-negative".into()));
    }
    let full = Grower::new(schema, data, min_leaf_size.max(1)).grow(&weights_of(data));
    let collapsed = full.prune(cp * full.nodes[0].risk);
    Ok(full.into_tree(schema.clone(), &collapsed))
}

/// Grows a tree on `data` and prunes it at the complexity level chosen by cross-validation.
pub fn fit_cart<R: Rng + ?Sized>(
    schema: &Arc<FeatureSchema>,
    data: &TrainingSet<'_>,
    config: &CartConfig,
    rng: &mut R,
) -> Result<DecisionTree> {
    check_inputs(schema, data, config)?;
    let grower = Grower::new(schema, data, config.min_leaf_size);
    let weights = weights_of(data);
    let full = grower.grow(&weights);
    let scale = full.nodes[0].risk;
    let grid = &config.complexity_grid;

    let cp = if full.nodes.len() == 1 || grid.len() == 1 {
        grid[0]
    } else {
        let loosest = full.count_leaves(&full.prune(grid[0] * scale));
        let tightest = full.count_leaves(&full.prune(grid[grid.len() - 1] * scale));
        if loosest == tightest {
            // pruned subtrees are nested in cp, so every grid value yields the same tree
            grid[0]
        } else {
            cross_validate(&grower, &weights, config, rng)
        }
    };
    let collapsed = full.prune(cp * scale);
    Ok(full.into_tree(schema.clone(), &collapsed))
}

/// Splits every weighted sample's successes and failures uniformly at random over the folds.
fn assign_folds<R: Rng + ?Sized>(weights: &[(u64, u64)], folds: usize, rng: &mut R) -> Vec<Vec<(u64, u64)>> {
    let mut out = vec![vec![(0u64, 0u64); weights.len()]; folds];
    for (i, &(s, f)) in weights.iter().enumerate() {
        let (mut rs, mut rf) = (s, f);
        for k in 0..folds {
            let left = (folds - k) as u64;
            let ds = draw_share(rs, 1, left, rng);
            let df = draw_share(rf, 1, left, rng);
            out[k][i] = (ds, df);
            rs -= ds;
            rf -= df;
        }
    }
    out
}

fn cross_validate<R: Rng + ?Sized>(grower: &Grower<'_>, weights: &[(u64, u64)], config: &CartConfig, rng: &mut R) -> f64 {
    let grid = &config.complexity_grid;
    let folds = assign_folds(weights, config.cv_folds, rng);
    let mut loss = vec![0.0; grid.len()];
    let mut loss_sq = vec![0.0; grid.len()];
    let mut evaluated = 0u64;
    let mut train = vec![(0u64, 0u64); weights.len()];
    for held in &folds {
        let held_total: u64 = held.iter().map(|w| w.0 + w.1).sum();
        let mut train_total = 0;
        for (t, (w, h)) in train.iter_mut().zip(weights.iter().zip(held)) {
            *t = (w.0 - h.0, w.1 - h.1);
            train_total += t.0 + t.1;
        }
        if held_total == 0 || train_total == 0 {
            continue;
        }
        evaluated += held_total;
        let tree = grower.grow(&train);
        let scale = tree.nodes[0].risk;
        for (g, &cp) in grid.iter().enumerate() {
            let collapsed = tree.prune(cp * scale);
            for (i, &(hs, hf)) in held.iter().enumerate() {
                if hs + hf == 0 {
                    continue;
                }
                let p = tree.nodes[tree.route(&collapsed, grower.contexts[i])].estimate();
                let (es, ef) = ((1.0 - p) * (1.0 - p), p * p);
                loss[g] += hs as f64 * es + hf as f64 * ef;
                loss_sq[g] += hs as f64 * es * es + hf as f64 * ef * ef;
            }
        }
    }
    if evaluated == 0 {
        return grid[0];
    }
    let n = evaluated as f64;
    let stats: Vec<(f64, f64)> = loss
        .iter()
        .zip(&loss_sq)
        .map(|(&l, &q)| {
            let mean = l / n;
            let var = (q / n - mean * mean).max(0.0);
            (mean, sqrt(var / n))
        })
        .collect();
    let (best, _) = stats
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |acc, (g, &(m, _))| if m < acc.1 { (g, m) } else { acc });
    let cutoff = stats[best].0 + stats[best].1;
    // one-standard-error rule: the most heavily pruned tree within one SE of the best
    (0..grid.len()).rev().find(|&g| stats[g].0 <= cutoff + 1e-15).map_or(grid[best], |g| grid[g])
}
