//! Binary-response decision trees.

mod cart;

pub use cart::{best_split, fit_cart, grow_unpruned, prune_at, CartConfig, SplitCandidate};

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::schema::{ContextVector, FeatureKind, FeatureSchema, FeatureValue, Observation};

/// Routing rule of an internal node. Contexts satisfying the rule go left.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// Left iff `value <= threshold`.
    Threshold { feature: usize, threshold: f64 },
    /// Left iff the level is in the set; `left[l]` marks level `l`.
    Levels { feature: usize, left: Vec<bool> },
}

impl SplitRule {
    pub fn feature(&self) -> usize {
        match self {
            SplitRule::Threshold { feature, .. } | SplitRule::Levels { feature, .. } => *feature,
        }
    }

    #[inline]
    pub fn goes_left(&self, context: &ContextVector) -> bool {
        match (self, context.get(self.feature())) {
            (SplitRule::Threshold { threshold, .. }, FeatureValue::Real(x)) => x <= *threshold,
            (SplitRule::Levels { left, .. }, FeatureValue::Level(l)) => left.get(l as usize).copied().unwrap_or(false),
            _ => false,
        }
    }

    fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        let f = self.feature();
        if f >= schema.dimension() {
            return Err(Error::InvalidSchema(format!("split on unknown feature {f}")));
        }
        match (self, &schema.feature(f).kind) {
            (SplitRule::Threshold { threshold, .. }, FeatureKind::Continuous) if threshold.is_finite() => Ok(()),
            (SplitRule::Levels { left, .. }, FeatureKind::Categorical(levels))
                if left.len() == levels.len() && left.iter().any(|&b| b) && left.iter().any(|&b| !b) =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidSchema(format!("split rule does not fit feature `{}`", schema.feature(f).name))),
        }
    }
}

/// Leaf statistics: success count `N1`, failure count `N0` and estimate `p̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leaf {
    pub successes: u64,
    pub failures: u64,
    pub estimate: f64,
}

impl Leaf {
    pub fn from_counts(successes: u64, failures: u64) -> Self {
        let n = successes + failures;
        let estimate = if n == 0 { 0.5 } else { successes as f64 / n as f64 };
        Self { successes, failures, estimate }
    }

    /// A leaf carrying a fixed probability and no counts, as used by ground-truth trees.
    pub fn with_probability(p: f64) -> Self {
        Self { successes: 0, failures: 0, estimate: p }
    }

    pub fn total(&self) -> u64 {
        self.successes + self.failures
    }

    fn record(&mut self, reward: bool) {
        if reward {
            self.successes += 1;
        } else {
            self.failures += 1;
        }
        self.estimate = self.successes as f64 / self.total() as f64;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(Leaf),
    Split { rule: SplitRule, left: usize, right: usize },
}

/// A binary decision tree over a [`FeatureSchema`], stored as an arena rooted at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    schema: Arc<FeatureSchema>,
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn single_leaf(schema: Arc<FeatureSchema>, leaf: Leaf) -> Self {
        Self { schema, nodes: vec![Node::Leaf(leaf)] }
    }

    /// Builds a tree from an arena. Every node other than the root must be referenced exactly
    /// once, children after their parent, so the arena is a tree and routing terminates.
    pub fn from_nodes(schema: Arc<FeatureSchema>, nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("tree has no nodes".into()));
        }
        let mut referenced = vec![false; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            match node {
                Node::Leaf(leaf) => {
                    if !(0.0..=1.0).contains(&leaf.estimate) {
                        return Err(Error::InvalidArgument(format!("leaf {i} estimate outside [0,1]")));
                    }
                }
                Node::Split { rule, left, right } => {
                    rule.validate(&schema)?;
                    for &c in [left, right] {
                        if c <= i || c >= nodes.len() || referenced[c] {
                            return Err(Error::InvalidArgument(format!("node {i} has an invalid child {c}")));
                        }
                        referenced[c] = true;
                    }
                }
            }
        }
        if referenced.iter().skip(1).any(|r| !r) {
            return Err(Error::InvalidArgument("tree has unreachable nodes".into()));
        }
        Ok(Self { schema, nodes })
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Leaf> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf(l) => Some(l),
            Node::Split { .. } => None,
        })
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Arena index of the leaf `context` routes to. The context is assumed valid.
    pub fn route(&self, context: &ContextVector) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(_) => return i,
                Node::Split { rule, left, right } => i = if rule.goes_left(context) { *left } else { *right },
            }
        }
    }

    pub fn leaf_for(&self, context: &ContextVector) -> Result<&Leaf> {
        self.schema.validate(context)?;
        match &self.nodes[self.route(context)] {
            Node::Leaf(l) => Ok(l),
            Node::Split { .. } => unreachable!("route ends at a leaf"),
        }
    }

    /// `p̂` of the leaf reached by `context`.
    pub fn predict_success_prob(&self, context: &ContextVector) -> Result<f64> {
        self.leaf_for(context).map(|l| l.estimate)
    }

    /// `(N1, N0)` of the leaf reached by `context`.
    pub fn leaf_counts(&self, context: &ContextVector) -> Result<(u64, u64)> {
        self.leaf_for(context).map(|l| (l.successes, l.failures))
    }

    /// Adds one observation to the leaf it routes to, keeping the structure fixed.
    pub fn increment_leaf(&mut self, observation: &Observation) -> Result<()> {
        self.schema.validate(&observation.context)?;
        let i = self.route(&observation.context);
        match &mut self.nodes[i] {
            Node::Leaf(l) => l.record(observation.reward),
            Node::Split { .. } => unreachable!("route ends at a leaf"),
        }
        Ok(())
    }

    pub fn total_counts(&self) -> (u64, u64) {
        self.leaves().fold((0, 0), |(s, f), l| (s + l.successes, f + l.failures))
    }

    fn fmt_node(&self, f: &mut fmt::Formatter<'_>, i: usize, indent: usize) -> fmt::Result {
        for _ in 0..indent {
            f.write_str("  ")?;
        }
        match &self.nodes[i] {
            Node::Leaf(l) => writeln!(f, "leaf N1={} N0={} p={}", l.successes, l.failures, l.estimate),
            Node::Split { rule, left, right } => {
                let feature = self.schema.feature(rule.feature());
                match rule {
                    SplitRule::Threshold { threshold, .. } => writeln!(f, "split {} <= {}", feature.name, threshold)?,
                    SplitRule::Levels { left, .. } => {
                        let FeatureKind::Categorical(levels) = &feature.kind else { unreachable!() };
                        write!(f, "split {} in {{", feature.name)?;
                        let mut first = true;
                        for (name, _) in levels.iter().zip(left).filter(|(_, &l)| l) {
                            if !first {
                                f.write_str(",")?;
                            }
                            f.write_str(name)?;
                            first = false;
                        }
                        writeln!(f, "}}")?;
                    }
                }
                self.fmt_node(f, *left, indent + 1)?;
                self.fmt_node(f, *right, indent + 1)
            }
        }
    }
}

/// One node per line, children indented two spaces under their parent (left child first).
impl fmt::Display for DecisionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_node(f, 0, 0)
    }
}
