use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::BanditEnvironment;
use crate::error::{Error, Result};
use crate::schema::{ContextVector, Feature, FeatureKind, FeatureSchema};
use crate::tree::{DecisionTree, Leaf, Node, SplitRule};

/// Ground truth of the simulated ads world: one probability tree per action over binary
/// user features.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSpec {
    schema: Arc<FeatureSchema>,
    action_names: Vec<String>,
    trees: Vec<DecisionTree>,
}

impl TruthSpec {
    pub fn new(schema: Arc<FeatureSchema>, actions: Vec<(String, DecisionTree)>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidConfig("truth spec declares no actions".into()));
        }
        if let Some(f) = schema.features().iter().find(|f| matches!(f.kind, FeatureKind::Continuous)) {
            return Err(Error::InvalidSchema(format!("simulated feature `{}` must be categorical", f.name)));
        }
        for (name, tree) in &actions {
            if tree.schema().as_ref() != schema.as_ref() {
                return Err(Error::SchemaMismatch(format!("truth tree `{name}` uses a different schema")));
            }
            if let Some(l) = tree.leaves().find(|l| !(0.0..=1.0).contains(&l.estimate)) {
                return Err(Error::InvalidConfig(format!("truth tree `{name}` has leaf probability {}", l.estimate)));
            }
        }
        let (action_names, trees) = actions.into_iter().unzip();
        Ok(Self { schema, action_names, trees })
    }

    /// The shipped default world: golf clubs, basketball nets, tennis rackets and soccer balls
    /// over four yes/no user attributes.
    ///
    /// ```text
    /// golf        age_over_35 ? (male ? 0.85 : 0.40) : 0.05
    /// basketball  age_over_35 ? 0.10 : (urban ? 0.80 : 0.30)
    /// tennis      male ? 0.10 : (age_over_35 ? 0.60 : (urban ? 0.35 : 0.55))
    /// soccer      has_kids ? (age_over_35 ? 0.20 : (urban ? 0.50 : 0.75)) : 0.05
    /// ```
    pub fn sports_default() -> Self {
        const AGE: usize = 0;
        const MALE: usize = 1;
        const URBAN: usize = 2;
        const KIDS: usize = 3;
        let schema = Arc::new(
            FeatureSchema::new(
                ["age_over_35", "male", "urban", "has_kids"]
                    .iter()
                    .map(|n| Feature::categorical(*n, ["no", "yes"]))
                    .collect(),
            )
            .expect("static schema"),
        );
        let yes = |f, yes_branch, no_branch| Shape::Split(f, Box::new(no_branch), Box::new(yes_branch));
        use Shape::Leaf as p;
        let trees = [
            ("golf", yes(AGE, yes(MALE, p(0.85), p(0.40)), p(0.05))),
            ("basketball", yes(AGE, p(0.10), yes(URBAN, p(0.80), p(0.30)))),
            ("tennis", yes(MALE, p(0.10), yes(AGE, p(0.60), yes(URBAN, p(0.35), p(0.55))))),
            ("soccer", yes(KIDS, yes(AGE, p(0.20), yes(URBAN, p(0.50), p(0.75))), p(0.05))),
        ];
        let actions = trees
            .into_iter()
            .map(|(name, shape)| {
                let mut nodes = Vec::new();
                shape.build(&mut nodes);
                (name.to_string(), DecisionTree::from_nodes(schema.clone(), nodes).expect("static tree"))
            })
            .collect();
        Self::new(schema, actions).expect("static truth spec")
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn num_actions(&self) -> usize {
        self.trees.len()
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// `p(a, x)` for every action.
    pub fn probabilities(&self, context: &ContextVector) -> Result<Vec<f64>> {
        self.trees.iter().map(|t| t.predict_success_prob(context)).collect()
    }
}

/// Binary-split builder for static truth trees; the left child takes level 0.
enum Shape {
    Leaf(f64),
    Split(usize, Box<Shape>, Box<Shape>),
}

impl Shape {
    fn build(self, nodes: &mut Vec<Node>) -> usize {
        let at = nodes.len();
        match self {
            Shape::Leaf(p) => nodes.push(Node::Leaf(Leaf::with_probability(p))),
            Shape::Split(feature, left, right) => {
                nodes.push(Node::Leaf(Leaf::with_probability(0.0)));
                let l = left.build(nodes);
                let r = right.build(nodes);
                let rule = SplitRule::Levels { feature, left: vec![true, false] };
                nodes[at] = Node::Split { rule, left: l, right: r };
            }
        }
        at
    }
}

/// Simulated users with independent, uniformly distributed feature levels and Bernoulli clicks.
#[derive(Debug, Clone)]
pub struct SportsEnv {
    truth: Arc<TruthSpec>,
}

impl SportsEnv {
    pub fn new(truth: Arc<TruthSpec>) -> Self {
        Self { truth }
    }

    pub fn truth(&self) -> &TruthSpec {
        &self.truth
    }
}

impl BanditEnvironment for SportsEnv {
    fn num_actions(&self) -> usize {
        self.truth.num_actions()
    }

    fn schema(&self) -> &Arc<FeatureSchema> {
        &self.truth.schema
    }

    fn next_context(&mut self, rng: &mut dyn RngCore) -> Result<ContextVector> {
        let levels: Vec<u32> = self
            .truth
            .schema
            .features()
            .iter()
            .map(|f| rng.random_range(0..f.num_levels().unwrap_or(1) as u32))
            .collect();
        Ok(ContextVector::from_levels(&levels))
    }

    fn realize_reward(&mut self, context: &ContextVector, action: usize, rng: &mut dyn RngCore) -> Result<bool> {
        let tree = self
            .truth
            .trees
            .get(action)
            .ok_or(Error::InvalidAction { action, num_actions: self.truth.num_actions() })?;
        let p = tree.predict_success_prob(context)?;
        // one uniform per step whatever the action, so policies share reward noise
        let u: f64 = rng.random();
        Ok(u < p)
    }

    fn oracle_probs(&self, context: &ContextVector) -> Result<Vec<f64>> {
        self.truth.probabilities(context)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_truth_routes_by_hand() {
        let truth = TruthSpec::sports_default();
        // over 35, male, rural, no kids
        let p = truth.probabilities(&ContextVector::from_levels(&[1, 1, 0, 0])).unwrap();
        assert_eq!(p, vec![0.85, 0.10, 0.10, 0.05]);
        let p = truth.probabilities(&ContextVector::from_levels(&[0, 0, 1, 1])).unwrap();
        assert_eq!(p, vec![0.05, 0.80, 0.35, 0.50]);
    }

    #[test]
    fn every_context_has_a_clear_best_action() {
        let truth = TruthSpec::sports_default();
        let mut winners = [false; 4];
        for code in 0..16u32 {
            let levels: Vec<u32> = (0..4).map(|b| (code >> b) & 1).collect();
            let mut p = truth.probabilities(&ContextVector::from_levels(&levels)).unwrap();
            let best = (0..4).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
            winners[best] = true;
            p.sort_by(|a, b| b.total_cmp(a));
            assert!(p[0] - p[1] >= 0.2 - 1e-12);
        }
        assert_eq!(winners, [true; 4]);
    }

    #[test]
    fn click_rate_matches_truth() {
        let mut env = SportsEnv::new(Arc::new(TruthSpec::sports_default()));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ctx = ContextVector::from_levels(&[1, 1, 0, 0]);
        let n = 100_000;
        let clicks = (0..n).filter(|_| env.realize_reward(&ctx, 0, &mut rng).unwrap()).count();
        assert!((clicks as f64 / n as f64 - 0.85).abs() < 0.005);
        assert!(env.realize_reward(&ctx, 4, &mut rng).is_err());
    }

    #[test]
    fn rejects_out_of_range_probabilities() {
        let truth = TruthSpec::sports_default();
        let bad = DecisionTree::single_leaf(truth.schema().clone(), Leaf::with_probability(1.5));
        assert!(TruthSpec::new(truth.schema().clone(), vec![("x".into(), bad)]).is_err());
    }
}
