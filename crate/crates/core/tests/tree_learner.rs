use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treebandit_core::dataset::{ActionDataset, TrainingSet};
use treebandit_core::schema::{ContextVector, Feature, FeatureKind, FeatureSchema, FeatureValue, Observation};
use treebandit_core::tree::{best_split, fit_cart, grow_unpruned, prune_at, CartConfig, DecisionTree, Node};

/// Best Gini risk reduction over every admissible binary partition, computed from raw rows.
/// Categorical features are searched over all level subsets, not just the ordered prefixes.
fn exhaustive_best_gain(schema: &FeatureSchema, rows: &[Observation], min_leaf: usize) -> Option<f64> {
    let risk = |part: &[&Observation]| {
        let n = part.len() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let p = part.iter().filter(|o| o.reward).count() as f64 / n;
        n * (1.0 - p * p - (1.0 - p) * (1.0 - p))
    };
    let all: Vec<&Observation> = rows.iter().collect();
    let parent = risk(&all);
    let mut best: Option<f64> = None;
    let mut try_partition = |goes_left: &dyn Fn(&Observation) -> bool| {
        let (l, r): (Vec<&Observation>, Vec<&Observation>) = all.iter().partition(|o| goes_left(o));
        if l.len() >= min_leaf && r.len() >= min_leaf {
            let g = parent - risk(&l) - risk(&r);
            best = Some(best.map_or(g, |b: f64| b.max(g)));
        }
    };
    for (f, feature) in schema.features().iter().enumerate() {
        match &feature.kind {
            FeatureKind::Continuous => {
                let mut vals: Vec<f64> = rows.iter().map(|o| o.context.get(f).as_real().unwrap()).collect();
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                for &v in &vals[..vals.len().saturating_sub(1)] {
                    try_partition(&|o: &Observation| o.context.get(f).as_real().unwrap() <= v);
                }
            }
            FeatureKind::Categorical(levels) => {
                for mask in 1u32..(1 << levels.len()) - 1 {
                    try_partition(&|o: &Observation| mask >> o.context.get(f).as_level().unwrap() & 1 == 1);
                }
            }
        }
    }
    best
}

fn random_problem(rng: &mut ChaCha8Rng) -> (Arc<FeatureSchema>, Vec<Observation>) {
    let m = rng.random_range(1..=3);
    let features: Vec<Feature> = (0..m)
        .map(|i| {
            if rng.random_bool(0.5) {
                Feature::continuous(format!("x{i}"))
            } else {
                let levels = rng.random_range(2..=5);
                Feature::categorical(format!("c{i}"), (0..levels).map(|l| format!("l{l}")))
            }
        })
        .collect();
    let schema = Arc::new(FeatureSchema::new(features).unwrap());
    let n = rng.random_range(2..=200);
    let rows = (0..n)
        .map(|_| {
            let values: Vec<FeatureValue> = schema
                .features()
                .iter()
                .map(|f| match &f.kind {
                    // coarse grid so ties between values occur
                    FeatureKind::Continuous => FeatureValue::Real(rng.random_range(0..20) as f64 / 4.0),
                    FeatureKind::Categorical(l) => FeatureValue::Level(rng.random_range(0..l.len() as u32)),
                })
                .collect();
            let ctx = ContextVector::new(values);
            let bias = match ctx.get(0) {
                FeatureValue::Real(x) => x / 5.0,
                FeatureValue::Level(l) => l as f64 / 5.0,
            };
            Observation::new(ctx, rng.random_bool(bias.clamp(0.05, 0.95)))
        })
        .collect();
    (schema, rows)
}

#[test]
fn root_split_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let (schema, rows) = random_problem(&mut rng);
        let min_leaf = rng.random_range(1..=5);
        let data = TrainingSet::from_rows(rows.iter().map(|o| (&o.context, o.reward)));
        let ours = best_split(&schema, &data, min_leaf as u64).unwrap();
        let oracle = exhaustive_best_gain(&schema, &rows, min_leaf);
        match (ours, oracle) {
            (None, None) => {}
            (Some(c), Some(g)) => assert!((c.gain - g).abs() < 1e-9, "ours {} oracle {}", c.gain, g),
            (a, b) => panic!("disagreement: {a:?} vs {b:?}"),
        }
    }
}

fn depth_two_truth(x: f64, y: f64) -> f64 {
    match (x <= 0.5, y <= 0.5) {
        (true, true) => 0.9,
        (true, false) => 0.1,
        (false, true) => 0.3,
        (false, false) => 0.7,
    }
}

fn depth_two_sample(seed: u64, n: usize) -> (Arc<FeatureSchema>, Vec<Observation>) {
    let schema = Arc::new(FeatureSchema::new(vec![Feature::continuous("x"), Feature::continuous("y")]).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let (x, y): (f64, f64) = (rng.random(), rng.random());
            Observation::new(ContextVector::from_reals(&[x, y]), rng.random_bool(depth_two_truth(x, y)))
        })
        .collect();
    (schema, rows)
}

// 200 noisy rows only pin each quadrant down to about ±0.07, so even the true partition misses the
// 0.15 band on a few percent of samples; recovery is checked as a rate over independent samples.
#[test]
fn recovers_depth_two_truth_tree() {
    let mut recovered = 0;
    for seed in 0..40 {
        let (schema, rows) = depth_two_sample(seed, 200);
        let d = ActionDataset::from_observations(0, rows.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let tree = fit_cart(&schema, &d.training_set(), &CartConfig::default(), &mut rng).unwrap();
        let close = [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)].iter().all(|&(x, y)| {
            let p = tree.predict_success_prob(&ContextVector::from_reals(&[x, y])).unwrap();
            (p - depth_two_truth(x, y)).abs() <= 0.15
        });
        recovered += close as usize;
        let oracle = exhaustive_best_gain(&schema, &rows, 5).unwrap();
        let ours = best_split(&schema, &d.training_set(), 5).unwrap().unwrap();
        assert!((ours.gain - oracle).abs() < 1e-9);
    }
    assert!(recovered >= 26, "recovered {recovered}/40");
}

/// Routes by reading the printed dump, independently of the tree's own router.
fn route_by_dump(dump: &str, schema: &FeatureSchema, ctx: &ContextVector) -> (u64, u64) {
    let lines: Vec<(usize, &str)> = dump.lines().map(|l| ((l.len() - l.trim_start().len()) / 2, l.trim())).collect();
    let mut i = 0;
    loop {
        let (depth, text) = lines[i];
        if let Some(rest) = text.strip_prefix("leaf ") {
            let mut it = rest.split_whitespace();
            let n1 = it.next().unwrap().trim_start_matches("N1=").parse().unwrap();
            let n0 = it.next().unwrap().trim_start_matches("N0=").parse().unwrap();
            return (n1, n0);
        }
        let rest = text.strip_prefix("split ").unwrap();
        let left = if let Some((name, thr)) = rest.split_once(" <= ") {
            let f = schema.index_of(name).unwrap();
            ctx.get(f).as_real().unwrap() <= thr.parse::<f64>().unwrap()
        } else {
            let (name, set) = rest.split_once(" in ").unwrap();
            let f = schema.index_of(name).unwrap();
            let level = ctx.get(f).as_level().unwrap() as usize;
            let FeatureKind::Categorical(levels) = &schema.feature(f).kind else { panic!() };
            set.trim_matches(|c| c == '{' || c == '}').split(',').any(|l| l == levels[level])
        };
        // left child is the next line; right child is the next line at depth + 1 after the left subtree
        let left_child = i + 1;
        if left {
            i = left_child;
        } else {
            i = (left_child + 1..lines.len()).find(|&j| lines[j].0 == depth + 1).unwrap();
        }
    }
}

#[test]
fn predictions_match_manual_routing_of_the_dump() {
    let (schema, rows) = depth_two_sample(5, 200);
    let d = ActionDataset::from_observations(0, rows);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tree = fit_cart(&schema, &d.training_set(), &CartConfig::default(), &mut rng).unwrap();
    let dump = tree.to_string();
    assert!(tree.num_leaves() >= 3, "{dump}");
    let mut probe = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let ctx = ContextVector::from_reals(&[probe.random(), probe.random()]);
        let (n1, n0) = route_by_dump(&dump, &schema, &ctx);
        assert_eq!(tree.leaf_counts(&ctx).unwrap(), (n1, n0));
        assert_eq!(tree.predict_success_prob(&ctx).unwrap(), n1 as f64 / (n1 + n0) as f64);
    }
}

fn leaf_of(tree: &DecisionTree, ctx: &ContextVector) -> usize {
    tree.route(ctx)
}

#[test]
fn routing_partitions_contexts_and_conserves_counts() {
    let (schema, rows) = depth_two_sample(21, 300);
    let d = ActionDataset::from_observations(0, rows.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tree = fit_cart(&schema, &d.training_set(), &CartConfig::default(), &mut rng).unwrap();
    for _ in 0..1000 {
        let ctx = ContextVector::from_reals(&[rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0)]);
        let leaf = leaf_of(&tree, &ctx);
        assert!(matches!(tree.nodes()[leaf], Node::Leaf(_)));
    }
    // redistributing the training rows reproduces every leaf's counts
    let mut counts = vec![(0u64, 0u64); tree.nodes().len()];
    for o in &rows {
        let c = &mut counts[leaf_of(&tree, &o.context)];
        if o.reward { c.0 += 1 } else { c.1 += 1 }
    }
    for (i, node) in tree.nodes().iter().enumerate() {
        if let Node::Leaf(l) = node {
            assert_eq!((l.successes, l.failures), counts[i]);
            assert_eq!(l.estimate, l.successes as f64 / l.total() as f64);
        }
    }
    let successes = rows.iter().filter(|o| o.reward).count() as u64;
    assert_eq!(tree.total_counts(), (successes, rows.len() as u64 - successes));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pruning_is_monotone_in_complexity(seed in 0u64..10_000, n in 10usize..150) {
        let (schema, rows) = depth_two_sample(seed, n);
        let d = ActionDataset::from_observations(0, rows);
        let data = d.training_set();
        let grid = [0.0, 0.001, 0.01, 0.03, 0.1, 0.3, 1.0];
        let leaves: Vec<usize> = grid.iter().map(|&cp| prune_at(&schema, &data, 2, cp).unwrap().num_leaves()).collect();
        prop_assert!(leaves.windows(2).all(|w| w[0] >= w[1]), "{:?}", leaves);
        prop_assert_eq!(leaves[leaves.len() - 1], 1);
    }

    #[test]
    fn unpruned_tree_interpolates_unique_contexts(seed in 0u64..10_000, n in 1usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schema = Arc::new(FeatureSchema::new(vec![
            Feature::continuous("x"),
            Feature::categorical("c", ["a", "b", "c"]),
        ]).unwrap());
        // distinct x values make every context unique
        let rows: Vec<Observation> = (0..n)
            .map(|i| Observation::new(
                ContextVector::new(vec![FeatureValue::Real(i as f64 * 0.37 - 3.0), FeatureValue::Level(rng.random_range(0..3))]),
                rng.random_bool(0.4),
            ))
            .collect();
        let d = ActionDataset::from_observations(0, rows.clone());
        let tree = fit_cart(&schema, &d.training_set(), &CartConfig::unpruned(1), &mut rng).unwrap();
        for o in &rows {
            prop_assert_eq!(tree.predict_success_prob(&o.context).unwrap(), if o.reward { 1.0 } else { 0.0 });
        }
        let grown = grow_unpruned(&schema, &d.training_set(), 1).unwrap();
        prop_assert!(grown.num_leaves() >= tree.num_leaves());
    }
}
