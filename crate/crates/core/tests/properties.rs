use std::collections::BTreeMap;

use proptest::prelude::*;

use bayestree::ensemble::{pool, Weighting};
use bayestree::oracle::min_training_errors;
use bayestree::scoring::entropy_bits;
use bayestree::{
    decide_leaf, enumerate_prunings, evaluate_split, expected_error_cost, grow, leaf_log_likelihood,
    max_leaf_log_likelihood, prune_optimal, tree_score, DecisionTree, Example, GrowConfig, Label, Model, Node,
    NodeCounts, PriorConfig, Schema, TestPath, TypeCounts, TypeKey,
};

fn counts_strategy(max_attributes: usize, max_count: u64) -> impl Strategy<Value = TypeCounts> {
    (1..=max_attributes).prop_flat_map(move |n| {
        let space = 1u64 << n;
        prop::collection::btree_map(
            0..space,
            (0..=max_count, 0..=max_count),
            1..=12usize.min(space as usize),
        )
        .prop_filter_map("all types empty", move |map| {
            let entries: Vec<_> = map
                .into_iter()
                .filter(|(_, (p, q))| p + q > 0)
                .map(|(i, (p, q))| (TypeKey::from_index(i, n), NodeCounts::new(p, q)))
                .collect();
            if entries.is_empty() {
                None
            } else {
                Some(TypeCounts::from_counts(n, entries).unwrap())
            }
        })
    })
}

fn examples_strategy() -> impl Strategy<Value = Vec<Example>> {
    (1usize..=5).prop_flat_map(|n| {
        prop::collection::vec(
            (prop::collection::vec(any::<bool>(), n), any::<bool>()).prop_map(|(values, positive)| {
                Example::new(values, if positive { Label::Positive } else { Label::Negative })
            }),
            1..60,
        )
    })
}

fn grown(counts: &TypeCounts) -> DecisionTree {
    grow(counts, &GrowConfig::default(), &PriorConfig::default()).unwrap()
}

fn prior(alpha: f64) -> PriorConfig {
    PriorConfig::new(alpha, 0.0).unwrap()
}

proptest! {
    #[test]
    fn type_proportions_sum_to_one(counts in counts_strategy(6, 30)) {
        let total: f64 = counts.lambda_hat_map().values().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for (key, c) in counts.iter() {
            let phi = counts.phi_hat(&key.clone()).unwrap();
            prop_assert_eq!(phi, c.pos as f64 / c.total() as f64);
        }
    }

    #[test]
    fn counting_ignores_example_order(examples in examples_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = examples.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = TypeCounts::from_examples(&examples).unwrap();
        let b = TypeCounts::from_examples(&shuffled).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn leaf_estimate_maximises_likelihood(p in 0u64..200, n in 0u64..200) {
        prop_assume!(p + n > 0);
        let c = NodeCounts::new(p, n);
        let (_, best) = max_leaf_log_likelihood(c, 0.0).unwrap();
        for i in 0..=1000 {
            let ll = leaf_log_likelihood(c, i as f64 / 1000.0).unwrap();
            prop_assert!(ll <= best + 1e-9, "phi {} gives {} above {}", i as f64 / 1000.0, ll, best);
        }
    }

    #[test]
    fn likelihood_scales_with_counts(p in 0u64..100, n in 0u64..100, k in 1u64..20) {
        prop_assume!(p + n > 0);
        let (_, one) = max_leaf_log_likelihood(NodeCounts::new(p, n), 0.0).unwrap();
        let (_, many) = max_leaf_log_likelihood(NodeCounts::new(k * p, k * n), 0.0).unwrap();
        prop_assert!((many - k as f64 * one).abs() <= 1e-9 * (1.0 + many.abs()));
    }

    #[test]
    fn splitting_never_lowers_unpenalised_likelihood(counts in counts_strategy(5, 20), j in 0usize..5) {
        prop_assume!(j < counts.n_attributes());
        let e = evaluate_split(&counts, &TestPath::root(), j).unwrap();
        let (_, parent) = max_leaf_log_likelihood(e.parent(), 0.0).unwrap();
        prop_assert!(e.max_ll >= parent - 1e-9);
    }

    #[test]
    fn gain_is_bounded_by_parent_entropy(counts in counts_strategy(6, 40), j in 0usize..6) {
        prop_assume!(j < counts.n_attributes());
        let e = evaluate_split(&counts, &TestPath::root(), j).unwrap();
        prop_assert!(e.gain_bits >= 0.0);
        prop_assert!(e.gain_bits <= entropy_bits(e.parent()) + 1e-12);
    }

    #[test]
    fn gain_is_a_rescaled_likelihood_gain(counts in counts_strategy(6, 40), j in 0usize..6) {
        prop_assume!(j < counts.n_attributes());
        let e = evaluate_split(&counts, &TestPath::root(), j).unwrap();
        let n = e.parent().total() as f64;
        let (_, parent) = max_leaf_log_likelihood(e.parent(), 0.0).unwrap();
        let rescaled = (e.max_ll - parent) / (n * std::f64::consts::LN_2);
        prop_assert!((e.gain_bits - rescaled).abs() < 1e-9);
    }

    #[test]
    fn empirical_error_cost_is_sum_of_minima(counts in counts_strategy(5, 30)) {
        let decisions: BTreeMap<TypeKey, Label> = counts
            .iter()
            .map(|(k, c)| (k.clone(), decide_leaf(c, 0.0).unwrap()))
            .collect();
        let cost = expected_error_cost(&decisions, &counts.lambda_hat_map(), &counts.phi_hat_map()).unwrap();
        let expected = min_training_errors(&counts) as f64 / counts.total() as f64;
        prop_assert!((cost - expected).abs() < 1e-12);
    }

    #[test]
    fn full_tree_reaches_minimum_training_error(counts in counts_strategy(6, 20)) {
        let tree = grown(&counts);
        prop_assert_eq!(tree.training_errors(), min_training_errors(&counts));
        prop_assert_eq!(tree.counts(), counts.aggregate());
    }

    #[test]
    fn growth_is_deterministic(counts in counts_strategy(6, 20)) {
        prop_assert_eq!(grown(&counts), grown(&counts));
    }

    #[test]
    fn dp_matches_enumeration(counts in counts_strategy(5, 12), alpha in 0.0f64..6.0) {
        let tree = grown(&counts);
        prop_assume!(tree.n_internal() <= 12);
        let dp = prune_optimal(&tree, &prior(alpha)).unwrap();
        let (best, _) = enumerate_prunings(&tree, &prior(alpha)).unwrap();
        prop_assert!((dp.score.total - best).abs() <= 1e-9);
        prop_assert_eq!(dp.score, tree_score(&dp.tree, &prior(alpha)).unwrap());
    }

    #[test]
    fn pruning_shrinks_as_alpha_grows(counts in counts_strategy(6, 20), a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let tree = grown(&counts);
        let small = prune_optimal(&tree, &prior(hi)).unwrap().tree;
        let large = prune_optimal(&tree, &prior(lo)).unwrap().tree;
        prop_assert!(small.n_leaves() <= large.n_leaves());
        prop_assert!(large.n_leaves() <= tree.n_leaves());
    }

    #[test]
    fn pruning_never_lowers_training_error(counts in counts_strategy(6, 20), alpha in 0.0f64..10.0) {
        let tree = grown(&counts);
        let pruned = prune_optimal(&tree, &prior(alpha)).unwrap();
        prop_assert!(pruned.tree.training_errors() >= tree.training_errors());
        prop_assert_eq!(pruned.pruned_node_count, tree.n_internal() - pruned.tree.n_internal());
    }

    #[test]
    fn pooling_is_order_free_and_bounded(
        phis in prop::collection::vec(0.0f64..=1.0, 1..10),
        scores in prop::collection::vec(-50.0f64..0.0, 10),
        rotate in 0usize..10,
    ) {
        let trees: Vec<_> = phis
            .iter()
            .map(|&phi| DecisionTree::new(1, Node::leaf(NodeCounts::new(1, 1), phi, Label::Positive)).unwrap())
            .collect();
        let scores = &scores[..trees.len()];
        let keys: [TypeKey; 1] = ["1".parse().unwrap()];
        let r = rotate % trees.len();
        let mut trees_rot = trees.clone();
        trees_rot.rotate_left(r);
        let mut scores_rot = scores.to_vec();
        scores_rot.rotate_left(r);
        let lo = phis.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = phis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for weighting in [Weighting::Uniform, Weighting::Posterior] {
            let a = pool(&trees, scores, &keys, weighting).unwrap().estimates[0].1;
            let b = pool(&trees_rot, &scores_rot, &keys, weighting).unwrap().estimates[0].1;
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(a >= lo - 1e-12 && a <= hi + 1e-12);
        }
    }

    #[test]
    fn model_text_round_trips(counts in counts_strategy(6, 20), alpha in 0.0f64..10.0, smoothing in 0.0f64..2.0) {
        let p = PriorConfig::new(alpha, smoothing).unwrap();
        let tree = prune_optimal(&grow(&counts, &GrowConfig::default(), &p).unwrap(), &p).unwrap().tree;
        let model = Model::new(Schema::numbered(counts.n_attributes()).unwrap(), p, tree).unwrap();
        let text = model.to_text();
        let parsed = Model::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &model);
        prop_assert_eq!(parsed.to_text(), text);
    }
}
