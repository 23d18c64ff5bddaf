//! Acceptance criteria. Run with
//! `cargo test -p bayestree --test acceptance -- --nocapture` to see one
//! PASS/FAIL line per criterion.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bayestree::dataset::split_holdout;
use bayestree::ensemble::{self, EnsembleConfig, Weighting};
use bayestree::induction::tie_set;
use bayestree::oracle::{beta_posterior_mean, exhaustive_best_rule, min_training_errors};
use bayestree::pruning::{collapsed_errors, select_alpha};
use bayestree::synth::{gen_parity, gen_tree_concept};
use bayestree::{
    enumerate_prunings, evaluate_split, grow, prune_optimal, sensitivity_sweep, DecisionTree, Example, GrowConfig,
    Label, Model, Node, NodeCounts, PriorConfig, Schema, SplitCriterion, TestPath, TypeCounts, TypeKey,
};

const ARGMAX_NODES: usize = 1000;
const ARGMAX_MAX_COUNT: u64 = 50;
const ARGMAX_BUDGET: Duration = Duration::from_secs(5);

const ORACLE_DATASETS: usize = 100;
const ORACLE_BUDGET: Duration = Duration::from_secs(5);

const DP_TREES: usize = 100;
const DP_MAX_INTERNAL: usize = 12;
const DP_MAX_ALPHA: f64 = 5.0;
const DP_TOLERANCE: f64 = 1e-9;
const DP_BUDGET: Duration = Duration::from_secs(30);

const PARITY_BITS: usize = 8;
const PARITY_GAIN_BOUND: f64 = 1e-12;
const PARITY_BUDGET: Duration = Duration::from_secs(1);

const NOISE_SEEDS: u64 = 20;
const NOISE_GRID: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
const NOISE_HOLDOUT: f64 = 0.25;
const NOISE_WIN_FRACTION: f64 = 0.6;
const NOISE_BUDGET: Duration = Duration::from_secs(60);

const BETA_CLOSED_FORM_TOLERANCE: f64 = 1e-12;
const BETA_INTEGRAL_TOLERANCE: f64 = 1e-6;
const BETA_GRID_POINTS: usize = 1_000_000;

const DEGENERATE_TEMPERATURE: f64 = 1e-9;
const DEGENERATE_SIZE: usize = 8;

const ROUND_TRIP_TREES: usize = 100;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    check(elapsed < budget, || format!("took {elapsed:?}, budget {budget:?}"))
}

fn random_counts(rng: &mut ChaCha8Rng, n_attributes: usize, max_types: usize, max_count: u64) -> TypeCounts {
    let space = 1u64 << n_attributes;
    let n_types = rng.gen_range(1..=max_types.min(space as usize));
    let mut entries = Vec::with_capacity(n_types);
    while entries.len() < n_types {
        let key = TypeKey::from_index(rng.gen_range(0..space), n_attributes);
        if entries.iter().any(|(k, _)| k == &key) {
            continue;
        }
        let pos = rng.gen_range(0..=max_count);
        let neg = rng.gen_range(0..=max_count);
        if pos + neg > 0 {
            entries.push((key, NodeCounts::new(pos, neg)));
        }
    }
    TypeCounts::from_counts(n_attributes, entries).unwrap()
}

// p^p n^n and (p + n)^(p + n) for one branch: its maximum likelihood as a
// ratio of integers.
fn branch_likelihood(c: NodeCounts) -> (BigUint, BigUint) {
    let pow = |k: u64| BigUint::from(k).pow(k as u32);
    (pow(c.pos) * pow(c.neg), pow(c.total()))
}

/// Attributes of maximal split likelihood, compared exactly.
fn exact_argmax(counts: &TypeCounts) -> Vec<usize> {
    let ratios: Vec<(usize, BigUint, BigUint)> = (0..counts.n_attributes())
        .map(|j| {
            let (yes, no) = counts.split_counts(&TestPath::root(), j).unwrap();
            let (yn, yd) = branch_likelihood(yes);
            let (nn, nd) = branch_likelihood(no);
            (j, yn * nn, yd * nd)
        })
        .collect();
    let cmp = |a: &(usize, BigUint, BigUint), b: &(usize, BigUint, BigUint)| (&a.1 * &b.2).cmp(&(&b.1 * &a.2));
    let best = ratios.iter().max_by(|a, b| cmp(a, b)).unwrap();
    ratios
        .iter()
        .filter(|r| cmp(r, best) == Ordering::Equal)
        .map(|r| r.0)
        .collect()
}

fn argmax_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut with_ties = 0;
    for node in 0..ARGMAX_NODES {
        let n_attributes = rng.gen_range(2..=10);
        let counts = random_counts(&mut rng, n_attributes, 12, ARGMAX_MAX_COUNT);
        let evals: Vec<_> = (0..n_attributes)
            .map(|j| evaluate_split(&counts, &TestPath::root(), j).unwrap())
            .collect();
        let by_gain = tie_set(&evals, SplitCriterion::Gain);
        let by_likelihood = tie_set(&evals, SplitCriterion::Likelihood);
        let exact = exact_argmax(&counts);
        check(by_gain == by_likelihood, || {
            format!("node {node}: gain set {by_gain:?}, likelihood set {by_likelihood:?}")
        })?;
        check(by_gain == exact, || {
            format!("node {node}: gain set {by_gain:?}, exact set {exact:?}")
        })?;
        if exact.len() > 1 {
            with_ties += 1;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, ARGMAX_BUDGET)?;
    Ok(format!(
        "{ARGMAX_NODES} nodes, {with_ties} with tied maxima, {elapsed:.2?}"
    ))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for dataset in 0..ORACLE_DATASETS {
        let n_attributes = rng.gen_range(1..=3);
        let counts = random_counts(&mut rng, n_attributes, 8, 20);
        let tree = grow(&counts, &GrowConfig::default(), &PriorConfig::default()).map_err(|e| e.to_string())?;
        let (_, oracle) = exhaustive_best_rule(&counts).map_err(|e| e.to_string())?;
        let tree_errors = tree.training_errors();
        let bound = min_training_errors(&counts);
        check(tree_errors == oracle && oracle == bound, || {
            format!("dataset {dataset}: tree {tree_errors}, oracle {oracle}, sum of minima {bound}")
        })?;
    }
    let elapsed = start.elapsed();
    within(elapsed, ORACLE_BUDGET)?;
    Ok(format!("{ORACLE_DATASETS} datasets, {elapsed:.2?}"))
}

fn pruning_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut done = 0;
    let mut worst: f64 = 0.0;
    let mut largest = 0;
    while done < DP_TREES {
        let n_attributes = rng.gen_range(2..=6);
        let counts = random_counts(&mut rng, n_attributes, 10, 15);
        let tree = grow(&counts, &GrowConfig::default(), &PriorConfig::default()).map_err(|e| e.to_string())?;
        if tree.n_internal() > DP_MAX_INTERNAL {
            continue;
        }
        let alpha = rng.gen_range(0.0..=DP_MAX_ALPHA);
        let prior = PriorConfig::new(alpha, 0.0).unwrap();
        let dp = prune_optimal(&tree, &prior).map_err(|e| e.to_string())?;
        let (best, _) = enumerate_prunings(&tree, &prior).map_err(|e| e.to_string())?;
        let gap = (dp.score.total - best).abs();
        check(gap <= DP_TOLERANCE, || {
            format!("tree {done}, alpha {alpha}: dp {} enumeration {best}", dp.score.total)
        })?;
        worst = worst.max(gap);
        largest = largest.max(tree.n_internal());
        done += 1;
    }
    let elapsed = start.elapsed();
    within(elapsed, DP_BUDGET)?;
    Ok(format!(
        "{DP_TREES} trees of up to {largest} internal nodes, largest gap {worst:e}, {elapsed:.2?}"
    ))
}

fn parity() -> Outcome {
    let start = Instant::now();
    let (_, examples) = gen_parity(PARITY_BITS, true, 0, 0).map_err(|e| e.to_string())?;
    let counts = TypeCounts::from_examples(&examples).map_err(|e| e.to_string())?;
    check(counts.total() == 256, || format!("{} examples", counts.total()))?;
    for j in 0..PARITY_BITS {
        let gain = evaluate_split(&counts, &TestPath::root(), j).unwrap().gain_bits;
        check(gain < PARITY_GAIN_BOUND, || {
            format!("root gain of attribute {j} is {gain}")
        })?;
    }
    let tree = grow(&counts, &GrowConfig::default(), &PriorConfig::default()).map_err(|e| e.to_string())?;
    check(tree.training_errors() == 0, || {
        format!("full tree makes {} errors", tree.training_errors())
    })?;
    let collapsed = collapsed_errors(counts.aggregate(), 0.0).map_err(|e| e.to_string())?;
    check(collapsed == 128, || format!("single leaf makes {collapsed} errors"))?;
    let pruned = prune_optimal(&tree, &PriorConfig::default()).map_err(|e| e.to_string())?;
    check(pruned.tree.training_errors() == 0, || {
        format!("alpha 0 pruning makes {} errors", pruned.tree.training_errors())
    })?;
    let elapsed = start.elapsed();
    within(elapsed, PARITY_BUDGET)?;
    Ok(format!(
        "{} leaves after alpha 0 pruning, {elapsed:.2?}",
        pruned.tree.n_leaves()
    ))
}

fn accuracy(tree: &DecisionTree, test: &[Example]) -> f64 {
    let correct = test
        .iter()
        .filter(|e| tree.classify(&e.values).unwrap().0 == e.label)
        .count();
    correct as f64 / test.len() as f64
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        (xs[m - 1] + xs[m]) / 2.0
    } else {
        xs[m]
    }
}

fn pruning_under_noise() -> Outcome {
    let start = Instant::now();
    let config = GrowConfig::default();
    let mut pruned_acc = Vec::new();
    let mut full_acc = Vec::new();
    for seed in 0..NOISE_SEEDS {
        let concept = gen_tree_concept(10, 3, 0.1, 200, 2000, seed).map_err(|e| e.to_string())?;
        let (fit, holdout) = split_holdout(&concept.train, NOISE_HOLDOUT, seed).map_err(|e| e.to_string())?;
        let fit_counts = TypeCounts::from_examples(&fit).map_err(|e| e.to_string())?;
        let holdout_counts = TypeCounts::from_examples(&holdout).map_err(|e| e.to_string())?;
        let probe = grow(&fit_counts, &config, &PriorConfig::default()).map_err(|e| e.to_string())?;
        let rows = sensitivity_sweep(&probe, &NOISE_GRID, 0.0, &holdout_counts).map_err(|e| e.to_string())?;
        let alpha = select_alpha(&rows).expect("nonempty grid");

        let all = TypeCounts::from_examples(&concept.train).map_err(|e| e.to_string())?;
        let full = grow(&all, &config, &PriorConfig::default()).map_err(|e| e.to_string())?;
        let pruned = prune_optimal(&full, &PriorConfig::new(alpha, 0.0).unwrap()).map_err(|e| e.to_string())?;
        full_acc.push(accuracy(&full, &concept.test));
        pruned_acc.push(accuracy(&pruned.tree, &concept.test));
    }
    let wins = pruned_acc.iter().zip(&full_acc).filter(|(p, f)| p >= f).count();
    let win_fraction = wins as f64 / NOISE_SEEDS as f64;
    let (pruned_median, full_median) = (median(pruned_acc), median(full_acc));
    check(pruned_median >= full_median, || {
        format!("median accuracy pruned {pruned_median}, unpruned {full_median}")
    })?;
    check(win_fraction >= NOISE_WIN_FRACTION, || {
        format!("pruned wins or ties on {wins} of {NOISE_SEEDS} seeds")
    })?;
    let elapsed = start.elapsed();
    within(elapsed, NOISE_BUDGET)?;
    Ok(format!(
        "median accuracy pruned {pruned_median:.4} vs unpruned {full_median:.4}, \
         wins or ties {wins}/{NOISE_SEEDS}, {elapsed:.2?}"
    ))
}

/// Posterior mean of the proportion under a uniform prior by the midpoint
/// rule, with the density evaluated in log space.
fn integrated_posterior_mean(p: u64, n: u64, points: usize) -> f64 {
    let h = 1.0 / points as f64;
    let log_density = |x: f64| p as f64 * x.ln() + n as f64 * (1.0 - x).ln();
    let mode = p as f64 / (p + n) as f64;
    let peak = log_density(mode);
    let (mut mass, mut moment) = (0.0, 0.0);
    for i in 0..points {
        let x = (i as f64 + 0.5) * h;
        let w = (log_density(x) - peak).exp();
        mass += w;
        moment += x * w;
    }
    moment / mass
}

fn bernoulli_baseline() -> Outcome {
    let mean = beta_posterior_mean(90, 60, 1.0, 1.0).map_err(|e| e.to_string())?;
    let closed = 91.0 / 152.0;
    check((mean - closed).abs() <= BETA_CLOSED_FORM_TOLERANCE, || {
        format!("posterior mean {mean}, expected {closed}")
    })?;
    let integrated = integrated_posterior_mean(90, 60, BETA_GRID_POINTS);
    check((mean - integrated).abs() <= BETA_INTEGRAL_TOLERANCE, || {
        format!("posterior mean {mean}, integration gives {integrated}")
    })?;
    Ok(format!("{mean} vs integral {integrated}"))
}

fn ensemble_degeneracy() -> Outcome {
    let concept = gen_tree_concept(8, 3, 0.1, 300, 0, 11).map_err(|e| e.to_string())?;
    let counts = TypeCounts::from_examples(&concept.train).map_err(|e| e.to_string())?;
    let config = GrowConfig::default();
    let prior = PriorConfig::new(1.0, 0.0).unwrap();
    let reference = prune_optimal(&grow(&counts, &config, &prior).map_err(|e| e.to_string())?, &prior)
        .map_err(|e| e.to_string())?
        .tree;
    let members = ensemble::build(
        &counts,
        &config,
        &prior,
        &EnsembleConfig {
            size: DEGENERATE_SIZE,
            temperature: DEGENERATE_TEMPERATURE,
            seed: 2024,
            weighting: Weighting::Uniform,
        },
    )
    .map_err(|e| e.to_string())?;
    check(members.trees.len() == DEGENERATE_SIZE, || {
        format!("{} trees sampled", members.trees.len())
    })?;
    for (i, tree) in members.trees.iter().enumerate() {
        check(tree == &reference, || format!("tree {i} differs from the greedy tree"))?;
    }
    let types: Vec<TypeKey> = (0..1u64 << 8).map(|i| TypeKey::from_index(i, 8)).collect();
    for weighting in [Weighting::Uniform, Weighting::Posterior] {
        let pooled = members.estimate(&types, weighting).map_err(|e| e.to_string())?;
        for (key, estimate) in &pooled.estimates {
            let (_, phi) = reference.classify(key.values()).unwrap();
            check(*estimate == phi, || {
                format!("type {key}: pooled {estimate}, leaf {phi}")
            })?;
        }
    }
    Ok(format!(
        "{DEGENERATE_SIZE} identical trees of {} leaves",
        reference.n_leaves()
    ))
}

fn random_node(rng: &mut ChaCha8Rng, free: &mut Vec<usize>, depth: usize) -> Node {
    if free.is_empty() || depth == 0 || rng.gen_bool(0.3) {
        let counts = NodeCounts::new(rng.gen_range(0..1000), rng.gen_range(0..1000));
        let phi = match rng.gen_range(0..3) {
            0 if !counts.is_empty() => counts.pos as f64 / counts.total() as f64,
            1 => rng.gen_range(0..=4) as f64 / 4.0,
            _ => rng.gen::<f64>(),
        };
        let label = if rng.gen() { Label::Positive } else { Label::Negative };
        return Node::leaf(counts, phi, label);
    }
    let j = free.swap_remove(rng.gen_range(0..free.len()));
    let yes = random_node(rng, free, depth - 1);
    let no = random_node(rng, free, depth - 1);
    free.push(j);
    Node::test(j, yes, no)
}

fn serialization_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut largest = 0;
    for i in 0..ROUND_TRIP_TREES {
        let n = rng.gen_range(1..=12);
        let names = (0..n).map(|j| format!("attr_{j}")).collect();
        let schema = Schema::new(names).unwrap();
        let mut free: Vec<usize> = (0..n).collect();
        let tree = DecisionTree::new(n, random_node(&mut rng, &mut free, 6)).unwrap();
        let prior = PriorConfig::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..2.0)).unwrap();
        let model = Model::new(schema, prior, tree).unwrap();
        let first = model.to_text();
        let parsed = Model::parse(&first).map_err(|e| format!("tree {i}: {e}"))?;
        check(parsed == model, || format!("tree {i}: parsed model differs"))?;
        let second = parsed.to_text();
        check(first == second, || format!("tree {i}: text differs after a round trip"))?;
        largest = largest.max(model.tree.n_leaves());
    }
    Ok(format!("{ROUND_TRIP_TREES} trees, up to {largest} leaves"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("1 gain and likelihood pick the same attributes", argmax_equivalence),
        ("2 full tree matches the exhaustive rule oracle", oracle_equivalence),
        ("3 pruning DP matches enumeration", pruning_exactness),
        ("4 parity defeats greedy gain but not the full tree", parity),
        ("5 pruning improves accuracy under label noise", pruning_under_noise),
        ("6 Bernoulli posterior mean", bernoulli_baseline),
        ("7 ensemble degenerates to the greedy tree", ensemble_degeneracy),
        ("8 model text round trip", serialization_round_trip),
    ];
    let mut failures = Vec::new();
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                println!("FAIL  {name}: {why}");
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
