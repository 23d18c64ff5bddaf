//! Synthetic datasets: parity, and noisy random tree concepts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Example, Label, NodeCounts, Schema, TypeKey};
use crate::error::{Error, Result};
use crate::tree::{DecisionTree, Node};

pub const MIN_PARITY_BITS: usize = 2;
pub const MAX_PARITY_BITS: usize = 16;

fn parity(values: &[bool]) -> Label {
    if values.iter().filter(|&&b| b).count() % 2 == 1 {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Parity data: positive iff an odd number of bits are set. `complete`
/// lists all `2^bits` vectors once in index order; otherwise `sample_size`
/// vectors are drawn uniformly with replacement.
pub fn gen_parity(bits: usize, complete: bool, sample_size: usize, seed: u64) -> Result<(Schema, Vec<Example>)> {
    if !(MIN_PARITY_BITS..=MAX_PARITY_BITS).contains(&bits) {
        return Err(Error::invalid(format!(
            "parity needs {MIN_PARITY_BITS}..={MAX_PARITY_BITS} bits, got {bits}"
        )));
    }
    let schema = Schema::numbered(bits)?;
    let examples = if complete {
        (0..1u64 << bits)
            .map(|i| {
                let values = TypeKey::from_index(i, bits).values().to_vec();
                let label = parity(&values);
                Example::new(values, label)
            })
            .collect()
    } else {
        if sample_size == 0 {
            return Err(Error::invalid("sample size must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..sample_size)
            .map(|_| {
                let values: Vec<bool> = (0..bits).map(|_| rng.gen()).collect();
                let label = parity(&values);
                Example::new(values, label)
            })
            .collect()
    };
    Ok((schema, examples))
}

/// A random target concept with its noisy training sample and noise-free
/// test sample.
#[derive(Clone, Debug)]
pub struct TreeConcept {
    pub schema: Schema,
    pub train: Vec<Example>,
    pub test: Vec<Example>,
    pub target: DecisionTree,
    /// Training labels that were flipped.
    pub flipped: usize,
}

/// Builds a complete target tree of the given depth over random distinct
/// attributes per path, with random leaf labels covering both classes.
/// Training labels are flipped independently with probability `noise`.
pub fn gen_tree_concept(
    attrs: usize,
    depth: usize,
    noise: f64,
    train_size: usize,
    test_size: usize,
    seed: u64,
) -> Result<TreeConcept> {
    if attrs == 0 {
        return Err(Error::invalid("need at least one attribute"));
    }
    if depth == 0 || depth > attrs {
        return Err(Error::invalid(format!("depth must lie in 1..={attrs}, got {depth}")));
    }
    if !(0.0..0.5).contains(&noise) {
        return Err(Error::invalid(format!("noise must lie in [0, 0.5), got {noise}")));
    }
    if train_size == 0 {
        return Err(Error::invalid("training size must be positive"));
    }
    let schema = Schema::numbered(attrs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_leaves = 1usize << depth;
    let labels = loop {
        let labels: Vec<Label> = (0..n_leaves)
            .map(|_| if rng.gen() { Label::Positive } else { Label::Negative })
            .collect();
        if labels.contains(&Label::Positive) && labels.contains(&Label::Negative) {
            break labels;
        }
    };
    let mut free: Vec<usize> = (0..attrs).collect();
    let mut next_leaf = labels.into_iter();
    let root = target_node(&mut rng, &mut free, depth, &mut next_leaf);
    let target = DecisionTree::new(attrs, root)?;

    let sample = |rng: &mut ChaCha8Rng| -> Result<(Vec<bool>, Label)> {
        let values: Vec<bool> = (0..attrs).map(|_| rng.gen()).collect();
        let (label, _) = target.classify(&values)?;
        Ok((values, label))
    };
    let mut flipped = 0;
    let mut train = Vec::with_capacity(train_size);
    for _ in 0..train_size {
        let (values, mut label) = sample(&mut rng)?;
        if rng.gen_bool(noise) {
            label = flip(label);
            flipped += 1;
        }
        train.push(Example::new(values, label));
    }
    let test = (0..test_size)
        .map(|_| sample(&mut rng).map(|(v, l)| Example::new(v, l)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TreeConcept {
        schema,
        train,
        test,
        target,
        flipped,
    })
}

fn flip(label: Label) -> Label {
    match label {
        Label::Positive => Label::Negative,
        Label::Negative => Label::Positive,
    }
}

fn target_node(
    rng: &mut ChaCha8Rng,
    free: &mut Vec<usize>,
    depth: usize,
    labels: &mut impl Iterator<Item = Label>,
) -> Node {
    if depth == 0 {
        let label = labels.next().expect("one label per leaf");
        let phi = if label.is_positive() { 1.0 } else { 0.0 };
        return Node::leaf(NodeCounts::default(), phi, label);
    }
    free.shuffle(rng);
    let j = free.pop().expect("depth <= attrs");
    let yes = target_node(rng, free, depth - 1, labels);
    let no = target_node(rng, free, depth - 1, labels);
    free.push(j);
    Node::test(j, yes, no)
}
