//! Pruning a grown tree back to its highest-scoring subtree.
//!
//! The candidates are the prunings of the input: trees obtained by
//! collapsing whole subtrees into leaves. A bottom-up pass finds the best
//! one exactly, since the score is a sum over leaves minus a per-test
//! penalty:
//!
//! ```text
//! best(leaf) = ll(leaf)
//! best(test) = max(ll(collapsed), best(yes) + best(no) - alpha)
//! ```
//!
//! Equal scores resolve toward the smaller tree.

use crate::dataset::{Label, NodeCounts, TypeCounts};
use crate::error::{Error, Result};
use crate::scoring::{self, clearly_greater, node_log_likelihood, tree_score, PriorConfig, RuleScore};
use crate::tree::{DecisionTree, Node};

/// Largest tree [`enumerate_prunings`] will accept, in internal nodes.
pub const MAX_ENUMERATED_INTERNAL: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct PruneResult {
    pub tree: DecisionTree,
    pub score: RuleScore,
    /// Internal nodes removed from the input.
    pub pruned_node_count: usize,
}

/// The pruning of `tree` with maximum score under `prior`.
pub fn prune_optimal(tree: &DecisionTree, prior: &PriorConfig) -> Result<PruneResult> {
    prior.validate()?;
    tree.validate()?;
    let root_fallback = root_fallback(tree.root());
    let (_, root) = best_pruning(tree.root(), prior, root_fallback);
    let pruned = DecisionTree::new_unchecked(tree.n_attributes(), root);
    let score = tree_score(&pruned, prior)?;
    Ok(PruneResult {
        pruned_node_count: tree.n_internal() - pruned.n_internal(),
        tree: pruned,
        score,
    })
}

fn root_fallback(root: &Node) -> (f64, Label) {
    match root {
        Node::Leaf { phi, label, .. } => (*phi, *label),
        Node::Test { .. } => (0.5, Label::Positive),
    }
}

fn leaf_parts(node: &Node) -> (f64, Label) {
    match node {
        Node::Leaf { phi, label, .. } => (*phi, *label),
        Node::Test { .. } => unreachable!("leaf_node returns leaves"),
    }
}

fn best_pruning(node: &Node, prior: &PriorConfig, fallback: (f64, Label)) -> (f64, Node) {
    match node {
        Node::Leaf { counts, .. } => (node_log_likelihood(*counts, prior.smoothing), node.clone()),
        Node::Test {
            attribute,
            counts,
            yes,
            no,
        } => {
            let collapsed = scoring::leaf_node(*counts, prior.smoothing, fallback);
            let collapsed_ll = node_log_likelihood(*counts, prior.smoothing);
            let here = leaf_parts(&collapsed);
            let (yes_score, yes_node) = best_pruning(yes, prior, here);
            let (no_score, no_node) = best_pruning(no, prior, here);
            let kept = yes_score + no_score - prior.alpha;
            if clearly_greater(kept, collapsed_ll) {
                (
                    kept,
                    Node::Test {
                        attribute: *attribute,
                        counts: *counts,
                        yes: Box::new(yes_node),
                        no: Box::new(no_node),
                    },
                )
            } else {
                (collapsed_ll, collapsed)
            }
        }
    }
}

/// Scores every pruning of `tree` by brute force. Returns the best total and
/// the number of distinct prunings.
pub fn enumerate_prunings(tree: &DecisionTree, prior: &PriorConfig) -> Result<(f64, u64)> {
    prior.validate()?;
    tree.validate()?;
    let k = tree.n_internal();
    if k > MAX_ENUMERATED_INTERNAL {
        return Err(Error::invalid(format!(
            "tree has {k} internal nodes; enumeration is limited to {MAX_ENUMERATED_INTERNAL}"
        )));
    }
    let mut parents = Vec::with_capacity(k);
    preorder_parents(tree.root(), None, &mut parents);

    let mut best = f64::NEG_INFINITY;
    let mut count = 0u64;
    for mask in 0u32..(1u32 << k) {
        let kept = |i: usize| mask & (1 << i) != 0;
        let closed = (0..k).all(|i| !kept(i) || parents[i].is_none_or(kept));
        if !closed {
            continue;
        }
        count += 1;
        let mut next = 0;
        let root = rebuild(
            tree.root(),
            &kept,
            &mut next,
            prior.smoothing,
            root_fallback(tree.root()),
        );
        let candidate = DecisionTree::new_unchecked(tree.n_attributes(), root);
        let total = tree_score(&candidate, prior)?.total;
        if total > best || count == 1 {
            best = total;
        }
    }
    Ok((best, count))
}

fn preorder_parents(node: &Node, parent: Option<usize>, out: &mut Vec<Option<usize>>) {
    if let Node::Test { yes, no, .. } = node {
        let me = out.len();
        out.push(parent);
        preorder_parents(yes, Some(me), out);
        preorder_parents(no, Some(me), out);
    }
}

// Keeps the internal nodes whose preorder index satisfies `kept`; every
// other internal node is collapsed along with its subtree.
fn rebuild(
    node: &Node,
    kept: &dyn Fn(usize) -> bool,
    next: &mut usize,
    smoothing: f64,
    fallback: (f64, Label),
) -> Node {
    match node {
        Node::Leaf { .. } => node.clone(),
        Node::Test {
            attribute,
            counts,
            yes,
            no,
        } => {
            let me = *next;
            let collapsed = scoring::leaf_node(*counts, smoothing, fallback);
            if !kept(me) {
                *next += node.n_internal();
                return collapsed;
            }
            *next += 1;
            let here = leaf_parts(&collapsed);
            let yes = rebuild(yes, kept, next, smoothing, here);
            let no = rebuild(no, kept, next, smoothing, here);
            Node::Test {
                attribute: *attribute,
                counts: *counts,
                yes: Box::new(yes),
                no: Box::new(no),
            }
        }
    }
}

/// One row of a complexity-prior sensitivity table. Error columns are rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub leaves: usize,
    pub train_err: f64,
    pub holdout_err: f64,
}

/// Prunes `tree` at each alpha of an ascending grid and reports the size and
/// error rates of the result on the training counts and on `holdout`.
pub fn sensitivity_sweep(
    tree: &DecisionTree,
    alphas: &[f64],
    smoothing: f64,
    holdout: &TypeCounts,
) -> Result<Vec<SweepRow>> {
    check_grid(alphas)?;
    if holdout.n_attributes() != tree.n_attributes() {
        return Err(Error::invalid(format!(
            "holdout has {} attributes, tree has {}",
            holdout.n_attributes(),
            tree.n_attributes()
        )));
    }
    let train_total = tree.counts().total().max(1) as f64;
    alphas
        .iter()
        .map(|&alpha| {
            let pruned = prune_optimal(tree, &PriorConfig::new(alpha, smoothing)?)?.tree;
            Ok(SweepRow {
                alpha,
                leaves: pruned.n_leaves(),
                train_err: pruned.training_errors() as f64 / train_total,
                holdout_err: pruned.errors_on(holdout)? as f64 / holdout.total() as f64,
            })
        })
        .collect()
}

/// The alpha with the lowest holdout error; among equals, the largest.
pub fn select_alpha(rows: &[SweepRow]) -> Option<f64> {
    rows.iter()
        .min_by(|a, b| {
            a.holdout_err
                .total_cmp(&b.holdout_err)
                .then(b.alpha.total_cmp(&a.alpha))
        })
        .map(|r| r.alpha)
}

/// Accepts a nonempty, strictly ascending grid of nonnegative alphas.
pub fn check_grid(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::invalid("alpha grid is empty"));
    }
    if alphas.iter().any(|a| a.is_nan() || *a < 0.0) {
        return Err(Error::invalid("alpha grid values must be nonnegative"));
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("alpha grid must be strictly ascending"));
    }
    Ok(())
}

/// Training errors of the leaf that replaces a whole tree.
pub fn collapsed_errors(counts: NodeCounts, smoothing: f64) -> Result<u64> {
    Ok(counts.errors(scoring::decide_leaf(counts, smoothing)?))
}
