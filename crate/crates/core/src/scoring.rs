//! Bayesian scoring of classification rules.
//!
//! A tree's underlying rule assigns one positive-class proportion to each
//! leaf. Its log posterior is, up to a rule-independent constant, the log
//! likelihood of the training counts under those proportions minus a
//! complexity penalty of `alpha` nats per test node. The likelihood term is
//! used directly in place of the discrimination-information form; the two
//! differ by the empirical entropy of the data, which no rule can change.

use std::collections::BTreeMap;

use crate::dataset::{Label, NodeCounts, TypeKey};
use crate::error::{Error, Result};
use crate::tree::{DecisionTree, Node};

/// Complexity prior: `alpha` nats per internal test node, and the
/// pseudocount `smoothing` added to both classes when estimating leaf
/// proportions (0 gives maximum likelihood).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorConfig {
    pub alpha: f64,
    pub smoothing: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            alpha: 0.0,
            smoothing: 0.0,
        }
    }
}

impl PriorConfig {
    pub fn new(alpha: f64, smoothing: f64) -> Result<Self> {
        let prior = PriorConfig { alpha, smoothing };
        prior.validate()?;
        Ok(prior)
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        PriorConfig { alpha, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        // alpha may be +inf: every split then loses to a leaf
        if self.alpha.is_nan() || self.alpha < 0.0 {
            return Err(Error::invalid(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        if !self.smoothing.is_finite() || self.smoothing < 0.0 {
            return Err(Error::invalid(format!(
                "smoothing must be a finite nonnegative pseudocount, got {}",
                self.smoothing
            )));
        }
        Ok(())
    }
}

/// Log posterior of a rule up to an additive constant, in nats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuleScore {
    pub log_likelihood: f64,
    pub complexity_penalty: f64,
    pub total: f64,
}

impl RuleScore {
    pub fn new(log_likelihood: f64, complexity_penalty: f64) -> Self {
        RuleScore {
            log_likelihood,
            complexity_penalty,
            total: log_likelihood - complexity_penalty,
        }
    }
}

// k * ln(x) with 0 * ln 0 = 0.
fn xlogy(k: u64, x: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

/// `p ln(phi) + n ln(1 - phi)`; `-inf` when the rule forbids observed data.
pub fn leaf_log_likelihood(c: NodeCounts, phi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::invalid(format!("proportion {phi} outside [0, 1]")));
    }
    Ok(xlogy(c.pos, phi) + xlogy(c.neg, 1.0 - phi))
}

/// Smoothed leaf proportion `(p + a) / (p + n + 2a)`.
pub fn leaf_estimate(c: NodeCounts, smoothing: f64) -> Result<f64> {
    if !smoothing.is_finite() || smoothing < 0.0 {
        return Err(Error::invalid(format!("invalid smoothing {smoothing}")));
    }
    let denom = c.total() as f64 + 2.0 * smoothing;
    if denom == 0.0 {
        return Err(Error::invalid(
            "proportion undefined for an empty node without smoothing",
        ));
    }
    Ok((c.pos as f64 + smoothing) / denom)
}

/// Leaf proportion and the log likelihood it attains. With `smoothing = 0`
/// this is the maximum over all proportions.
pub fn max_leaf_log_likelihood(c: NodeCounts, smoothing: f64) -> Result<(f64, f64)> {
    let phi = leaf_estimate(c, smoothing)?;
    Ok((phi, leaf_log_likelihood(c, phi)?))
}

/// Positive iff the leaf proportion is at least one half.
pub fn decide_leaf(c: NodeCounts, smoothing: f64) -> Result<Label> {
    let phi = leaf_estimate(c, smoothing)?;
    Ok(label_for(phi))
}

pub(crate) fn label_for(phi: f64) -> Label {
    if phi >= 0.5 {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Log likelihood contributed by a node's examples if it were a leaf.
/// Empty nodes contribute nothing.
pub(crate) fn node_log_likelihood(c: NodeCounts, smoothing: f64) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let phi = (c.pos as f64 + smoothing) / (c.total() as f64 + 2.0 * smoothing);
    xlogy(c.pos, phi) + xlogy(c.neg, 1.0 - phi)
}

/// Class entropy of a node in bits.
pub fn entropy_bits(c: NodeCounts) -> f64 {
    let n = c.total() as f64;
    if n == 0.0 {
        return 0.0;
    }
    [c.pos, c.neg]
        .into_iter()
        .filter(|&k| k > 0)
        .map(|k| {
            let q = k as f64 / n;
            -q * q.log2()
        })
        .sum()
}

/// Posterior score of a tree: the leaves' log likelihood under their
/// estimated proportions, less `alpha` per test node.
pub fn tree_score(tree: &DecisionTree, prior: &PriorConfig) -> Result<RuleScore> {
    prior.validate()?;
    tree.validate()?;
    let log_likelihood = tree
        .root()
        .leaves()
        .into_iter()
        .map(|leaf| node_log_likelihood(leaf.counts(), prior.smoothing))
        .sum();
    Ok(RuleScore::new(log_likelihood, penalty(prior.alpha, tree.n_internal())))
}

pub(crate) fn penalty(alpha: f64, n_internal: usize) -> f64 {
    if n_internal == 0 {
        0.0
    } else {
        alpha * n_internal as f64
    }
}

/// Expected probability of error of a decision mapping when types occur
/// with proportions `lambda` and are positive with proportions `phi`.
pub fn expected_error_cost(
    decisions: &BTreeMap<TypeKey, Label>,
    lambda: &BTreeMap<TypeKey, f64>,
    phi: &BTreeMap<TypeKey, f64>,
) -> Result<f64> {
    let total: f64 = lambda.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("type proportions sum to {total}, not 1")));
    }
    let mut cost = 0.0;
    for (key, &weight) in lambda {
        if weight < 0.0 {
            return Err(Error::invalid(format!("negative proportion for type {key}")));
        }
        if weight == 0.0 {
            continue;
        }
        let decision = decisions
            .get(key)
            .ok_or_else(|| Error::invalid(format!("no decision for type {key}")))?;
        let positive = *phi
            .get(key)
            .ok_or_else(|| Error::invalid(format!("no class proportion for type {key}")))?;
        if !(0.0..=1.0).contains(&positive) {
            return Err(Error::invalid(format!(
                "class proportion {positive} for type {key} outside [0, 1]"
            )));
        }
        cost += weight
            * match decision {
                Label::Positive => 1.0 - positive,
                Label::Negative => positive,
            };
    }
    Ok(cost)
}

/// True when `a` beats `b` by more than rounding noise at their scale.
pub(crate) fn clearly_greater(a: f64, b: f64) -> bool {
    if a == f64::NEG_INFINITY {
        return false;
    }
    if b == f64::NEG_INFINITY {
        return true;
    }
    a - b > 1e-12 * (1.0 + a.abs().max(b.abs()))
}

/// A leaf for `counts`; empty nodes take the `fallback` proportion and label.
pub(crate) fn leaf_node(counts: NodeCounts, smoothing: f64, fallback: (f64, Label)) -> Node {
    if counts.is_empty() {
        return Node::leaf(counts, fallback.0, fallback.1);
    }
    let phi = (counts.pos as f64 + smoothing) / (counts.total() as f64 + 2.0 * smoothing);
    Node::leaf(counts, phi, label_for(phi))
}
