//! Brute-force and closed-form references.

use std::collections::BTreeMap;

use crate::dataset::{Label, TypeCounts, TypeKey};
use crate::error::{Error, Result};

/// Largest attribute count [`exhaustive_best_rule`] enumerates.
pub const MAX_EXHAUSTIVE_ATTRIBUTES: usize = 3;

/// Searches every labelling of the `2^N` object types for one with the
/// fewest training errors. Rules are visited in lexicographic order over
/// types in index order with positive before negative, and the first
/// minimum is returned.
pub fn exhaustive_best_rule(counts: &TypeCounts) -> Result<(BTreeMap<TypeKey, Label>, u64)> {
    let n = counts.n_attributes();
    if n > MAX_EXHAUSTIVE_ATTRIBUTES {
        return Err(Error::invalid(format!(
            "exhaustive search supports at most {MAX_EXHAUSTIVE_ATTRIBUTES} attributes, got {n}"
        )));
    }
    let types: Vec<TypeKey> = (0..1u64 << n).map(|i| TypeKey::from_index(i, n)).collect();
    let tallies: Vec<_> = types.iter().map(|k| counts.get(k).unwrap_or_default()).collect();
    let n_types = types.len();

    // bit (n_types - 1 - t) of `rule` set means type t is negative, so
    // counting upward walks the lexicographic order
    let mut best: Option<(u64, u64)> = None;
    for rule in 0u64..(1u64 << n_types) {
        let errors: u64 = tallies
            .iter()
            .enumerate()
            .map(|(t, c)| c.errors(rule_label(rule, t, n_types)))
            .sum();
        if best.is_none_or(|(_, e)| errors < e) {
            best = Some((rule, errors));
        }
    }
    let (rule, errors) = best.expect("at least one rule");
    let decisions = types
        .into_iter()
        .enumerate()
        .map(|(t, k)| (k, rule_label(rule, t, n_types)))
        .collect();
    Ok((decisions, errors))
}

fn rule_label(rule: u64, t: usize, n_types: usize) -> Label {
    if rule >> (n_types - 1 - t) & 1 == 1 {
        Label::Negative
    } else {
        Label::Positive
    }
}

/// Minimum achievable training errors, `sum_i min(p_i, n_i)`.
pub fn min_training_errors(counts: &TypeCounts) -> u64 {
    counts.iter().map(|(_, c)| c.pos.min(c.neg)).sum()
}

/// Posterior mean of a Bernoulli proportion under a `Beta(a, b)` prior
/// after `p` successes and `n_neg` failures.
pub fn beta_posterior_mean(p: u64, n_neg: u64, a: f64, b: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || a < 0.0 || b < 0.0 {
        return Err(Error::invalid(format!(
            "pseudocounts must be finite and nonnegative, got ({a}, {b})"
        )));
    }
    let denom = p as f64 + n_neg as f64 + a + b;
    if denom == 0.0 {
        return Err(Error::invalid(
            "posterior mean undefined with no data and no prior mass",
        ));
    }
    Ok((p as f64 + a) / denom)
}
