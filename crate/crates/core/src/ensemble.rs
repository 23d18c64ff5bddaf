//! Pooled class-proportion estimates from stochastically grown trees.
//!
//! A single grown tree gives one high-posterior rule; its leaf proportions
//! are a poor stand-in for the posterior mean of a type's positive
//! proportion. Sampling several trees whose splits favour high gain, pruning
//! each, and averaging their leaf proportions approximates the contribution
//! of the dominant rules to that expectation.
//!
//! Splits are drawn with probability proportional to `exp(gain_bits / T)`.
//! Small `T` approaches the greedy grower, large `T` approaches a uniform
//! choice among the attributes that separate the node.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::TypeCounts;
use crate::dataset::TypeKey;
use crate::error::{Error, Result};
use crate::induction::{choose, grow_with, GrowConfig, SplitEvaluation};
use crate::pruning::prune_optimal;
use crate::scoring::{tree_score, PriorConfig, RuleScore};
use crate::tree::DecisionTree;

/// Temperatures below this select splits greedily with the configured
/// tie-break instead of sampling.
pub const GREEDY_TEMPERATURE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Weighting {
    #[default]
    Uniform,
    /// Weight each tree by `exp(total - max total)`.
    Posterior,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub size: usize,
    pub temperature: f64,
    pub seed: u64,
    pub weighting: Weighting,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            size: 16,
            temperature: 0.1,
            seed: 0,
            weighting: Weighting::Uniform,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::invalid("ensemble size must be at least 1"));
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return Err(Error::invalid(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// Index into `weights` drawn proportionally to the weights.
fn draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // rounding left u at the top of the range
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Softmax-over-gain attribute choice.
pub fn sample_attribute<R: Rng + ?Sized>(
    evaluations: &[SplitEvaluation],
    grow: &GrowConfig,
    temperature: f64,
    rng: &mut R,
) -> Option<usize> {
    if evaluations.is_empty() {
        return None;
    }
    if temperature < GREEDY_TEMPERATURE {
        return choose(evaluations, grow).map(|e| e.attribute);
    }
    let best = evaluations
        .iter()
        .map(|e| e.gain_bits)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = evaluations
        .iter()
        .map(|e| ((e.gain_bits - best) / temperature).exp())
        .collect();
    Some(evaluations[draw(&weights, rng)].attribute)
}

/// Grows a tree choosing each split by softmax over gain, then prunes it
/// to its highest-scoring subtree under `prior`.
pub fn sample_tree<R: Rng + ?Sized>(
    counts: &TypeCounts,
    grow: &GrowConfig,
    prior: &PriorConfig,
    temperature: f64,
    rng: &mut R,
) -> Result<DecisionTree> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::invalid(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let full = grow_with(counts, grow, prior, &mut |evals| {
        sample_attribute(evals, grow, temperature, rng).expect("nonempty candidates")
    })?;
    Ok(prune_optimal(&full, prior)?.tree)
}

/// Sampled, pruned trees and their scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub trees: Vec<DecisionTree>,
    pub scores: Vec<RuleScore>,
}

/// Samples `config.size` trees. Tree `i` draws from stream `i` of a ChaCha
/// generator keyed by the seed, so each tree depends only on the seed and
/// its index.
pub fn build(counts: &TypeCounts, grow: &GrowConfig, prior: &PriorConfig, config: &EnsembleConfig) -> Result<Ensemble> {
    config.validate()?;
    let mut trees = Vec::with_capacity(config.size);
    let mut scores = Vec::with_capacity(config.size);
    for i in 0..config.size {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(i as u64);
        let tree = sample_tree(counts, grow, prior, config.temperature, &mut rng)?;
        scores.push(tree_score(&tree, prior)?);
        trees.push(tree);
    }
    Ok(Ensemble { trees, scores })
}

impl Ensemble {
    pub fn estimate(&self, types: &[TypeKey], weighting: Weighting) -> Result<PooledEstimate> {
        let totals: Vec<f64> = self.scores.iter().map(|s| s.total).collect();
        pool(&self.trees, &totals, types, weighting)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PooledEstimate {
    /// Pooled positive proportion per queried type, in query order.
    pub estimates: Vec<(TypeKey, f64)>,
    /// Score total of each pooled tree.
    pub tree_scores: Vec<f64>,
}

/// Averages the leaf proportions the trees assign to each type. `scores`
/// are the trees' score totals, used by posterior weighting.
pub fn pool(trees: &[DecisionTree], scores: &[f64], types: &[TypeKey], weighting: Weighting) -> Result<PooledEstimate> {
    if trees.is_empty() {
        return Err(Error::invalid("cannot pool an empty list of trees"));
    }
    if scores.len() != trees.len() {
        return Err(Error::invalid(format!(
            "{} scores for {} trees",
            scores.len(),
            trees.len()
        )));
    }
    let weights = match weighting {
        Weighting::Uniform => vec![1.0; trees.len()],
        Weighting::Posterior => {
            let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if best == f64::NEG_INFINITY {
                vec![1.0; trees.len()]
            } else {
                scores.iter().map(|s| (s - best).exp()).collect()
            }
        }
    };

    let mut estimates = Vec::with_capacity(types.len());
    for key in types {
        // running weighted mean: identical inputs reproduce exactly
        let mut mean = 0.0;
        let mut seen = 0.0;
        for (tree, &w) in trees.iter().zip(&weights) {
            let (_, phi) = tree.classify(key.values())?;
            if w > 0.0 {
                seen += w;
                mean += (w / seen) * (phi - mean);
            }
        }
        estimates.push((key.clone(), mean.clamp(0.0, 1.0)));
    }
    Ok(PooledEstimate {
        estimates,
        tree_scores: scores.to_vec(),
    })
}
