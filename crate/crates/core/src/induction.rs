//! Top-down greedy tree growth.
//!
//! At each node the attribute with the greatest information gain is tested.
//! Maximising gain is the same as picking the split whose two-leaf
//! underlying rule has the greatest likelihood, since
//!
//! ```text
//! gain_bits = (max_ll(split) - max_ll(parent)) / (n * ln 2)
//! ```
//!
//! and the prior is the same for every candidate at a node. Both criteria
//! are offered through [`SplitCriterion`]. A zero-gain split is still made:
//! concepts such as parity reveal nothing until several attributes have
//! been tested together.

use std::f64::consts::LN_2;

use crate::dataset::{NodeCounts, TestPath, TypeCounts, TypeKey};
use crate::error::{Error, Result};
use crate::scoring::{self, entropy_bits, node_log_likelihood, PriorConfig};
use crate::tree::{DecisionTree, Node};

/// Gains within this many bits of the best are ties.
pub const GAIN_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    #[default]
    LowestIndex,
    HighestIndex,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SplitCriterion {
    /// Information gain in bits.
    #[default]
    Gain,
    /// Maximised log likelihood of the two-leaf underlying rule.
    Likelihood,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GrowConfig {
    /// Nodes with fewer examples than this become leaves.
    pub min_leaf: u64,
    pub tie_break: TieBreak,
    pub max_depth: Option<usize>,
    pub criterion: SplitCriterion,
}

impl Default for GrowConfig {
    fn default() -> Self {
        GrowConfig {
            min_leaf: 1,
            tie_break: TieBreak::LowestIndex,
            max_depth: None,
            criterion: SplitCriterion::Gain,
        }
    }
}

impl GrowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(Error::invalid("min_leaf must be at least 1"));
        }
        Ok(())
    }
}

/// Branch counts of a candidate test and its two scores.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitEvaluation {
    pub attribute: usize,
    pub yes: NodeCounts,
    pub no: NodeCounts,
    /// Parent entropy minus the example-weighted child entropies, in bits.
    pub gain_bits: f64,
    /// Unnormalised maximum log likelihood of the two leaves, in nats.
    pub max_ll: f64,
}

impl SplitEvaluation {
    pub fn from_branches(attribute: usize, yes: NodeCounts, no: NodeCounts) -> Self {
        let parent = yes + no;
        let n = parent.total() as f64;
        let gain_bits = if n == 0.0 {
            0.0
        } else {
            let children = (yes.total() as f64 * entropy_bits(yes) + no.total() as f64 * entropy_bits(no)) / n;
            (entropy_bits(parent) - children).max(0.0)
        };
        let max_ll = node_log_likelihood(yes, 0.0) + node_log_likelihood(no, 0.0);
        SplitEvaluation {
            attribute,
            yes,
            no,
            gain_bits,
            max_ll,
        }
    }

    pub fn parent(&self) -> NodeCounts {
        self.yes + self.no
    }

    /// Whether both branches receive examples.
    pub fn separates(&self) -> bool {
        !self.yes.is_empty() && !self.no.is_empty()
    }
}

/// Evaluates testing attribute `j` at the node selected by `path`.
pub fn evaluate_split(counts: &TypeCounts, path: &TestPath, j: usize) -> Result<SplitEvaluation> {
    let (yes, no) = counts.split_counts(path, j)?;
    if (yes + no).is_empty() {
        return Err(Error::invalid("no examples reach this node"));
    }
    Ok(SplitEvaluation::from_branches(j, yes, no))
}

/// Best attribute to test at the node selected by `path`, among those not
/// yet tested there. `None` only when every attribute is tested.
pub fn best_attribute(counts: &TypeCounts, path: &TestPath, config: &GrowConfig) -> Result<Option<usize>> {
    let evaluations = (0..counts.n_attributes())
        .filter(|&j| !path.tests(j))
        .map(|j| evaluate_split(counts, path, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(choose(&evaluations, config).map(|e| e.attribute))
}

/// Attributes whose score ties the best under `criterion`.
pub fn tie_set(evaluations: &[SplitEvaluation], criterion: SplitCriterion) -> Vec<usize> {
    let Some(n) = evaluations.first().map(|e| e.parent().total() as f64) else {
        return Vec::new();
    };
    let (score, tol): (fn(&SplitEvaluation) -> f64, f64) = match criterion {
        SplitCriterion::Gain => (|e| e.gain_bits, GAIN_TIE_TOLERANCE),
        SplitCriterion::Likelihood => (|e| e.max_ll, GAIN_TIE_TOLERANCE * LN_2 * n),
    };
    let best = evaluations.iter().map(score).fold(f64::NEG_INFINITY, f64::max);
    evaluations
        .iter()
        .filter(|e| score(e) >= best - tol)
        .map(|e| e.attribute)
        .collect()
}

/// The evaluation winning under `config`'s criterion and tie-break.
pub fn choose<'a>(evaluations: &'a [SplitEvaluation], config: &GrowConfig) -> Option<&'a SplitEvaluation> {
    let ties = tie_set(evaluations, config.criterion);
    let pick = match config.tie_break {
        TieBreak::LowestIndex => ties.iter().min(),
        TieBreak::HighestIndex => ties.iter().max(),
    }?;
    evaluations.iter().find(|e| e.attribute == *pick)
}

/// Grows a tree greedily until every leaf is pure, holds a single object
/// type, holds fewer than `min_leaf` examples or sits at `max_depth`.
pub fn grow(counts: &TypeCounts, config: &GrowConfig, prior: &PriorConfig) -> Result<DecisionTree> {
    grow_with(counts, config, prior, &mut |evals| {
        choose(evals, config).expect("nonempty candidates").attribute
    })
}

type Chooser<'c> = dyn FnMut(&[SplitEvaluation]) -> usize + 'c;

/// Growth with a caller-supplied attribute chooser. The chooser sees only
/// tests that separate the node's examples and returns an attribute index
/// from among them.
pub(crate) fn grow_with(
    counts: &TypeCounts,
    config: &GrowConfig,
    prior: &PriorConfig,
    chooser: &mut Chooser<'_>,
) -> Result<DecisionTree> {
    config.validate()?;
    prior.validate()?;
    if counts.total() == 0 {
        return Err(Error::data("cannot grow a tree from no examples"));
    }
    let n = counts.n_attributes();
    let members: Vec<(&TypeKey, NodeCounts)> = counts.iter().collect();
    let mut grower = Grower {
        config,
        smoothing: prior.smoothing,
        tested: vec![false; n],
        chooser,
    };
    let root = grower.node(members, 0, (0.5, crate::dataset::Label::Positive))?;
    Ok(DecisionTree::new_unchecked(n, root))
}

struct Grower<'a, 'c> {
    config: &'a GrowConfig,
    smoothing: f64,
    tested: Vec<bool>,
    chooser: &'a mut Chooser<'c>,
}

impl Grower<'_, '_> {
    fn node(
        &mut self,
        members: Vec<(&TypeKey, NodeCounts)>,
        depth: usize,
        fallback: (f64, crate::dataset::Label),
    ) -> Result<Node> {
        let counts: NodeCounts = members.iter().map(|&(_, c)| c).sum();
        let leaf = scoring::leaf_node(counts, self.smoothing, fallback);
        let stop = counts.is_empty()
            || counts.is_pure()
            || counts.total() < self.config.min_leaf
            || self.config.max_depth.is_some_and(|d| depth >= d);
        if stop {
            return Ok(leaf);
        }

        let candidates: Vec<SplitEvaluation> = (0..self.tested.len())
            .filter(|&j| !self.tested[j])
            .map(|j| {
                let (yes, no) =
                    members
                        .iter()
                        .fold((NodeCounts::default(), NodeCounts::default()), |(y, n), &(k, c)| {
                            if k.get(j) {
                                (y + c, n)
                            } else {
                                (y, n + c)
                            }
                        });
                SplitEvaluation::from_branches(j, yes, no)
            })
            .filter(SplitEvaluation::separates)
            .collect();
        if candidates.is_empty() {
            // a single object type reaches this node
            return Ok(leaf);
        }

        let j = (self.chooser)(&candidates);
        if !candidates.iter().any(|e| e.attribute == j) {
            return Err(Error::inconsistent(format!(
                "chooser picked attribute {j}, which is not a candidate"
            )));
        }
        let (yes, no): (Vec<_>, Vec<_>) = members.into_iter().partition(|(k, _)| k.get(j));
        let here = match &leaf {
            Node::Leaf { phi, label, .. } => (*phi, *label),
            Node::Test { .. } => unreachable!(),
        };
        self.tested[j] = true;
        let yes = self.node(yes, depth + 1, here);
        let no = self.node(no, depth + 1, here);
        self.tested[j] = false;
        Ok(Node::test(j, yes?, no?))
    }
}
