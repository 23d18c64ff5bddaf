//! Decision-tree induction as Bayesian rule selection.
//!
//! Trees are grown greedily by information gain, which picks the split of
//! greatest likelihood, then pruned back to the subtree maximising a
//! complexity-penalised log likelihood. Several stochastically grown trees
//! can be pooled to estimate per-type class proportions.
//!
//! ```
//! use bayestree::{grow, prune_optimal, GrowConfig, PriorConfig, TypeCounts};
//! use bayestree::synth::gen_parity;
//!
//! let (_, examples) = gen_parity(4, true, 0, 0).unwrap();
//! let counts = TypeCounts::from_examples(&examples).unwrap();
//! let tree = grow(&counts, &GrowConfig::default(), &PriorConfig::default()).unwrap();
//! assert_eq!(tree.training_errors(), 0);
//!
//! let pruned = prune_optimal(&tree, &PriorConfig::new(100.0, 0.0).unwrap()).unwrap();
//! assert_eq!(pruned.tree.n_leaves(), 1);
//! ```

pub mod cli;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod induction;
pub mod model;
pub mod oracle;
pub mod pruning;
pub mod scoring;
pub mod synth;
pub mod tree;

pub use dataset::{ClassTokens, Example, Label, NodeCounts, Schema, TestPath, TypeCounts, TypeKey};
pub use ensemble::{EnsembleConfig, PooledEstimate, Weighting};
pub use error::{Error, Result};
pub use induction::{best_attribute, evaluate_split, grow, GrowConfig, SplitCriterion, SplitEvaluation, TieBreak};
pub use model::Model;
pub use pruning::{enumerate_prunings, prune_optimal, sensitivity_sweep, PruneResult, SweepRow};
pub use scoring::{
    decide_leaf, expected_error_cost, leaf_log_likelihood, max_leaf_log_likelihood, tree_score, PriorConfig, RuleScore,
};
pub use tree::{DecisionTree, Node};
