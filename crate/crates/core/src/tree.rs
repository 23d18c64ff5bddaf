//! The decision-tree hypothesis representation.

use crate::dataset::{Label, NodeCounts, TypeCounts};
use crate::error::{Error, Result};

/// A tree node. `Test` routes examples whose attribute is 1 to `yes`.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Test {
        attribute: usize,
        counts: NodeCounts,
        yes: Box<Node>,
        no: Box<Node>,
    },
    Leaf {
        counts: NodeCounts,
        phi: f64,
        label: Label,
    },
}

impl Node {
    pub fn leaf(counts: NodeCounts, phi: f64, label: Label) -> Node {
        Node::Leaf { counts, phi, label }
    }

    /// A test node whose counts are the sum of its children's.
    pub fn test(attribute: usize, yes: Node, no: Node) -> Node {
        Node::Test {
            attribute,
            counts: yes.counts() + no.counts(),
            yes: Box::new(yes),
            no: Box::new(no),
        }
    }

    pub fn counts(&self) -> NodeCounts {
        match self {
            Node::Test { counts, .. } | Node::Leaf { counts, .. } => *counts,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Test { yes, no, .. } => yes.n_leaves() + no.n_leaves(),
        }
    }

    pub fn n_internal(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Test { yes, no, .. } => 1 + yes.n_internal() + no.n_internal(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Test { yes, no, .. } => 1 + yes.depth().max(no.depth()),
        }
    }

    /// Leaves in yes-before-no order.
    pub fn leaves(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                Node::Leaf { .. } => out.push(node),
                Node::Test { yes, no, .. } => {
                    stack.push(no);
                    stack.push(yes);
                }
            }
        }
        out
    }

    fn route(&self, values: &[bool]) -> &Node {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { .. } => return node,
                Node::Test { attribute, yes, no, .. } => node = if values[*attribute] { yes } else { no },
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    n_attributes: usize,
    root: Node,
}

impl DecisionTree {
    /// Wraps a root node after checking the structural invariants.
    pub fn new(n_attributes: usize, root: Node) -> Result<Self> {
        let tree = DecisionTree { n_attributes, root };
        tree.validate()?;
        Ok(tree)
    }

    pub(crate) fn new_unchecked(n_attributes: usize, root: Node) -> Self {
        DecisionTree { n_attributes, root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    pub fn counts(&self) -> NodeCounts {
        self.root.counts()
    }

    pub fn n_leaves(&self) -> usize {
        self.root.n_leaves()
    }

    pub fn n_internal(&self) -> usize {
        self.root.n_internal()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Checks that no attribute repeats on a path, that attributes are in
    /// range, that test counts equal their children's sum and that leaf
    /// proportions lie in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        let mut tested = vec![false; self.n_attributes];
        validate_node(&self.root, &mut tested)
    }

    /// Label and leaf proportion for an attribute vector.
    pub fn classify(&self, values: &[bool]) -> Result<(Label, f64)> {
        if values.len() != self.n_attributes {
            return Err(Error::invalid(format!(
                "expected {} attribute values, got {}",
                self.n_attributes,
                values.len()
            )));
        }
        match self.root.route(values) {
            Node::Leaf { phi, label, .. } => Ok((*label, *phi)),
            Node::Test { .. } => unreachable!("route stops at leaves"),
        }
    }

    /// Misclassified training examples, read off the leaf counts.
    pub fn training_errors(&self) -> u64 {
        self.root
            .leaves()
            .into_iter()
            .map(|leaf| match leaf {
                Node::Leaf { counts, label, .. } => counts.errors(*label),
                Node::Test { .. } => unreachable!(),
            })
            .sum()
    }

    /// Misclassified examples of an arbitrary tally.
    pub fn errors_on(&self, data: &TypeCounts) -> Result<u64> {
        let mut errors = 0;
        for (key, c) in data.iter() {
            let (label, _) = self.classify(key.values())?;
            errors += c.errors(label);
        }
        Ok(errors)
    }
}

fn validate_node(node: &Node, tested: &mut [bool]) -> Result<()> {
    match node {
        Node::Leaf { phi, .. } => {
            if !(0.0..=1.0).contains(phi) {
                return Err(Error::inconsistent(format!("leaf proportion {phi} outside [0, 1]")));
            }
            Ok(())
        }
        Node::Test {
            attribute,
            counts,
            yes,
            no,
        } => {
            let j = *attribute;
            if j >= tested.len() {
                return Err(Error::inconsistent(format!(
                    "attribute {j} out of range for {} attributes",
                    tested.len()
                )));
            }
            if tested[j] {
                return Err(Error::inconsistent(format!("attribute {j} tested twice on one path")));
            }
            let sum = yes.counts() + no.counts();
            if sum != *counts {
                return Err(Error::inconsistent(format!(
                    "test on attribute {j} holds ({}, {}) but its children sum to ({}, {})",
                    counts.pos, counts.neg, sum.pos, sum.neg
                )));
            }
            tested[j] = true;
            let result = validate_node(yes, tested).and_then(|_| validate_node(no, tested));
            tested[j] = false;
            result
        }
    }
}
