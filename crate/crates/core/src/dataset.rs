//! Binary-attribute training data: CSV ingestion, per-type tallies and
//! count queries over attribute-test paths.
//!
//! An object *type* is a full assignment of values to every attribute. The
//! training set is summarised as a sparse map from type to its positive and
//! negative counts; only observed types are stored, since the type space
//! (`2^N`) usually dwarfs the number of examples.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn symbol(self) -> &'static str {
        match self {
            Label::Positive => "+",
            Label::Negative => "-",
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Attribute names and class tokens of a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    attributes: Vec<String>,
    positive_token: String,
    negative_token: String,
}

fn check_token(kind: &str, token: &str) -> Result<()> {
    if token.is_empty() {
        return Err(Error::data(format!("empty {kind}")));
    }
    if token
        .chars()
        .any(|c| c.is_whitespace() || c == ',' || c == '(' || c == ')')
    {
        return Err(Error::data(format!(
            "{kind} '{token}' contains whitespace, a comma or a parenthesis"
        )));
    }
    Ok(())
}

impl Schema {
    /// Builds a schema with the default `+`/`-` class tokens.
    pub fn new(attributes: Vec<String>) -> Result<Self> {
        Self::with_class_tokens(attributes, "+", "-")
    }

    pub fn with_class_tokens(attributes: Vec<String>, positive_token: &str, negative_token: &str) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::data("schema needs at least one attribute"));
        }
        for (j, name) in attributes.iter().enumerate() {
            check_token("attribute name", name)?;
            if attributes[..j].contains(name) {
                return Err(Error::data(format!("duplicate attribute name '{name}'")));
            }
        }
        check_token("class token", positive_token)?;
        check_token("class token", negative_token)?;
        if positive_token == negative_token {
            return Err(Error::data("positive and negative class tokens coincide"));
        }
        Ok(Schema {
            attributes,
            positive_token: positive_token.to_string(),
            negative_token: negative_token.to_string(),
        })
    }

    /// Schema `x0, x1, ...` for generated data.
    pub fn numbered(n_attributes: usize) -> Result<Self> {
        Self::new((0..n_attributes).map(|j| format!("x{j}")).collect())
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn attribute(&self, j: usize) -> &str {
        &self.attributes[j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == name)
    }

    pub fn positive_token(&self) -> &str {
        &self.positive_token
    }

    pub fn negative_token(&self) -> &str {
        &self.negative_token
    }

    pub fn token(&self, label: Label) -> &str {
        match label {
            Label::Positive => &self.positive_token,
            Label::Negative => &self.negative_token,
        }
    }
}

/// The attribute vector identifying an object type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeKey(Vec<bool>);

impl TypeKey {
    pub fn new(values: Vec<bool>) -> Self {
        TypeKey(values)
    }

    /// The `index`-th type of an `n`-attribute space, attribute 0 being the
    /// most significant bit.
    pub fn from_index(index: u64, n: usize) -> Self {
        TypeKey((0..n).map(|j| (index >> (n - 1 - j)) & 1 == 1).collect())
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j]
    }
}

impl fmt::Display for TypeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for TypeKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::invalid("empty type bit-string"));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("type bit-string '{s}' contains '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(TypeKey)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub values: Vec<bool>,
    pub label: Label,
}

impl Example {
    pub fn new(values: Vec<bool>, label: Label) -> Self {
        Example { values, label }
    }
}

/// Positive and negative example counts reaching a node or type.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct NodeCounts {
    pub pos: u64,
    pub neg: u64,
}

impl NodeCounts {
    pub const fn new(pos: u64, neg: u64) -> Self {
        NodeCounts { pos, neg }
    }

    pub fn total(self) -> u64 {
        self.pos + self.neg
    }

    pub fn is_empty(self) -> bool {
        self.total() == 0
    }

    pub fn is_pure(self) -> bool {
        self.pos == 0 || self.neg == 0
    }

    /// Training errors made by labelling every example here with `label`.
    pub fn errors(self, label: Label) -> u64 {
        match label {
            Label::Positive => self.neg,
            Label::Negative => self.pos,
        }
    }

    pub fn add(&mut self, label: Label, k: u64) {
        match label {
            Label::Positive => self.pos += k,
            Label::Negative => self.neg += k,
        }
    }
}

impl std::ops::Add for NodeCounts {
    type Output = NodeCounts;

    fn add(self, rhs: NodeCounts) -> NodeCounts {
        NodeCounts::new(self.pos + rhs.pos, self.neg + rhs.neg)
    }
}

impl std::iter::Sum for NodeCounts {
    fn sum<I: Iterator<Item = NodeCounts>>(iter: I) -> NodeCounts {
        iter.fold(NodeCounts::default(), |a, b| a + b)
    }
}

/// Per-type tallies of a training set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeCounts {
    n_attributes: usize,
    counts: BTreeMap<TypeKey, NodeCounts>,
    total: u64,
}

impl TypeCounts {
    /// Tallies examples by type. Duplicates accumulate.
    pub fn from_examples(examples: &[Example]) -> Result<Self> {
        let first = examples
            .first()
            .ok_or_else(|| Error::data("cannot count an empty example list"))?;
        let n_attributes = first.values.len();
        let mut counts: BTreeMap<TypeKey, NodeCounts> = BTreeMap::new();
        for (i, ex) in examples.iter().enumerate() {
            if ex.values.len() != n_attributes {
                return Err(Error::data(format!(
                    "example {i} has {} values, expected {n_attributes}",
                    ex.values.len()
                )));
            }
            counts.entry(TypeKey(ex.values.clone())).or_default().add(ex.label, 1);
        }
        Ok(TypeCounts {
            n_attributes,
            counts,
            total: examples.len() as u64,
        })
    }

    /// Builds tallies directly; zero-count entries are dropped.
    pub fn from_counts(n_attributes: usize, entries: impl IntoIterator<Item = (TypeKey, NodeCounts)>) -> Result<Self> {
        let mut counts: BTreeMap<TypeKey, NodeCounts> = BTreeMap::new();
        for (key, c) in entries {
            if key.len() != n_attributes {
                return Err(Error::data(format!(
                    "type {key} has {} values, expected {n_attributes}",
                    key.len()
                )));
            }
            if !c.is_empty() {
                let slot = counts.entry(key).or_default();
                *slot = *slot + c;
            }
        }
        let total = counts.values().map(|c| c.total()).sum();
        if total == 0 {
            return Err(Error::data("type counts hold no examples"));
        }
        Ok(TypeCounts {
            n_attributes,
            counts,
            total,
        })
    }

    pub fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    /// Number of examples `n`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct observed types.
    pub fn n_types(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, key: &TypeKey) -> Option<NodeCounts> {
        self.counts.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TypeKey, NodeCounts)> + '_ {
        self.counts.iter().map(|(k, &c)| (k, c))
    }

    pub fn keys(&self) -> impl Iterator<Item = &TypeKey> + '_ {
        self.counts.keys()
    }

    /// Counts over all examples.
    pub fn aggregate(&self) -> NodeCounts {
        self.counts.values().copied().sum()
    }

    /// Empirical type frequency `(p_i + n_i) / n`.
    pub fn lambda_hat(&self, key: &TypeKey) -> f64 {
        self.get(key).map_or(0.0, |c| c.total() as f64 / self.total as f64)
    }

    /// Empirical positive fraction `p_i / (p_i + n_i)`, if the type was seen.
    pub fn phi_hat(&self, key: &TypeKey) -> Option<f64> {
        self.get(key).map(|c| c.pos as f64 / c.total() as f64)
    }

    pub fn lambda_hat_map(&self) -> BTreeMap<TypeKey, f64> {
        self.keys().map(|k| (k.clone(), self.lambda_hat(k))).collect()
    }

    pub fn phi_hat_map(&self) -> BTreeMap<TypeKey, f64> {
        self.iter()
            .map(|(k, c)| (k.clone(), c.pos as f64 / c.total() as f64))
            .collect()
    }

    /// Counts reaching the node selected by `path`.
    pub fn counts_at(&self, path: &TestPath) -> NodeCounts {
        self.iter().filter(|(k, _)| path.matches(k)).map(|(_, c)| c).sum()
    }

    /// Branch counts `(yes, no)` for testing attribute `j` at the node
    /// selected by `path`.
    pub fn split_counts(&self, path: &TestPath, j: usize) -> Result<(NodeCounts, NodeCounts)> {
        if j >= self.n_attributes {
            return Err(Error::invalid(format!(
                "attribute {j} out of range for {} attributes",
                self.n_attributes
            )));
        }
        if path.tests(j) {
            return Err(Error::invalid(format!("attribute {j} is already tested on this path")));
        }
        let mut yes = NodeCounts::default();
        let mut no = NodeCounts::default();
        for (key, c) in self.iter().filter(|(k, _)| path.matches(k)) {
            if key.get(j) {
                yes = yes + c;
            } else {
                no = no + c;
            }
        }
        Ok((yes, no))
    }
}

/// A conjunction of attribute tests `(attribute, value)` selecting a node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TestPath(Vec<(usize, bool)>);

impl TestPath {
    pub fn root() -> Self {
        TestPath(Vec::new())
    }

    pub fn new(tests: Vec<(usize, bool)>) -> Result<Self> {
        let mut path = TestPath::root();
        for (j, v) in tests {
            path = path.child(j, v)?;
        }
        Ok(path)
    }

    pub fn child(&self, j: usize, value: bool) -> Result<Self> {
        if self.tests(j) {
            return Err(Error::invalid(format!("attribute {j} tested twice on one path")));
        }
        let mut tests = self.0.clone();
        tests.push((j, value));
        Ok(TestPath(tests))
    }

    pub fn tests(&self, j: usize) -> bool {
        self.0.iter().any(|&(a, _)| a == j)
    }

    pub fn matches(&self, key: &TypeKey) -> bool {
        self.0.iter().all(|&(j, v)| key.get(j) == v)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

/// Which tokens in the class column denote each label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassTokens {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

impl Default for ClassTokens {
    fn default() -> Self {
        ClassTokens {
            positive: vec!["+".into(), "1".into()],
            negative: vec!["-".into(), "0".into()],
        }
    }
}

impl ClassTokens {
    pub fn custom(positive: &str, negative: &str) -> Self {
        ClassTokens {
            positive: vec![positive.to_string()],
            negative: vec![negative.to_string()],
        }
    }

    fn label(&self, token: &str) -> Option<Label> {
        if self.positive.iter().any(|t| t == token) {
            Some(Label::Positive)
        } else if self.negative.iter().any(|t| t == token) {
            Some(Label::Negative)
        } else {
            None
        }
    }
}

/// Reads a dataset CSV file. See [`parse_csv`].
pub fn load_csv(path: impl AsRef<Path>, tokens: &ClassTokens) -> Result<(Schema, Vec<Example>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, tokens)
}

/// Parses dataset text: a header naming the attributes followed by a class
/// column, then one row per example with `0`/`1` attribute tokens. No
/// quoting is supported. Blank lines are skipped.
pub fn parse_csv(text: &str, tokens: &ClassTokens) -> Result<(Schema, Vec<Example>)> {
    let (schema, has_class, rows) = parse_table(text, tokens, None)?;
    debug_assert!(has_class);
    let examples = rows
        .into_iter()
        .map(|(values, label)| Example::new(values, label.expect("labelled table")))
        .collect();
    Ok((schema, examples))
}

/// Rows of a possibly unlabelled table.
pub type Rows = Vec<(Vec<bool>, Option<Label>)>;

/// Parses a table against a known schema, accepting either exactly the
/// schema's attribute columns or those columns followed by a class column.
pub fn parse_for_schema(text: &str, schema: &Schema, tokens: &ClassTokens) -> Result<(bool, Rows)> {
    let (_, has_class, rows) = parse_table(text, tokens, Some(schema))?;
    Ok((has_class, rows))
}

fn parse_table(text: &str, tokens: &ClassTokens, expected: Option<&Schema>) -> Result<(Schema, bool, Rows)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| Error::data("empty input: missing header row"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();

    let (schema, has_class) = match expected {
        None => {
            if columns.len() < 2 {
                return Err(Error::Malformed {
                    line: header_line,
                    message: "header needs at least one attribute and a class column".into(),
                });
            }
            let attrs = columns[..columns.len() - 1].iter().map(|s| s.to_string()).collect();
            let schema = Schema::with_class_tokens(attrs, &tokens.positive[0], &tokens.negative[0]).map_err(|e| {
                Error::Malformed {
                    line: header_line,
                    message: e.to_string(),
                }
            })?;
            (schema, true)
        }
        Some(schema) => {
            let n = schema.n_attributes();
            let attrs_match = columns.len() >= n && columns[..n].iter().zip(schema.attributes()).all(|(c, a)| c == a);
            if !attrs_match || columns.len() > n + 1 {
                return Err(Error::Malformed {
                    line: header_line,
                    message: describe_mismatch(schema.attributes(), &columns),
                });
            }
            (schema.clone(), columns.len() == n + 1)
        }
    };

    let n = schema.n_attributes();
    let width = n + usize::from(has_class);
    let mut rows = Vec::new();
    for (line, row) in lines {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(Error::Malformed {
                line,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        let mut values = Vec::with_capacity(n);
        for (col, field) in fields[..n].iter().enumerate() {
            values.push(match *field {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Parse {
                        line,
                        column: col + 1,
                        message: format!("unknown attribute token '{other}'"),
                    })
                }
            });
        }
        let label = if has_class {
            Some(tokens.label(fields[n]).ok_or_else(|| Error::Parse {
                line,
                column: n + 1,
                message: format!("unknown class token '{}'", fields[n]),
            })?)
        } else {
            None
        };
        rows.push((values, label));
    }
    if rows.is_empty() {
        return Err(Error::data("no data rows after the header"));
    }
    Ok((schema, has_class, rows))
}

fn describe_mismatch(expected: &[String], found: &[&str]) -> String {
    let mut diffs = Vec::new();
    for j in 0..expected.len().max(found.len()) {
        match (expected.get(j), found.get(j)) {
            (Some(e), Some(f)) if e == f => {}
            (Some(e), Some(f)) => diffs.push(format!("column {}: expected '{e}', found '{f}'", j + 1)),
            (Some(e), None) => diffs.push(format!("column {}: missing '{e}'", j + 1)),
            // a single trailing column is the class column
            (None, Some(_)) if j == expected.len() && found.len() == expected.len() + 1 => {}
            (None, Some(f)) => diffs.push(format!("column {}: unexpected '{f}'", j + 1)),
            (None, None) => unreachable!(),
        }
    }
    format!("columns do not match the model schema ({})", diffs.join("; "))
}

/// Shuffles `examples` with `seed` and splits off `fraction` of them
/// (rounded up, at least one, leaving at least one) as a holdout set.
/// Returns `(train, holdout)`.
pub fn split_holdout(examples: &[Example], fraction: f64, seed: u64) -> Result<(Vec<Example>, Vec<Example>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "holdout fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    if examples.len() < 2 {
        return Err(Error::data("need at least two examples to split off a holdout set"));
    }
    let mut shuffled = examples.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = ((examples.len() as f64 * fraction).ceil() as usize).clamp(1, examples.len() - 1);
    let train = shuffled.split_off(k);
    Ok((train, shuffled))
}

/// Writes examples in the dataset CSV format.
pub fn write_csv<W: Write>(mut out: W, schema: &Schema, examples: &[Example]) -> std::io::Result<()> {
    writeln!(out, "{},class", schema.attributes().join(","))?;
    let mut line = String::new();
    for ex in examples {
        line.clear();
        for &v in &ex.values {
            line.push(if v { '1' } else { '0' });
            line.push(',');
        }
        line.push_str(schema.token(ex.label));
        writeln!(out, "{line}")?;
    }
    Ok(())
}
