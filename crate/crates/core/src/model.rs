//! Text serialization of a trained tree with its schema and prior.
//!
//! ```text
//! bayestree-model 1
//! attributes a b c
//! class + -
//! alpha 3
//! smoothing 0
//! tree
//! (test a
//!   (1 (leaf + 7 0 1))
//!   (0 (leaf - 0 1 0)))
//! ```
//!
//! Leaves are `(leaf <+|-> <pos> <neg> <phi>)`; test counts are implied by
//! their children. Numbers are written in the shortest decimal form that
//! parses back to the same value, so every tree has one serialization.

use std::fmt::Write as _;

use crate::dataset::{Label, NodeCounts, Schema};
use crate::error::{Error, Result};
use crate::scoring::PriorConfig;
use crate::tree::{DecisionTree, Node};

const MAGIC: &str = "bayestree-model 1";

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub schema: Schema,
    pub prior: PriorConfig,
    pub tree: DecisionTree,
}

impl Model {
    pub fn new(schema: Schema, prior: PriorConfig, tree: DecisionTree) -> Result<Self> {
        if schema.n_attributes() != tree.n_attributes() {
            return Err(Error::invalid(format!(
                "schema has {} attributes, tree has {}",
                schema.n_attributes(),
                tree.n_attributes()
            )));
        }
        Ok(Model { schema, prior, tree })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        let _ = writeln!(out, "attributes {}", self.schema.attributes().join(" "));
        let _ = writeln!(
            out,
            "class {} {}",
            self.schema.positive_token(),
            self.schema.negative_token()
        );
        let _ = writeln!(out, "alpha {}", self.prior.alpha);
        let _ = writeln!(out, "smoothing {}", self.prior.smoothing);
        out.push_str("tree\n");
        write_node(&mut out, self.tree.root(), &self.schema, 0);
        out.push('\n');
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let mut header = |key: &str| -> Result<(usize, Vec<String>)> {
            let (line, content) = lines.next().ok_or_else(|| Error::Malformed {
                line: 0,
                message: format!("model ends before '{key}'"),
            })?;
            let mut words = content.split_whitespace();
            if words.next() != Some(key) {
                return Err(Error::Malformed {
                    line,
                    message: format!("expected '{key}'"),
                });
            }
            Ok((line, words.map(str::to_string).collect()))
        };

        let (line, version) = header("bayestree-model")?;
        if version != ["1"] {
            return Err(Error::Malformed {
                line,
                message: "unsupported model version".into(),
            });
        }
        let (line, attributes) = header("attributes")?;
        let (class_line, class) = header("class")?;
        if class.len() != 2 {
            return Err(Error::Malformed {
                line: class_line,
                message: "expected two class tokens".into(),
            });
        }
        let schema = Schema::with_class_tokens(attributes, &class[0], &class[1]).map_err(|e| Error::Malformed {
            line,
            message: e.to_string(),
        })?;
        let alpha = single_number(header("alpha")?)?;
        let smoothing = single_number(header("smoothing")?)?;
        let prior = PriorConfig::new(alpha, smoothing)?;
        let (tree_line, rest) = header("tree")?;
        if !rest.is_empty() {
            return Err(Error::Malformed {
                line: tree_line,
                message: "unexpected text after 'tree'".into(),
            });
        }

        let body: Vec<(usize, &str)> = lines.collect();
        let mut tokens = Tokens::new(&body);
        let root = parse_node(&mut tokens, &schema)?;
        if let Some((line, tok)) = tokens.next() {
            return Err(Error::Malformed {
                line,
                message: format!("unexpected '{tok}' after the tree"),
            });
        }
        let tree = DecisionTree::new(schema.n_attributes(), root)?;
        Model::new(schema, prior, tree)
    }
}

fn single_number((line, words): (usize, Vec<String>)) -> Result<f64> {
    match words.as_slice() {
        [w] => w.parse::<f64>().map_err(|_| Error::Malformed {
            line,
            message: format!("'{w}' is not a number"),
        }),
        _ => Err(Error::Malformed {
            line,
            message: "expected one number".into(),
        }),
    }
}

fn write_node(out: &mut String, node: &Node, schema: &Schema, indent: usize) {
    match node {
        Node::Leaf { counts, phi, label } => {
            let _ = write!(out, "(leaf {} {} {} {})", label.symbol(), counts.pos, counts.neg, phi);
        }
        Node::Test { attribute, yes, no, .. } => {
            let pad = " ".repeat(indent + 2);
            let _ = write!(out, "(test {}\n{pad}(1 ", schema.attribute(*attribute));
            write_node(out, yes, schema, indent + 2);
            let _ = write!(out, ")\n{pad}(0 ");
            write_node(out, no, schema, indent + 2);
            out.push_str("))");
        }
    }
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(lines: &[(usize, &'a str)]) -> Self {
        let mut items = Vec::new();
        for &(line, text) in lines {
            let mut start = None;
            for (i, c) in text.char_indices() {
                if c == '(' || c == ')' || c.is_whitespace() {
                    if let Some(s) = start.take() {
                        items.push((line, &text[s..i]));
                    }
                    if !c.is_whitespace() {
                        items.push((line, &text[i..i + 1]));
                    }
                } else if start.is_none() {
                    start = Some(i);
                }
            }
            if let Some(s) = start {
                items.push((line, &text[s..]));
            }
        }
        Tokens { items, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.items.get(self.pos).copied();
        self.pos += 1;
        item
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos.min(self.items.len().saturating_sub(1)))
            .map_or(0, |&(l, _)| l)
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        match self.next() {
            Some((_, tok)) if tok == want => Ok(()),
            Some((line, tok)) => Err(Error::Malformed {
                line,
                message: format!("expected '{want}', found '{tok}'"),
            }),
            None => Err(Error::Malformed {
                line: self.line(),
                message: format!("expected '{want}', found end of model"),
            }),
        }
    }

    fn word(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.next() {
            Some((line, tok)) if tok != "(" && tok != ")" => Ok((line, tok)),
            Some((line, tok)) => Err(Error::Malformed {
                line,
                message: format!("expected {what}, found '{tok}'"),
            }),
            None => Err(Error::Malformed {
                line: self.line(),
                message: format!("expected {what}, found end of model"),
            }),
        }
    }
}

fn parse_node(tokens: &mut Tokens<'_>, schema: &Schema) -> Result<Node> {
    tokens.expect("(")?;
    let (line, kind) = tokens.word("'test' or 'leaf'")?;
    let bad = |line: usize, message: String| Error::Malformed { line, message };
    let node = match kind {
        "leaf" => {
            let (line, sym) = tokens.word("a label")?;
            let label = match sym {
                "+" => Label::Positive,
                "-" => Label::Negative,
                other => return Err(bad(line, format!("unknown label '{other}'"))),
            };
            let (line, pos) = tokens.word("a count")?;
            let pos = pos
                .parse::<u64>()
                .map_err(|_| bad(line, format!("bad count '{pos}'")))?;
            let (line, neg) = tokens.word("a count")?;
            let neg = neg
                .parse::<u64>()
                .map_err(|_| bad(line, format!("bad count '{neg}'")))?;
            let (line, phi) = tokens.word("a proportion")?;
            let phi = phi
                .parse::<f64>()
                .ok()
                .filter(|p| (0.0..=1.0).contains(p))
                .ok_or_else(|| bad(line, format!("bad proportion '{phi}'")))?;
            Node::leaf(NodeCounts::new(pos, neg), phi, label)
        }
        "test" => {
            let (line, name) = tokens.word("an attribute name")?;
            let j = schema
                .index_of(name)
                .ok_or_else(|| bad(line, format!("unknown attribute '{name}'")))?;
            tokens.expect("(")?;
            tokens.expect("1")?;
            let yes = parse_node(tokens, schema)?;
            tokens.expect(")")?;
            tokens.expect("(")?;
            tokens.expect("0")?;
            let no = parse_node(tokens, schema)?;
            tokens.expect(")")?;
            Node::test(j, yes, no)
        }
        other => return Err(bad(line, format!("unknown node kind '{other}'"))),
    };
    tokens.expect(")")?;
    Ok(node)
}
