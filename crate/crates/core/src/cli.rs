//! Command-line front end.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{self, ClassTokens, Example, Label, Schema, TypeCounts, TypeKey};
use crate::ensemble::{self, EnsembleConfig, Weighting};
use crate::error::{Error, Result};
use crate::induction::{grow, GrowConfig, SplitCriterion, TieBreak};
use crate::model::Model;
use crate::pruning::{self, prune_optimal};
use crate::scoring::{tree_score, PriorConfig};
use crate::synth;

#[derive(Debug, Parser)]
#[command(
    name = "bayestree",
    version,
    about = "Decision-tree induction with complexity-prior pruning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Grow a tree to full size, prune it with --alpha and save the model.
    Train(TrainArgs),
    /// Label every row of a dataset with a saved model.
    Classify(ClassifyArgs),
    /// Error rate and confusion counts of a model on labelled data.
    Eval(EvalArgs),
    /// Tabulate tree size and error against the complexity penalty.
    Sweep(SweepArgs),
    /// Pool leaf proportions over stochastically grown trees.
    Ensemble(EnsembleArgs),
}

#[derive(Debug, Subcommand)]
pub enum SynthKind {
    /// Parity concept: positive iff an odd number of attributes are 1.
    Parity {
        #[arg(long)]
        bits: usize,
        /// Emit every bit vector exactly once.
        #[arg(long, conflicts_with = "sample_size")]
        complete: bool,
        #[arg(long, default_value_t = 100)]
        sample_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random target tree with label noise on the training sample.
    Tree {
        #[arg(long)]
        attrs: usize,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 200)]
        train_size: usize,
        #[arg(long, default_value_t = 0)]
        test_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Training CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Noise-free test CSV.
        #[arg(long)]
        test_out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TieBreakArg {
    Lowest,
    Highest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CriterionArg {
    Gain,
    Likelihood,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightingArg {
    Uniform,
    Posterior,
}

#[derive(Debug, Args)]
pub struct TokenArgs {
    /// Class token for positive examples (default accepts "+" and "1").
    #[arg(long, requires = "negative_token")]
    pub positive_token: Option<String>,
    /// Class token for negative examples (default accepts "-" and "0").
    #[arg(long, requires = "positive_token")]
    pub negative_token: Option<String>,
}

impl TokenArgs {
    fn tokens(&self) -> ClassTokens {
        match (&self.positive_token, &self.negative_token) {
            (Some(p), Some(n)) => ClassTokens::custom(p, n),
            _ => ClassTokens::default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct GrowArgs {
    /// Leaf-proportion pseudocount (0 = maximum likelihood).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub smoothing: f64,
    #[arg(long, default_value_t = 1)]
    pub min_leaf: u64,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, value_enum, default_value_t = TieBreakArg::Lowest)]
    pub tie_break: TieBreakArg,
    #[arg(long, value_enum, default_value_t = CriterionArg::Gain)]
    pub criterion: CriterionArg,
}

impl GrowArgs {
    fn config(&self) -> Result<GrowConfig> {
        let config = GrowConfig {
            min_leaf: self.min_leaf,
            tie_break: match self.tie_break {
                TieBreakArg::Lowest => TieBreak::LowestIndex,
                TieBreakArg::Highest => TieBreak::HighestIndex,
            },
            max_depth: self.max_depth,
            criterion: match self.criterion {
                CriterionArg::Gain => SplitCriterion::Gain,
                CriterionArg::Likelihood => SplitCriterion::Likelihood,
            },
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Complexity penalty in nats per test node.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[command(flatten)]
    pub grow: GrowArgs,
    #[command(flatten)]
    pub tokens: TokenArgs,
    /// Where to write the model file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Also print the leaf proportion of each row.
    #[arg(long)]
    pub proportions: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Holdout CSV.
    #[arg(long, required_unless_present = "holdout_fraction")]
    pub holdout: Option<PathBuf>,
    /// Split this fraction of --data off as the holdout instead.
    #[arg(long, conflicts_with = "holdout")]
    pub holdout_fraction: Option<f64>,
    /// Seed for the --holdout-fraction shuffle.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated ascending alphas.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_grid: String,
    #[command(flatten)]
    pub grow: GrowArgs,
    #[command(flatten)]
    pub tokens: TokenArgs,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub size: usize,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = WeightingArg::Uniform)]
    pub weighting: WeightingArg,
    /// Comma-separated attribute bit-strings to estimate; defaults to every
    /// type present in the data.
    #[arg(long)]
    pub types: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[command(flatten)]
    pub grow: GrowArgs,
    #[command(flatten)]
    pub tokens: TokenArgs,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn stdout_err(source: io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn with_path<T>(path: &Path, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{}: {message}", path.display()),
        },
        Error::Malformed { line, message } => Error::Malformed {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn load(path: &Path, tokens: &ClassTokens) -> Result<(Schema, Vec<Example>)> {
    with_path(path, dataset::parse_csv(&read_text(path)?, tokens))
}

fn load_model(path: &Path) -> Result<Model> {
    with_path(path, Model::parse(&read_text(path)?))
}

/// Class tokens accepted when reading data for a saved model.
fn model_tokens(schema: &Schema) -> ClassTokens {
    let mut tokens = ClassTokens::default();
    tokens.positive.insert(0, schema.positive_token().to_string());
    tokens.negative.insert(0, schema.negative_token().to_string());
    tokens
}

fn write_dataset(out: &mut dyn Write, path: Option<&Path>, schema: &Schema, examples: &[Example]) -> Result<()> {
    match path {
        Some(p) => {
            let file = fs::File::create(p).map_err(io_err(p))?;
            dataset::write_csv(io::BufWriter::new(file), schema, examples).map_err(io_err(p))
        }
        None => dataset::write_csv(out, schema, examples).map_err(stdout_err),
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let alphas = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("'{s}' in the alpha grid is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    pruning::check_grid(&alphas)?;
    Ok(alphas)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Synth { kind } => run_synth(kind, out),
        Command::Train(args) => run_train(args, out),
        Command::Classify(args) => run_classify(args, out),
        Command::Eval(args) => run_eval(args, out),
        Command::Sweep(args) => run_sweep(args, out),
        Command::Ensemble(args) => run_ensemble(args, out),
    }
}

fn run_synth(kind: SynthKind, out: &mut dyn Write) -> Result<()> {
    let mut summary = Vec::new();
    match kind {
        SynthKind::Parity {
            bits,
            complete,
            sample_size,
            seed,
            out: path,
        } => {
            let (schema, examples) = synth::gen_parity(bits, complete, sample_size, seed)?;
            write_dataset(out, path.as_deref(), &schema, &examples)?;
            let positives = examples.iter().filter(|e| e.label.is_positive()).count();
            summary.push(format!(
                "parity: {bits} bits, {} examples, {positives} positive",
                examples.len()
            ));
        }
        SynthKind::Tree {
            attrs,
            depth,
            noise,
            train_size,
            test_size,
            seed,
            out: path,
            test_out,
        } => {
            let concept = synth::gen_tree_concept(attrs, depth, noise, train_size, test_size, seed)?;
            write_dataset(out, path.as_deref(), &concept.schema, &concept.train)?;
            if let Some(p) = &test_out {
                write_dataset(out, Some(p), &concept.schema, &concept.test)?;
            }
            summary.push(format!(
                "tree concept: {attrs} attributes, depth {depth}, {} training examples ({} labels flipped), {} test examples",
                concept.train.len(),
                concept.flipped,
                concept.test.len()
            ));
        }
    }
    // keep standard output clean when it carries the CSV
    for line in summary {
        eprintln!("{line}");
    }
    Ok(())
}

fn run_train(args: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let prior = PriorConfig::new(args.alpha, args.grow.smoothing)?;
    let grow_config = args.grow.config()?;
    let (schema, examples) = load(&args.data, &args.tokens.tokens())?;
    let counts = TypeCounts::from_examples(&examples)?;
    let full = grow(&counts, &grow_config, &prior)?;
    let pruned = prune_optimal(&full, &prior)?;
    let tree = pruned.tree;
    let score = tree_score(&tree, &prior)?;
    let errors = tree.training_errors();
    let n = counts.total();

    let mut report = format!(
        "grown: {} leaves, {} internal nodes\n\
         pruned: {} leaves, {} internal nodes ({} removed)\n\
         training errors: {errors} / {n} ({})\n\
         log likelihood: {}\n\
         complexity penalty: {}\n\
         total score: {}\n",
        full.n_leaves(),
        full.n_internal(),
        tree.n_leaves(),
        tree.n_internal(),
        pruned.pruned_node_count,
        errors as f64 / n as f64,
        score.log_likelihood,
        score.complexity_penalty,
        score.total,
    );
    let model = Model::new(schema, prior, tree)?;
    if let Some(path) = &args.out {
        fs::write(path, model.to_text()).map_err(io_err(path))?;
        report.push_str(&format!("model written to {}\n", path.display()));
    }
    out.write_all(report.as_bytes()).map_err(stdout_err)
}

fn rows_for_model(model: &Model, path: &Path) -> Result<(bool, dataset::Rows)> {
    let text = read_text(path)?;
    with_path(
        path,
        dataset::parse_for_schema(&text, &model.schema, &model_tokens(&model.schema)),
    )
}

fn run_classify(args: ClassifyArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&args.model)?;
    let (_, rows) = rows_for_model(&model, &args.data)?;
    let mut buf = String::new();
    for (values, _) in &rows {
        let (label, phi) = model.tree.classify(values)?;
        buf.push_str(model.schema.token(label));
        if args.proportions {
            buf.push_str(&format!(",{phi}"));
        }
        buf.push('\n');
    }
    out.write_all(buf.as_bytes()).map_err(stdout_err)
}

/// Confusion counts of predictions against true labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Positive, Label::Positive) => self.tp += 1,
            (Label::Positive, Label::Negative) => self.fp += 1,
            (Label::Negative, Label::Negative) => self.tn += 1,
            (Label::Negative, Label::Positive) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn errors(&self) -> u64 {
        self.fp + self.fn_
    }
}

fn run_eval(args: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&args.model)?;
    let (labelled, rows) = rows_for_model(&model, &args.data)?;
    if !labelled {
        return Err(Error::data(format!(
            "{}: evaluation needs a class column",
            args.data.display()
        )));
    }
    let mut confusion = Confusion::default();
    for (values, label) in &rows {
        let (predicted, _) = model.tree.classify(values)?;
        confusion.record(predicted, label.expect("labelled rows"));
    }
    let n = confusion.total();
    let report = format!(
        "errors: {} / {n}\nerror rate: {}\nconfusion: TP={} FP={} TN={} FN={}\n",
        confusion.errors(),
        confusion.errors() as f64 / n as f64,
        confusion.tp,
        confusion.fp,
        confusion.tn,
        confusion.fn_,
    );
    out.write_all(report.as_bytes()).map_err(stdout_err)
}

fn run_sweep(args: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let alphas = parse_grid(&args.alpha_grid)?;
    PriorConfig::new(0.0, args.grow.smoothing)?;
    let grow_config = args.grow.config()?;
    let tokens = args.tokens.tokens();
    let (schema, examples) = load(&args.data, &tokens)?;
    let (train, holdout) = match (&args.holdout, args.holdout_fraction) {
        (Some(path), _) => {
            let (holdout_schema, holdout) = load(path, &tokens)?;
            if holdout_schema.attributes() != schema.attributes() {
                return Err(Error::data(format!(
                    "{}: columns differ from {}",
                    path.display(),
                    args.data.display()
                )));
            }
            (examples, holdout)
        }
        (None, Some(fraction)) => dataset::split_holdout(&examples, fraction, args.seed)?,
        (None, None) => return Err(Error::invalid("need --holdout or --holdout-fraction")),
    };
    let counts = TypeCounts::from_examples(&train)?;
    let holdout = TypeCounts::from_examples(&holdout)?;
    let prior = PriorConfig::new(0.0, args.grow.smoothing)?;
    let tree = grow(&counts, &grow_config, &prior)?;
    let rows = pruning::sensitivity_sweep(&tree, &alphas, args.grow.smoothing, &holdout)?;

    let mut table = format!(
        "{:>10} {:>8} {:>10} {:>12}\n",
        "alpha", "leaves", "train_err", "holdout_err"
    );
    let mut csv = String::from("alpha,leaves,train_err,holdout_err\n");
    for r in &rows {
        table.push_str(&format!(
            "{:>10} {:>8} {:>10.6} {:>12.6}\n",
            r.alpha, r.leaves, r.train_err, r.holdout_err
        ));
        csv.push_str(&format!("{},{},{},{}\n", r.alpha, r.leaves, r.train_err, r.holdout_err));
    }
    if let Some(best) = pruning::select_alpha(&rows) {
        table.push_str(&format!("best alpha: {best}\n"));
    }
    if let Some(path) = &args.csv {
        fs::write(path, csv).map_err(io_err(path))?;
    }
    out.write_all(table.as_bytes()).map_err(stdout_err)
}

fn run_ensemble(args: EnsembleArgs, out: &mut dyn Write) -> Result<()> {
    let prior = PriorConfig::new(args.alpha, args.grow.smoothing)?;
    let grow_config = args.grow.config()?;
    let config = EnsembleConfig {
        size: args.size,
        temperature: args.temperature,
        seed: args.seed,
        weighting: match args.weighting {
            WeightingArg::Uniform => Weighting::Uniform,
            WeightingArg::Posterior => Weighting::Posterior,
        },
    };
    config.validate()?;
    let (schema, examples) = load(&args.data, &args.tokens.tokens())?;
    let counts = TypeCounts::from_examples(&examples)?;
    let types: Vec<TypeKey> = match &args.types {
        Some(list) => {
            let keys = list
                .split(',')
                .map(|s| s.trim().parse::<TypeKey>())
                .collect::<Result<Vec<_>>>()?;
            if let Some(bad) = keys.iter().find(|k| k.len() != schema.n_attributes()) {
                return Err(Error::invalid(format!(
                    "type {bad} has {} bits, the data has {} attributes",
                    bad.len(),
                    schema.n_attributes()
                )));
            }
            keys
        }
        None => counts.keys().cloned().collect(),
    };

    let members = ensemble::build(&counts, &grow_config, &prior, &config)?;
    let pooled = members.estimate(&types, config.weighting)?;
    let mut report = String::new();
    for (i, (tree, score)) in members.trees.iter().zip(&members.scores).enumerate() {
        report.push_str(&format!(
            "tree {i}: {} leaves, log likelihood {}, penalty {}, total {}\n",
            tree.n_leaves(),
            score.log_likelihood,
            score.complexity_penalty,
            score.total
        ));
    }
    for (key, estimate) in &pooled.estimates {
        report.push_str(&format!("type {key}: {estimate}\n"));
    }
    out.write_all(report.as_bytes()).map_err(stdout_err)
}
