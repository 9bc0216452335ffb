//! The `synsrl` command line: train, predict, evaluate, analyze and
//! features subcommands over CoNLL-X trees and CoNLL-2005 props files.

mod config;
mod data;

pub use config::{DataPaths, RunConfig};
pub use data::{
    attach_external, load_corpus, load_unlabeled, parse_predicate_column, predicate_positions, unlabeled_instances,
    ExternalRecord,
};

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use rayon::prelude::*;

use crate::analysis::{
    evaluate, f1_by_distance, format_curve, format_distance_table, format_report, AnalysisReport, DEFAULT_BINS,
};
use crate::error::{Error, Result};
use crate::model::{ensemble_predict, train, Instance, SrlModel};
use crate::syntax::{pattern_extract, sdp_paths, tpf_extract, SyntaxMode, DEFAULT_TPF_CLIP};
use crate::treebank::{PredicateFrame, PropsBlock};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Process exit code for an error: 3 for configuration problems, 2 for
/// bad or missing data, 1 for anything else.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Incompatible(_) => EXIT_CONFIG,
        Error::Conllx { .. }
        | Error::Props { .. }
        | Error::Tree(_)
        | Error::Span(_)
        | Error::Tags(_)
        | Error::Input(_)
        | Error::Eval(_)
        | Error::Io { .. }
        | Error::Json { .. }
        | Error::Serde(_) => EXIT_DATA,
        _ => EXIT_FAILURE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "synsrl", version, about = "Span-based semantic role labeling with dependency syntax")]
pub struct Cli {
    /// Worker threads for training and prediction (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// More log output; repeat for debug level.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write the dev-best checkpoint.
    Train(TrainArgs),
    /// Tag predicates in a corpus and write props.
    Predict(PredictArgs),
    /// Score predicted props against gold props.
    Evaluate(EvaluateArgs),
    /// Per-distance scores and the oracle correction curve.
    Analyze(AnalyzeArgs),
    /// Dump the discrete tree features the syntax encoders see.
    Features(FeaturesArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON run configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random seed (required).
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub train_deps: Option<PathBuf>,
    #[arg(long)]
    pub train_props: Option<PathBuf>,
    #[arg(long)]
    pub dev_deps: Option<PathBuf>,
    #[arg(long)]
    pub dev_props: Option<PathBuf>,
    /// JSON-lines external vectors for the training sentences.
    #[arg(long)]
    pub train_external: Option<PathBuf>,
    #[arg(long)]
    pub dev_external: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    /// none, tree-gru, sdp, tpf or pe.
    #[arg(long)]
    pub syntax: Option<SyntaxMode>,
    #[arg(long)]
    pub word_dim: Option<usize>,
    #[arg(long)]
    pub predicate_dim: Option<usize>,
    #[arg(long)]
    pub external_dim: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub clip: Option<f64>,
    /// Stop as soon as the training set is tagged perfectly.
    #[arg(long)]
    pub stop_at_perfect_train: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model checkpoint; repeat to average an ensemble.
    #[arg(long = "checkpoint", required = true)]
    pub checkpoints: Vec<PathBuf>,
    /// Run configuration the checkpoint must match.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub deps: PathBuf,
    /// Props file whose first column marks the predicates.
    #[arg(long)]
    pub props: PathBuf,
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Output props file (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Trees of the same sentences, checked for token alignment.
    #[arg(long)]
    pub deps: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub deps: PathBuf,
    /// Props file whose first column marks the predicates (default: every
    /// token is treated as a predicate).
    #[arg(long)]
    pub props: Option<PathBuf>,
    /// sdp, tpf or pe.
    #[arg(long)]
    pub mode: SyntaxMode,
    #[arg(long, default_value_t = DEFAULT_TPF_CLIP)]
    pub clip: usize,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Normal output goes to `out`.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command.
pub fn execute(cli: &Cli, out: &mut dyn std::io::Write) -> Result<()> {
    let body = || -> Result<String> {
        match &cli.command {
            Command::Train(a) => cmd_train(a).map(|p| format!("{}\n", p.display())),
            Command::Predict(a) => cmd_predict(a),
            Command::Evaluate(a) => cmd_evaluate(a),
            Command::Analyze(a) => cmd_analyze(a),
            Command::Features(a) => cmd_features(a),
        }
    };
    let text = match cli.jobs {
        Some(0) => return Err(Error::Config("--jobs must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?
            .install(body)?,
        None => body()?,
    };
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<output>", e))
}

/// Merges the config file (if any) with flags; flags win.
pub fn resolve_train_config(a: &TrainArgs) -> Result<RunConfig> {
    let mut c = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let d = &mut c.data;
    let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
        if v.is_some() {
            slot.clone_from(v);
        }
    };
    set(&mut d.train_deps, &a.train_deps);
    set(&mut d.train_props, &a.train_props);
    set(&mut d.dev_deps, &a.dev_deps);
    set(&mut d.dev_props, &a.dev_props);
    set(&mut d.train_external, &a.train_external);
    set(&mut d.dev_external, &a.dev_external);
    set(&mut d.checkpoint_dir, &a.checkpoint_dir);
    let m = &mut c.model;
    if let Some(v) = a.syntax {
        m.input.syntax = v;
    }
    if let Some(v) = a.word_dim {
        m.input.word_dim = v;
    }
    if let Some(v) = a.predicate_dim {
        m.input.predicate_dim = v;
    }
    if let Some(v) = a.external_dim {
        m.input.external_dim = v;
    }
    if let Some(v) = a.hidden {
        m.hidden = v;
    }
    if let Some(v) = a.layers {
        m.layers = v;
    }
    let t = &mut c.train;
    t.seed = a.seed;
    if let Some(v) = a.epochs {
        t.epochs = v;
    }
    if let Some(v) = a.batch_size {
        t.batch_size = v;
    }
    if let Some(v) = a.rho {
        t.optimizer.rho = v;
    }
    if let Some(v) = a.eps {
        t.optimizer.eps = v;
    }
    if let Some(v) = a.lr {
        t.optimizer.lr = v;
    }
    if let Some(v) = a.clip {
        t.clip = v;
    }
    if a.stop_at_perfect_train {
        t.stop_at_perfect_train = true;
    }
    Ok(c)
}

pub const CHECKPOINT_FILE: &str = "model.json";
pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";
pub const RESOLVED_CONFIG_FILE: &str = "config.json";

fn cmd_train(a: &TrainArgs) -> Result<PathBuf> {
    let config = resolve_train_config(a)?;
    let (deps, props, dir) = config.check()?;
    let resolved = serde_json::to_string_pretty(&config)?;
    info!("resolved configuration:\n{resolved}");

    let d = &config.data;
    let ext_dim = config.model.input.external_dim;
    let mut corpus = load_corpus(deps, props)?;
    if let Some(p) = &d.train_external {
        attach_external(&mut corpus, p, ext_dim)?;
    }
    let dev = match (&d.dev_deps, &d.dev_props) {
        (Some(dd), Some(dp)) => {
            let mut dev = load_corpus(dd, dp)?;
            if let Some(p) = &d.dev_external {
                attach_external(&mut dev, p, ext_dim)?;
            }
            Some(dev)
        }
        _ => None,
    };
    let outcome = train(&corpus, dev.as_deref(), &config.model, &config.train)?;

    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    data::write(&dir.join(RESOLVED_CONFIG_FILE), &resolved)?;
    let mut log = String::new();
    for entry in &outcome.log {
        log.push_str(&serde_json::to_string(entry)?);
        log.push('\n');
    }
    data::write(&dir.join(TRAIN_LOG_FILE), &log)?;
    let path = dir.join(CHECKPOINT_FILE);
    outcome.model.save(&path)?;
    info!("best epoch {}; checkpoint {}", outcome.best_epoch, path.display());
    Ok(path)
}

fn cmd_predict(a: &PredictArgs) -> Result<String> {
    let models = a
        .checkpoints
        .iter()
        .map(|p| SrlModel::load(p))
        .collect::<Result<Vec<_>>>()?;
    if let Some(path) = &a.config {
        let config = RunConfig::load(path)?;
        for (m, p) in models.iter().zip(&a.checkpoints) {
            if m.config() != &config.model {
                return Err(Error::Incompatible(format!(
                    "{} was trained with a different model configuration than {}",
                    p.display(),
                    path.display()
                )));
            }
        }
    }
    let ext_dims: Vec<usize> = models.iter().map(|m| m.config().input.external_dim).collect();
    let (mut corpus, lemmas) = load_unlabeled(&a.deps, &a.props)?;
    match (&a.external, ext_dims.iter().max()) {
        (Some(p), Some(&dim)) if dim > 0 => {
            if ext_dims.iter().any(|&d| d != dim) {
                return Err(Error::Incompatible("ensemble members disagree on external_dim".into()));
            }
            attach_external(&mut corpus, p, dim)?;
        }
        (None, Some(&dim)) if dim > 0 => {
            return Err(Error::Config("the model needs --external vectors".into()));
        }
        _ => {}
    }
    let refs: Vec<&SrlModel> = models.iter().collect();
    let frames = predict_corpus(&refs, &corpus)?;
    let blocks = frames
        .into_iter()
        .zip(lemmas)
        .map(|(f, l)| PropsBlock::new(l, f))
        .collect::<Result<Vec<_>>>()?;
    let text = crate::treebank::write_props(&blocks)?;
    match &a.output {
        Some(p) => {
            data::write(p, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

/// Frames for every predicate of every sentence, in parallel over
/// sentences. A single model decodes its own lattice; several models
/// decode their averaged lattice.
pub fn predict_corpus(models: &[&SrlModel], corpus: &[Instance]) -> Result<Vec<Vec<PredicateFrame>>> {
    corpus
        .par_iter()
        .map(|inst| match models {
            [m] => m.predict_instance(inst),
            _ => inst
                .predicates()
                .into_iter()
                .map(|p| ensemble_predict(models, inst, p))
                .collect(),
        })
        .collect()
}

fn frames_of(blocks: Vec<PropsBlock>) -> Vec<Vec<PredicateFrame>> {
    blocks.into_iter().map(|b| b.frames).collect()
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<String> {
    let gold = frames_of(data::read_props(&a.gold)?);
    let pred = frames_of(data::read_props(&a.pred)?);
    let report = evaluate(&gold, &pred)?;
    if a.json {
        Ok(serde_json::to_string_pretty(&report)? + "\n")
    } else {
        Ok(format_report(&report))
    }
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<String> {
    let gold_blocks = data::read_props(&a.gold)?;
    let pred_blocks = data::read_props(&a.pred)?;
    if let Some(deps) = &a.deps {
        let trees = data::read_conllx(deps)?;
        if trees.len() != gold_blocks.len()
            || trees.iter().zip(&gold_blocks).any(|((s, _), b)| s.len() != b.len())
        {
            return Err(Error::Input(format!(
                "{} does not match the sentences of {}",
                deps.display(),
                a.gold.display()
            )));
        }
    }
    let gold = frames_of(gold_blocks);
    let pred = frames_of(pred_blocks);
    let report = AnalysisReport::build(&gold, &pred, &DEFAULT_BINS)?;
    if let Some(p) = &a.json_out {
        data::write(p, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    let mut s = format_report(&evaluate(&gold, &pred)?);
    s.push_str("\nF1 by distance to the predicate\n");
    s.push_str(&format_distance_table(&f1_by_distance(&gold, &pred, &DEFAULT_BINS)?));
    s.push_str("\nOracle corrections (cumulative F1)\n");
    s.push_str(&format_curve(&report.oracle_curve));
    Ok(s)
}

fn cmd_features(a: &FeaturesArgs) -> Result<String> {
    if !matches!(a.mode, SyntaxMode::Sdp | SyntaxMode::Tpf | SyntaxMode::Pe) {
        return Err(Error::Config(format!(
            "features mode must be sdp, tpf or pe, not {}",
            a.mode
        )));
    }
    let trees = data::read_conllx(&a.deps)?;
    let predicates: Vec<Vec<usize>> = match &a.props {
        Some(p) => {
            let lemmas = data::read_predicates(p)?;
            if lemmas.len() != trees.len() {
                return Err(Error::Input(format!(
                    "{} has {} sentences but {} has {}",
                    a.deps.display(),
                    trees.len(),
                    p.display(),
                    lemmas.len()
                )));
            }
            lemmas.iter().map(|l| data::predicate_positions(l)).collect()
        }
        None => trees.iter().map(|(s, _)| (0..s.len()).collect()).collect(),
    };
    Ok(feature_table(&trees, &predicates, a.mode, a.clip))
}

/// Tab-separated rows `sentence, predicate, token, form, feature`, all
/// positions 1-based.
pub fn feature_table(
    trees: &[(crate::treebank::Sentence, crate::treebank::DependencyTree)],
    predicates: &[Vec<usize>],
    mode: SyntaxMode,
    clip: usize,
) -> String {
    let mut s = String::from("sentence\tpredicate\ttoken\tform\tfeature\n");
    for (k, ((sentence, tree), preds)) in trees.iter().zip(predicates).enumerate() {
        for &p in preds.iter().filter(|&&p| p < tree.len()) {
            for (i, form) in sentence.tokens().iter().enumerate() {
                let feature = match mode {
                    SyntaxMode::Tpf => {
                        let (d1, d2) = tpf_extract(tree, i, p, clip);
                        format!("({d1},{d2})")
                    }
                    SyntaxMode::Pe => pattern_extract(tree, i, p).to_string(),
                    _ => {
                        let (wp, pp) = sdp_paths(tree, i, p);
                        let labels = |path: &[usize]| {
                            path.iter().map(|&j| tree.label(j)).collect::<Vec<_>>().join(",")
                        };
                        format!("{}|{}", labels(&wp), labels(&pp))
                    }
                };
                let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", k + 1, p + 1, i + 1, form, feature);
            }
        }
    }
    s
}

/// Checkpoint path inside a training output directory.
pub fn checkpoint_path(dir: &Path) -> PathBuf {
    dir.join(CHECKPOINT_FILE)
}
