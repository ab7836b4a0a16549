//! `mtl-embed`: prepare dialogue corpora, train the multitask conversation
//! model, extract sentence embeddings and evaluate them on session-level
//! behavior and emotion tasks.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags or
//! config, missing input files).

mod config;
mod data;
mod embed;
mod eval;
mod output;
mod report;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mtl_embed::downstream::Method;
use mtl_embed::model::Preset;

use config::{EmbedFormat, ReportMetric, RunConfig, UsageError};

#[derive(Parser)]
#[command(name = "mtl-embed", version, about)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for independent sessions and folds. Outputs do not
    /// depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a raw corpus into consecutive-line pairs and a vocabulary.
    Prepare(PrepareArgs),
    /// Generate a synthetic pair corpus and session benchmarks.
    Synth(SynthArgs),
    /// Attach lexicon affect labels to a pair file.
    Label(LabelArgs),
    /// Train the multitask conversation model.
    Train(TrainArgs),
    /// Extract sentence embeddings with a checkpoint.
    Embed(EmbedArgs),
    /// Evaluate checkpoints with leave-one-group-out cross-validation.
    Eval(EvalArgs),
    /// Tabulate evaluation results.
    Report(ReportArgs),
}

#[derive(Args)]
struct PrepareArgs {
    /// Raw text, one utterance per line, blank line between documents.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Pair file (x<TAB>y per line).
    #[arg(long = "out")]
    output: Option<PathBuf>,
    /// Also write the vocabulary built from the pairs.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    max_vocab: Option<usize>,
    #[arg(long)]
    min_count: Option<u64>,
    /// Print corpus statistics as JSON.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pairs: Option<usize>,
    /// Pair file.
    #[arg(long = "out")]
    output: Option<PathBuf>,
    /// Behavior-rated session benchmark (JSONL).
    #[arg(long = "sessions-out")]
    sessions_output: Option<PathBuf>,
    /// Emotion-labeled utterance benchmark (JSONL).
    #[arg(long = "emotion-out")]
    emotion_output: Option<PathBuf>,
    /// Replies repeat their utterance.
    #[arg(long)]
    echo: bool,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long = "out")]
    output: Option<PathBuf>,
    /// Lexicon with [positive] and [negative] sections; bundled list when
    /// omitted.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Print label counts and fractions as JSON.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Output directory.
    #[arg(long = "out")]
    output: Option<PathBuf>,
    /// Weight of the contextual loss; 1.0 trains without the multitask head.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Train every cell of the layers × dim grid.
    #[arg(long)]
    grid: bool,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Session JSONL input.
    #[arg(long)]
    sessions: Option<PathBuf>,
    /// Raw text input, one sentence per line.
    #[arg(long)]
    text: Option<PathBuf>,
    #[arg(long = "out")]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<EmbedFormat>,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint to evaluate; repeatable.
    #[arg(long = "checkpoint")]
    checkpoints: Vec<PathBuf>,
    /// Report name of the matching --checkpoint; repeatable.
    #[arg(long = "label")]
    labels: Vec<String>,
    #[arg(long)]
    sessions: Option<PathBuf>,
    /// kmeans, knn, rating or emotion; repeatable.
    #[arg(long = "method", value_parser = |s: &str| s.parse::<Method>())]
    methods: Vec<Method>,
    /// Behavior to evaluate; repeatable. Every rated behavior by default.
    #[arg(long = "behavior")]
    behaviors: Vec<String>,
    /// Output directory for results.jsonl and aggregate.csv.
    #[arg(long = "out")]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k_neighbors: Option<usize>,
    #[arg(long)]
    k_clusters: Option<usize>,
    #[arg(long)]
    extreme_fraction: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// results.jsonl written by `eval`; repeatable.
    #[arg(long = "results")]
    results: Vec<PathBuf>,
    /// Also write the text table here.
    #[arg(long = "out")]
    output: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_enum)]
    metric: Option<ReportMetric>,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    match s {
        "paper" => Ok(Preset::Paper),
        "desk" => Ok(Preset::Desk),
        _ => Err(format!("unknown preset `{s}` (expected paper or desk)")),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn set_vec<T>(slot: &mut Vec<T>, value: Vec<T>) {
    if !value.is_empty() {
        *slot = value;
    }
}

/// Applies flag overrides to the file configuration and runs the command.
fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.jobs == 0 {
        return Err(config::usage("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build()?;

    match cli.command {
        Command::Prepare(a) => {
            let c = &mut cfg.prepare;
            set_opt(&mut c.input, a.input);
            set_opt(&mut c.output, a.output);
            set_opt(&mut c.vocab, a.vocab);
            set(&mut c.max_vocab, a.max_vocab);
            set(&mut c.min_count, a.min_count);
            data::prepare(&cfg, a.stats)
        }
        Command::Synth(a) => {
            let c = &mut cfg.synth;
            set(&mut c.seed, a.seed);
            set(&mut c.pairs, a.pairs);
            set_opt(&mut c.output, a.output);
            set_opt(&mut c.sessions_output, a.sessions_output);
            set_opt(&mut c.emotion_output, a.emotion_output);
            if a.echo {
                c.corpus.echo = true;
            }
            data::synth(&cfg)
        }
        Command::Label(a) => {
            let c = &mut cfg.label;
            set_opt(&mut c.input, a.input);
            set_opt(&mut c.output, a.output);
            set_opt(&mut c.lexicon, a.lexicon);
            data::label(&cfg, a.stats)
        }
        Command::Train(a) => {
            let c = &mut cfg.train;
            set_opt(&mut c.pairs, a.pairs);
            set_opt(&mut c.output, a.output);
            set(&mut c.lambda, a.lambda);
            set_opt(&mut c.layers, a.layers);
            set_opt(&mut c.dim, a.dim);
            set(&mut c.preset, a.preset);
            set(&mut c.seed, a.seed);
            set_opt(&mut c.epochs, a.epochs);
            set_opt(&mut c.checkpoint_every, a.checkpoint_every);
            set_opt(&mut c.lexicon, a.lexicon);
            if a.grid {
                c.grid = true;
            }
            if !(0.0..=1.0).contains(&c.lambda) {
                return Err(config::usage(format!("lambda {} outside [0, 1]", c.lambda)));
            }
            train::run(&cfg)
        }
        Command::Embed(a) => {
            let c = &mut cfg.embed;
            set_opt(&mut c.checkpoint, a.checkpoint);
            set_opt(&mut c.sessions, a.sessions);
            set_opt(&mut c.text, a.text);
            set_opt(&mut c.output, a.output);
            set(&mut c.format, a.format);
            embed::run(&cfg, &pool)
        }
        Command::Eval(a) => {
            let c = &mut cfg.eval;
            set_vec(&mut c.checkpoints, a.checkpoints);
            set_vec(&mut c.labels, a.labels);
            set_opt(&mut c.sessions, a.sessions);
            set_vec(&mut c.methods, a.methods);
            set_vec(&mut c.behaviors, a.behaviors);
            set_opt(&mut c.output, a.output);
            set(&mut c.settings.seed, a.seed);
            set(&mut c.settings.k_neighbors, a.k_neighbors);
            set(&mut c.settings.k_clusters, a.k_clusters);
            set(&mut c.settings.extreme_fraction, a.extreme_fraction);
            // parallelism comes from --jobs alone and is not recorded:
            // results do not depend on it
            c.settings.jobs = 1;
            eval::run(&cfg, cli.jobs, &pool)
        }
        Command::Report(a) => {
            let c = &mut cfg.report;
            set_vec(&mut c.results, a.results);
            set_opt(&mut c.output, a.output);
            set_opt(&mut c.csv, a.csv);
            set(&mut c.metric, a.metric);
            report::run(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
