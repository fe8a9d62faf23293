//! Command-line front end for the process data toolkit.
//!
//! Machine-readable results go to stdout as `key=value` lines; tables and
//! progress meant for people go to stderr. Exit codes: 0 success, 2 usage
//! error, 3 data error, 4 numeric failure.

mod commands;
mod config;
mod ioutil;

use clap::{Args, Parser, Subcommand};
use config::Cfg;
use procflow::ErrorClass;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "procflow",
    version,
    about = "Toolkit for response process data: ingest, clean, simulate, embed, and model timestamped action sequences",
    max_term_width = 100
)]
struct Cli {
    /// Flat key=value file supplying defaults for the invoked command's flags
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Descriptive statistics for a process CSV
    Summarize(SummarizeArgs),
    /// Apply sequence-cleaning operations and write the result
    Clean(CleanArgs),
    /// Pairwise dissimilarity matrix between processes
    Dist(DistArgs),
    /// Latent features by multidimensional scaling
    Mds(MdsArgs),
    /// Cross-validated latent dimension for MDS features
    #[command(name = "choosek-mds")]
    ChoosekMds(ChoosekMdsArgs),
    /// Autoencoder features for action and time sequences
    Ae(AeArgs),
    /// Cross-validated latent dimension for the autoencoder
    #[command(name = "choosek-ae")]
    ChoosekAe(ChoosekAeArgs),
    /// Fit a supervised sequence model
    #[command(name = "seqm-fit")]
    SeqmFit(SeqmFitArgs),
    /// Predict responses with a stored sequence model
    #[command(name = "seqm-predict")]
    SeqmPredict(SeqmPredictArgs),
    /// Generate synthetic process data
    Gen(GenArgs),
    /// Logistic regression on a feature matrix
    Logit(LogitArgs),
}

/// CSV layout flags shared by every command that reads or writes processes.
#[derive(Args, Clone, Default)]
pub struct StyleArgs {
    /// CSV layout: "single" (one row per process) or "multiple" (one row per event)
    #[arg(long, value_name = "STYLE")]
    style: Option<String>,
    /// Header name of the identifier column
    #[arg(long, value_name = "NAME")]
    id_var: Option<String>,
    /// Header name of the action column
    #[arg(long, value_name = "NAME")]
    action_var: Option<String>,
    /// Header name of the timestamp column; "none" drops timestamps
    #[arg(long, value_name = "NAME")]
    time_var: Option<String>,
    /// Separator between steps within a cell (single layout)
    #[arg(long, value_name = "CHAR")]
    step_sep: Option<String>,
}

/// Optimization flags shared by the fitting commands.
#[derive(Args, Clone, Default)]
pub struct TrainArgs {
    /// Training epochs
    #[arg(long, value_name = "N")]
    epochs: Option<String>,
    /// Minibatch size
    #[arg(long, value_name = "N")]
    batch: Option<String>,
    /// Optimizer: sgd, adam, adadelta, or rmsprop
    #[arg(long, value_name = "NAME")]
    optimizer: Option<String>,
    /// Optimizer step size
    #[arg(long, value_name = "X")]
    step_size: Option<String>,
    /// RNG seed; required, all randomness derives from it
    #[arg(long, value_name = "N")]
    seed: Option<String>,
}

#[derive(Args)]
pub struct SummarizeArgs {
    /// Process CSV to read
    #[arg(long = "in", value_name = "FILE")]
    input: Option<String>,
    /// Write the action table (action, count, seq_count) as CSV
    #[arg(long, value_name = "FILE")]
    actions_out: Option<String>,
    /// Write the action transition probability matrix as CSV
    #[arg(long, value_name = "FILE")]
    trans_out: Option<String>,
    #[command(flatten)]
    style: StyleArgs,
}

#[derive(Args)]
pub struct CleanArgs {
    /// Process CSV to read
    #[arg(long = "in", value_name = "FILE")]
    input: Option<String>,
    /// Cleaned process CSV to write
    #[arg(long, value_name = "FILE")]
    out: Option<String>,
    /// Operations inline, separated by ";" (see --script for the syntax)
    #[arg(long, value_name = "OPS")]
    ops: Option<String>,
    /// File with one operation per line: remove_repeat | remove_action A,B |
    /// replace OLD NEW | combine A,B NEW
    #[arg(long, value_name = "FILE")]
    script: Option<String>,
    #[command(flatten)]
    style: StyleArgs,
}

#[derive(Args)]
pub struct DistArgs {
    /// Process CSV to read
    #[arg(long = "in", value_name = "FILE")]
    input: Option<String>,
    /// Matrix CSV to write
    #[arg(long, value_name = "FILE")]
    out: Option<String>,
    /// Dissimilarity: "action" or "both" (time-weighted)
    #[arg(long, value_name = "NAME")]
    measure: Option<String>,
    /// Weight on the timing part of the "both" measure
    #[arg(long, value_name = "X")]
    w_time: Option<String>,
    #[command(flatten)]
    style: StyleArgs,
}

#[derive(Args)]
pub struct MdsArgs {
    /// Process CSV to read (computes dissimilarities on the fly)
    #[arg(long = "in", value_name = "FILE")]
    input: Option<String>,
    /// Precomputed dissimilarity matrix CSV (from `dist`)
    #[arg(long, value_name = "FILE")]
    dist_in: Option<String>,
    /// Feature CSV to write
    #[arg(long, value_name = "FILE")]
    out: Option<String>,
    /// Number of latent dimensions
    #[arg(long, value_name = "K")]
    k: Option<String>,
    /// Algorithm: "small" (exact), "large" (anchor placement), or "auto"
    #[arg(long, value_name = "NAME")]
    method: Option<String>,
    /// Anchor subset size for the large path
    #[arg(long, value_name = "N")]
    subset_size: Option<String>,
    /// Rotate features to principal components: true or false
    #[arg(long, value_name = "BOOL")]
    pca: Option<String>,
    /// Dissimilarity when reading processes: "action" or "both"
    #[arg(long, value_name = "NAME")]
    measure: Option<String>,
    /// Weight on the timing part of the "both" measure
    #[arg(long, value_name = "X")]
    w_time: Option<String>,
    /// RNG seed; required, all randomness derives from it
    #[arg(long, value_name = "N")]
    seed: Option<String>,
    #[command(flatten)]
    style: StyleArgs,
}

#[derive(Args)]
pub struct ChoosekMdsArgs {
    /// Process CSV to read (computes dissimilarities on the fly)
    #[arg(long = "in", value_name = "FILE")]
    input: Option<String>,
    /// Precomputed dissimilarity matrix CSV (from `dist`)
    #[arg(long, value_name = "FILE")]
    dist_in: Option<String>,
    /// Candidate dimensions, comma separated
    #[arg(long, value_name = "LIST")]
    k_cand: Option<String>,
    /// Cross-validation folds
    #[arg(long, value_name = "N")]
    folds: Option<String>,
    /// Dissimilarity when reading processes: "action" or "both"
    #[arg(long, value_name = "NAME")]
    measure: Option<String>,
    /// Weight on the timing part of the "both" measure
    #[arg(long, value_name = "X")]
    w_time: Option<String>,
    /// RNG seed; required, all randomness derives from it
    #[arg(long, value_name = "N")]
    seed: Option<String>,
    #[command(flatten)]
    style: StyleArgs,
}

/// Autoencoder architecture flags shared by `ae` and `choosek-ae`.
#[derive(Args, Clone, Default)]
pub struct AeArchArgs {
    /// What to encode: "action", "time", or "both"
    #[arg(long, value_name = "NAME")]
    ae_type: Option<String>,
    /// Recurrent cell: "gru" or "lstm"
    #[arg(long, value_name = "NAME")]
    rnn_type: Option<String>,
    /// Feature readout: "last" or "avg" encoder output
    #[arg(long, value_name = "NAME")]
    method: Option<String>,
    /// Feed cumulative timestamps instead of gaps: true or false
    #[arg(long, value_name = "BOOL")]
    cumulative: Option<String>,
    /// Log-transform the time track: true or false
    #[arg(long, value_name = "BOOL")]
    log: Option<String>,
    /// Loss weight on the action part
    #[arg(long, value_name = "X")]
    w_action: Option<String>,
    /// Loss weight on the timing part
    #[arg(long, value_name = "X")]
    w_time: Option<String>,
}

#[derive(Args)]
pub struct AeArgs {
    /// Process CSV to read
    #[arg(long = "in", value_name = "FILE")]
    input: Option<String>,
    /// Feature CSV to write
    #[arg(long, value_name = "FILE")]
    out: Option<String>,
    /// Also store the trained model archive
    #[arg(long, value_name = "FILE")]
    model_out: Option<String>,
    /// Number of latent dimensions
    #[arg(long, value_name = "K")]
    k: Option<String>,
    /// Rotate features to principal components: true or false
    #[arg(long, value_name = "BOOL")]
    pca: Option<String>,
    #[command(flatten)]
    arch: AeArchArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    style: StyleArgs,
}

#[derive(Args)]
pub struct ChoosekAeArgs {
    /// Process CSV to read
    #[arg(long = "in", value_name = "FILE")]
    input: Option<String>,
    /// Candidate dimensions, comma separated
    #[arg(long, value_name = "LIST")]
    k_cand: Option<String>,
    /// Cross-validation folds
    #[arg(long, value_name = "N")]
    folds: Option<String>,
    #[command(flatten)]
    arch: AeArchArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    style: StyleArgs,
}

#[derive(Args)]
pub struct SeqmFitArgs {
    /// Process CSV to read
    #[arg(long = "in", value_name = "FILE")]
    input: Option<String>,
    /// Response CSV (id, value); binary responses must be 0 or 1
    #[arg(long, value_name = "FILE")]
    response: Option<String>,
    /// Optional covariate CSV (id column plus one column per covariate)
    #[arg(long, value_name = "FILE")]
    covariates: Option<String>,
    /// Model archive to write
    #[arg(long, value_name = "FILE")]
    model_out: Option<String>,
    /// Response type: "binary" or "scale"
    #[arg(long, value_name = "NAME")]
    response_type: Option<String>,
    /// Embedding dimension
    #[arg(long, value_name = "K")]
    k_emb: Option<String>,
    /// Recurrent state dimension
    #[arg(long, value_name = "K")]
    k_rnn: Option<String>,
    /// Recurrent cell: "gru" or "lstm"
    #[arg(long, value_name = "NAME")]
    rnn_type: Option<String>,
    /// Feed the time track alongside embeddings: true or false
    #[arg(long, value_name = "BOOL")]
    include_time: Option<String>,
    /// Use inter-arrival gaps rather than cumulative times: true or false
    #[arg(long, value_name = "BOOL")]
    time_interval: Option<String>,
    /// Log-transform the time track: true or false
    #[arg(long, value_name = "BOOL")]
    log_time: Option<String>,
    /// Hidden layer widths after the recurrent readout, comma separated
    #[arg(long, value_name = "LIST")]
    hidden: Option<String>,
    /// Keep only the first events of longer sequences
    #[arg(long, value_name = "N")]
    max_len: Option<String>,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    style: StyleArgs,
}

#[derive(Args)]
pub struct SeqmPredictArgs {
    /// Model archive from `seqm-fit`
    #[arg(long, value_name = "FILE")]
    model: Option<String>,
    /// Process CSV to score
    #[arg(long = "in", value_name = "FILE")]
    input: Option<String>,
    /// Covariate CSV matching the fitted model
    #[arg(long, value_name = "FILE")]
    covariates: Option<String>,
    /// Prediction CSV to write (id, prediction)
    #[arg(long, value_name = "FILE")]
    out: Option<String>,
    #[command(flatten)]
    style: StyleArgs,
}

#[derive(Args)]
pub struct GenArgs {
    /// Generator: "item" (simulated item), "markov", or "rnn"
    #[arg(long, value_name = "NAME")]
    generator: Option<String>,
    /// Number of processes to draw
    #[arg(long, value_name = "N")]
    n: Option<String>,
    /// Process CSV to write
    #[arg(long, value_name = "FILE")]
    out: Option<String>,
    /// item: option count for the first block
    #[arg(long, value_name = "N")]
    c1: Option<String>,
    /// item: option count for the second block
    #[arg(long, value_name = "N")]
    c2: Option<String>,
    /// item: probability of another exploration round
    #[arg(long, value_name = "P")]
    p_continue: Option<String>,
    /// markov: transition matrix CSV with action labels as ids
    #[arg(long, value_name = "FILE")]
    spec: Option<String>,
    /// markov: label of the starting action
    #[arg(long, value_name = "LABEL")]
    start: Option<String>,
    /// markov/rnn: label of the terminal action
    #[arg(long, value_name = "LABEL")]
    terminal: Option<String>,
    /// rnn: action labels, comma separated
    #[arg(long, value_name = "LIST")]
    vocab: Option<String>,
    /// rnn: hidden state dimension
    #[arg(long, value_name = "K")]
    hidden_dim: Option<String>,
    /// Gap distribution: "exponential", "lognormal", "constant", or "none"
    #[arg(long, value_name = "NAME")]
    time_dist: Option<String>,
    /// exponential: rate of the gap distribution
    #[arg(long, value_name = "X")]
    time_rate: Option<String>,
    /// lognormal: log-scale mean of the gap distribution
    #[arg(long, value_name = "X")]
    time_mu: Option<String>,
    /// lognormal: log-scale standard deviation of the gap distribution
    #[arg(long, value_name = "X")]
    time_sigma: Option<String>,
    /// constant: the fixed gap
    #[arg(long, value_name = "X")]
    time_value: Option<String>,
    /// RNG seed; required, all randomness derives from it
    #[arg(long, value_name = "N")]
    seed: Option<String>,
    #[command(flatten)]
    style: StyleArgs,
}

#[derive(Args)]
pub struct LogitArgs {
    /// Feature CSV (from `mds` or `ae`)
    #[arg(long, value_name = "FILE")]
    features: Option<String>,
    /// Label CSV (id, value) with values 0 or 1
    #[arg(long, value_name = "FILE")]
    labels: Option<String>,
    /// Fraction of rows used for fitting
    #[arg(long, value_name = "P")]
    train_frac: Option<String>,
    /// Write fitted coefficients (name, coefficient) as CSV
    #[arg(long, value_name = "FILE")]
    coef_out: Option<String>,
    /// RNG seed; required, all randomness derives from it
    #[arg(long, value_name = "N")]
    seed: Option<String>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(match e.class() {
            ErrorClass::Usage => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numeric => 4,
        });
    }
}

fn run(cli: Cli) -> procflow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => Cfg::load(path)?,
        None => Cfg::empty(),
    };
    match cli.cmd {
        Cmd::Summarize(a) => commands::summarize(&mut cfg, a)?,
        Cmd::Clean(a) => commands::clean(&mut cfg, a)?,
        Cmd::Dist(a) => commands::dist(&mut cfg, a)?,
        Cmd::Mds(a) => commands::mds(&mut cfg, a)?,
        Cmd::ChoosekMds(a) => commands::choosek_mds(&mut cfg, a)?,
        Cmd::Ae(a) => commands::ae(&mut cfg, a)?,
        Cmd::ChoosekAe(a) => commands::choosek_ae(&mut cfg, a)?,
        Cmd::SeqmFit(a) => commands::seqm_fit(&mut cfg, a)?,
        Cmd::SeqmPredict(a) => commands::seqm_predict(&mut cfg, a)?,
        Cmd::Gen(a) => commands::gen(&mut cfg, a)?,
        Cmd::Logit(a) => commands::logit(&mut cfg, a)?,
    }
    cfg.finish()
}
