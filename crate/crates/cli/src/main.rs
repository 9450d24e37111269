//! `cpmi`: dependency trees from contextual PMI scores, with baselines,
//! evaluation, and exact synthetic-language checks.

mod commands;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "cpmi", version, about = "CPMI dependency parsing toolkit")]
struct Cli {
    /// Output directory for artifacts and manifest.json.
    #[arg(long, global = true, env = "CPMI_OUT_DIR", default_value = "cpmi-out")]
    out: PathBuf,
    /// Worker threads for per-sentence work; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Corpus seed; sentence k draws from stream k.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Treebank utilities.
    #[command(subcommand)]
    Treebank(TreebankCommand),
    /// Check every record in a score file.
    ValidateScores(ValidateArgs),
    /// Turn score records into symmetric matrices.
    BuildMatrix(BuildMatrixArgs),
    /// Decode one tree per matrix.
    Decode(DecodeArgs),
    /// Linear, random, or length-matched trees for a treebank.
    Baseline(BaselineArgs),
    /// Word2Vec PMI control.
    #[command(subcommand)]
    W2v(W2vCommand),
    /// Score predicted trees against gold.
    Eval(EvalArgs),
    /// Compare several models: metrics, edge overlap, perplexity fits.
    Report(ReportArgs),
    /// Exact synthetic languages.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand)]
enum TreebankCommand {
    /// Sentence counts and gold arc-length statistics.
    Stats(StatsArgs),
}

#[derive(Subcommand)]
enum W2vCommand {
    /// Train skip-gram embeddings with negative sampling.
    Train(W2vTrainArgs),
    /// PMI matrices from trained embeddings.
    Pmi(W2vPmiArgs),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Generate random languages (or the two-word example language).
    Gen(OracleGenArgs),
    /// Check that max-PMI and max-conditional trees coincide.
    Verify(OracleVerifyArgs),
    /// Exact score records for every sentence of a language.
    Score(OracleScoreArgs),
}

#[derive(Args, Serialize)]
struct StatsArgs {
    /// CoNLL-U file, `.tsv` export, or `@sample`.
    #[arg(long)]
    corpus: PathBuf,
    /// Abort on the first malformed sentence instead of skipping it.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Serialize)]
struct ValidateArgs {
    #[arg(long)]
    scores: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SymArg {
    Sum,
    Max,
    Single,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum VariantArg {
    Abs,
    Signed,
}

#[derive(Args, Serialize)]
struct MatrixOptions {
    #[arg(long, value_enum, default_value_t = SymArg::Sum)]
    sym: SymArg,
    #[arg(long, value_enum, default_value_t = VariantArg::Abs)]
    variant: VariantArg,
}

#[derive(Args, Serialize)]
struct BuildMatrixArgs {
    #[arg(long)]
    scores: PathBuf,
    #[command(flatten)]
    matrix: MatrixOptions,
}

#[derive(Args, Serialize)]
#[group(id = "decoder", required = true, multiple = false)]
struct DecoderChoice {
    /// Eisner projective decoder.
    #[arg(long)]
    projective: bool,
    /// Unrestricted maximum spanning tree.
    #[arg(long)]
    mst: bool,
    /// Exhaustive search (at most 8 words); projective with `--projective-only`.
    #[arg(long)]
    brute_force: bool,
}

#[derive(Args, Serialize)]
#[group(id = "source", required = true, multiple = false)]
struct MatrixSource {
    /// Score records (built into matrices with `--sym` and `--variant`).
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Prebuilt matrices.
    #[arg(long)]
    matrices: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct DecodeArgs {
    #[command(flatten)]
    decoder: DecoderChoice,
    #[command(flatten)]
    source: MatrixSource,
    #[command(flatten)]
    matrix: MatrixOptions,
    /// Restrict `--brute-force` to noncrossing trees.
    #[arg(long)]
    projective_only: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BaselineKind {
    Linear,
    RandomProjective,
    RandomMst,
    LengthMatched,
}

#[derive(Args, Serialize)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    kind: BaselineKind,
    /// Treebank supplying sentence lengths (and gold trees for
    /// `length-matched`).
    #[arg(long)]
    corpus: PathBuf,
    /// Restarts for the length-matched sampler.
    #[arg(long, default_value_t = cpmi::baselines::DEFAULT_MAX_RESTARTS)]
    max_restarts: usize,
}

#[derive(Args, Serialize)]
struct W2vTrainArgs {
    /// Plain text (one sentence per line) or a treebank.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 100)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 5)]
    negative: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    learning_rate: f32,
    /// Frequent-word subsampling threshold.
    #[arg(long)]
    subsample: Option<f64>,
}

#[derive(Args, Serialize)]
struct W2vPmiArgs {
    #[arg(long)]
    embeddings: PathBuf,
    /// Treebank whose sentences are scored.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = SymArg::Sum)]
    sym: SymArg,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    /// `linear` or an edge-list file.
    #[arg(long)]
    pred: String,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    exclude_punct: bool,
    /// Name used in report.csv.
    #[arg(long, default_value = "model")]
    model: String,
    /// Relations need more than this many arcs to enter the table.
    #[arg(long, default_value_t = cpmi::eval::DEFAULT_MIN_RELATION_COUNT)]
    min_relation_count: usize,
}

#[derive(Args, Serialize)]
struct ReportArgs {
    #[arg(long)]
    gold: PathBuf,
    /// `NAME=FILE` (or `NAME=linear`); repeat for each model.
    #[arg(long = "pred", required = true)]
    preds: Vec<String>,
    /// `NAME=FILE` score records for the perplexity fit of model NAME.
    #[arg(long = "scores")]
    scores: Vec<String>,
    #[arg(long)]
    exclude_punct: bool,
    #[arg(long, default_value_t = cpmi::eval::DEFAULT_MIN_RELATION_COUNT)]
    min_relation_count: usize,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Preset {
    L0,
}

#[derive(Args, Serialize)]
struct OracleGenArgs {
    #[arg(long, default_value_t = 4)]
    vocab: usize,
    #[arg(long, default_value_t = 4)]
    length: usize,
    /// Number of sentences with positive probability.
    #[arg(long, default_value_t = 20)]
    support: usize,
    /// Languages to generate; language k uses stream k.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Write a fixed language instead of a random one.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

#[derive(Args, Serialize)]
struct OracleVerifyArgs {
    #[arg(long = "lang", required = true)]
    langs: Vec<PathBuf>,
    /// Refuse languages with more rooted trees per sentence than this.
    #[arg(long, default_value_t = 100_000)]
    max_trees: u64,
}

#[derive(Args, Serialize)]
struct OracleScoreArgs {
    #[arg(long)]
    lang: PathBuf,
    /// Left-to-right (prefix) conditioning instead of bidirectional.
    #[arg(long)]
    ltor: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
