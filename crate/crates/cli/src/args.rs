use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "tlstm", version, about = "Tensor-LSTM dependency parsing and cross-lingual score projection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a parser on a treebank (mono) or a projected score corpus (xling).
    Train(TrainArgs),
    /// Write raw edge scores of a trained model for every input sentence.
    ExportScores(ExportArgs),
    /// Project source-language scores onto target sentences.
    Project(ProjectArgs),
    /// Parse a CoNLL-U file with a trained model.
    Parse(ParseArgs),
    /// Print the unlabeled attachment score of predictions against gold.
    Eval(EvalArgs),
    /// Train on increasingly blanked-out projected scores and tabulate UAS.
    BlankoutExperiment(BlankoutArgs),
    /// Generate a toy-grammar treebank, embeddings and projected scores.
    Synth(SynthArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Mono,
    Xling,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    Xent,
    Mse,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossChoice {
    Xent,
    Mse,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct ModelShape {
    /// Units per direction per layer.
    #[arg(long, default_value_t = 100)]
    pub hidden: usize,
    /// Stacked Tensor-LSTM layers.
    #[arg(long, default_value_t = 4)]
    pub layers: usize,
    /// Sentences per minibatch.
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    /// Train on a seeded random subset of this many sentences.
    #[arg(long)]
    pub subsample: Option<usize>,
    /// Disable annealed gradient noise.
    #[arg(long)]
    pub no_noise: bool,
    /// Disable dropout.
    #[arg(long)]
    pub no_dropout: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long, value_enum)]
    pub loss: Loss,
    /// CoNLL-U treebank (mono) or score corpus (xling).
    #[arg(long)]
    pub train: PathBuf,
    /// Gold CoNLL-U for early stopping (mono) or monitoring (xling).
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Epoch count; an upper bound when early stopping.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// JSON-lines metrics log; defaults to `<out>.metrics.jsonl`.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Use word embeddings only, no POS one-hots.
    #[arg(long)]
    pub no_pos: bool,
    #[command(flatten)]
    pub shape: ModelShape,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CoNLL-U input; heads may be `_`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    /// Target-language CoNLL-U.
    #[arg(long)]
    pub target: PathBuf,
    /// One score corpus per source language.
    #[arg(long, num_args = 1.., required = true)]
    pub sources: Vec<PathBuf>,
    /// Sentence alignments, one per source, same order.
    #[arg(long, num_args = 1.., required = true)]
    pub sent_align: Vec<PathBuf>,
    /// Word alignments, one per source, same order.
    #[arg(long, num_args = 1.., required = true)]
    pub word_align: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Project raw source scores.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Args, Debug)]
pub struct ParseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
}

#[derive(Args, Debug)]
pub struct BlankoutArgs {
    /// Projected score corpus to train on.
    #[arg(long)]
    pub train: PathBuf,
    /// Gold CoNLL-U to evaluate on.
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Curve table (TSV) to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4")]
    pub fractions: Vec<f64>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = LossChoice::Both)]
    pub loss: LossChoice,
    /// Overrides the per-loss epoch defaults.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub no_pos: bool,
    #[command(flatten)]
    pub shape: ModelShape,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Directory receiving train.conllu, dev.conllu, embeddings.txt and
    /// projected.jsonl.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub sentences: usize,
    #[arg(long, default_value_t = 50)]
    pub dev_sentences: usize,
    #[arg(long, default_value_t = 8)]
    pub max_len: usize,
    #[arg(long, default_value_t = 8)]
    pub embedding_width: usize,
    /// Standard deviation of the noise on projected scores.
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long)]
    pub seed: u64,
}
