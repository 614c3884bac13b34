use std::path::PathBuf;

use aspect_embed::corpus::{LoadOptions, Split, SplitRatios, SupervisionMode, Tokenizer};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "aspect-embed", version, about = "Train and evaluate aspect-specific document embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a vocabulary from the training split of a corpus.
    BuildVocab(BuildVocabArgs),
    /// Write a synthetic rated corpus with independent aspect labels.
    GenSynthetic(GenSyntheticArgs),
    /// Train an encoder and write checkpoints and a metrics log.
    Train(TrainArgs),
    /// Embed documents with every aspect encoder of a checkpoint.
    Embed(EmbedArgs),
    /// Retrieval AUC for one aspect of an embeddings file.
    EvalAuc(EvalAucArgs),
    /// Aspect-by-aspect AUC matrix.
    CrossAuc(MatrixArgs),
    /// Cross AUC restricted to documents whose aspect labels disagree.
    DecorrelatedAuc(MatrixArgs),
    /// Words with the highest mean gate activation per aspect.
    TopWords(TopWordsArgs),
    /// Export per-token gate highlights as JSONL or HTML.
    Highlight(HighlightArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    ReviewGroups,
    DichotomizedRatings,
}

impl From<ModeArg> for SupervisionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ReviewGroups => SupervisionMode::ReviewGroups,
            ModeArg::DichotomizedRatings => SupervisionMode::DichotomizedRatings,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitArg {
    Train,
    Valid,
    Test,
    All,
}

impl SplitArg {
    pub fn split(self) -> Option<Split> {
        match self {
            SplitArg::Train => Some(Split::Train),
            SplitArg::Valid => Some(Split::Valid),
            SplitArg::Test => Some(Split::Test),
            SplitArg::All => None,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorpusArgs {
    /// Corpus JSONL file.
    #[arg(short = 'c', long)]
    pub corpus: PathBuf,
    /// Override the supervision mode declared in the corpus header.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Ratings strictly above are positive, strictly below negative.
    #[arg(long, default_value_t = 3.0)]
    pub rating_threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub train_ratio: f64,
    #[arg(long, default_value_t = 0.1)]
    pub valid_ratio: f64,
    #[arg(long, default_value_t = 0.1)]
    pub test_ratio: f64,
    #[arg(long)]
    pub keep_case: bool,
    #[arg(long)]
    pub keep_punctuation: bool,
}

impl CorpusArgs {
    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            tokenizer: Tokenizer {
                lowercase: !self.keep_case,
                split_punctuation: !self.keep_punctuation,
            },
            rating_threshold: self.rating_threshold,
            split: SplitRatios {
                train: self.train_ratio,
                valid: self.valid_ratio,
                test: self.test_ratio,
            },
            split_seed: self.split_seed,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildVocabArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Keep tokens found in at least this many training documents.
    #[arg(long, default_value_t = 5)]
    pub min_df: usize,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenSyntheticArgs {
    #[arg(long, default_value_t = 2)]
    pub aspects: usize,
    #[arg(long, default_value_t = 1000)]
    pub docs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Signal words per aspect side.
    #[arg(long, default_value_t = 20)]
    pub pool_size: usize,
    #[arg(long, default_value_t = 200)]
    pub filler_size: usize,
    /// Signal words inserted per document and aspect.
    #[arg(long, default_value_t = 1)]
    pub signal_count: usize,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Existing vocabulary; built from the training split when absent.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub min_df: usize,
    /// Fixed sequence length; otherwise a percentile of training lengths.
    #[arg(long)]
    pub seq_len: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    pub percentile: f64,
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    #[arg(long, default_value_t = 200)]
    pub filters: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 200)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub l2: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub l1: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub adam_eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to the number of training documents.
    #[arg(long)]
    pub triplets_per_epoch: Option<usize>,
    #[arg(long, default_value_t = 256)]
    pub probe_triplets: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long)]
    pub no_early_stopping: bool,
    /// Multi-threaded gradient accumulation; results are not bit-reproducible.
    #[arg(long)]
    pub parallel: bool,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    pub precision: Precision,
    /// Continue from this checkpoint instead of a fresh initialization.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Output directory; defaults to $ASPECT_EMBED_OUT_DIR or the working directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AucBy {
    /// Groups when every document has one, labels otherwise.
    Auto,
    Group,
    Label,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalAucArgs {
    /// Embeddings JSONL written by `embed`.
    #[arg(short = 'e', long)]
    pub embeddings: PathBuf,
    /// Required when the file holds more than one aspect.
    #[arg(long)]
    pub aspect: Option<String>,
    #[arg(long, value_enum, default_value_t = AucBy::Auto)]
    pub by: AucBy,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MatrixArgs {
    #[arg(short = 'e', long)]
    pub embeddings: PathBuf,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
    /// Also write the matrix as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TopWordsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    pub split: SplitArg,
    /// Restrict to one aspect.
    #[arg(long)]
    pub aspect: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long, default_value_t = 5)]
    pub min_occurrence: usize,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HighlightFormat {
    Json,
    Html,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HighlightArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    #[arg(long, value_enum, default_value_t = HighlightFormat::Json)]
    pub format: HighlightFormat,
    /// Mean-filter width, odd.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Only the first N documents of the split.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}
