use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use fakenews_core::corpus::CorpusFormat;
use fakenews_core::eval::{Averaging, VarianceInput};
use fakenews_core::meta::{NormalizerKind, OutputHead, StackMode};
use fakenews_core::pipeline::BASE_PRESETS;
use fakenews_core::preprocess::HashtagMode;

#[derive(Parser, Debug)]
#[command(
    name = "fakenews",
    version,
    about = "Fake-news detection over short social-media posts",
    arg_required_else_help = true,
    args_override_self = true
)]
pub struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// JSON run file keyed by long flag names; flags on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory receiving the run ledger (`runs/`) and default outputs.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load, check and convert corpora.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Write cleaned texts as a two-column TSV.
    Preprocess(PreprocessArgs),
    /// Write per-post feature vectors.
    Featurize(FeaturizeArgs),
    /// Fit, apply and tune the LSA representation.
    #[command(subcommand)]
    Lsa(LsaCmd),
    /// Inspect ingested embedding files.
    #[command(subcommand)]
    Embeddings(EmbeddingsCmd),
    /// Train a base model or a stacker and save it to a directory.
    #[command(subcommand)]
    Train(TrainCmd),
    /// Label a corpus with a saved model.
    Predict(PredictArgs),
    /// Score models under the train/dev/test or k-fold protocol.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Word-level explanations.
    #[command(subcommand)]
    Explain(ExplainCmd),
    /// Render figures.
    #[command(subcommand)]
    Render(RenderCmd),
    /// Stacking shortcuts (same as the matching `train` and `predict` verbs).
    #[command(subcommand)]
    Stack(StackCmd),
}

#[derive(Subcommand, Debug)]
pub enum CorpusCmd {
    /// Load a corpus and report its size, labels and warnings.
    Validate(CorpusInput),
    /// Re-write a corpus in canonical form.
    Export(ExportArgs),
}

#[derive(Subcommand, Debug)]
pub enum LsaCmd {
    Fit(LsaFitArgs),
    Transform(LsaTransformArgs),
    /// Search the (features, dimensions) grid with LR and SVM heads.
    Grid(GridCommon),
}

#[derive(Subcommand, Debug)]
pub enum EmbeddingsCmd {
    /// Check an embedding file set and print its manifest and checksum.
    Validate(EmbeddingsValidateArgs),
}

#[derive(Subcommand, Debug)]
pub enum TrainCmd {
    Base(TrainBaseArgs),
    NnStack(TrainNnArgs),
    LinearStack(TrainLinearArgs),
}

#[derive(Subcommand, Debug)]
pub enum EvalCmd {
    /// Train on the train part, score on dev.
    Tdt(EvalArgs),
    /// Stratified k-fold cross-validation.
    Cv(CvArgs),
    /// Grid search with results ranked by mean score.
    Grid(GridArgs),
}

#[derive(Subcommand, Debug)]
pub enum ExplainCmd {
    /// Rank words by their within-class variance.
    Variance(VarianceArgs),
}

#[derive(Subcommand, Debug)]
pub enum RenderCmd {
    /// Confusion-matrix heatmap from a predictions TSV and a labeled corpus.
    Confusion(ConfusionArgs),
}

#[derive(Subcommand, Debug)]
pub enum StackCmd {
    TrainNn(TrainNnArgs),
    TrainLinear(TrainLinearArgs),
    Predict(PredictArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CorpusInput {
    /// Corpus files; several are concatenated in the given order.
    #[arg(long, required = true, num_args = 1..)]
    pub corpus: Vec<PathBuf>,
    /// Corpus format; by default `.csv` files are csv and everything else tsv.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SideInputs {
    /// Embedding files (any of the three files of a set, or their prefix).
    #[arg(long, num_args = 1..)]
    pub embeddings: Vec<PathBuf>,
    /// External prediction files in the embedding format (one or two columns).
    #[arg(long, num_args = 1..)]
    pub predictions: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long)]
    pub out: PathBuf,
    /// Output format; by default taken from the output extension.
    #[arg(long, value_enum)]
    pub to: Option<FormatArg>,
}

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub no_lowercase: bool,
    #[arg(long)]
    pub no_strip_hashtags: bool,
    #[arg(long, value_enum, default_value_t = HashtagArg::DropToken)]
    pub hashtag_mode: HashtagArg,
    #[arg(long)]
    pub no_strip_punctuation: bool,
    #[arg(long)]
    pub no_remove_stopwords: bool,
}

#[derive(Args, Debug)]
pub struct FeaturizeArgs {
    /// The 16 hand-crafted features (the only featurizer exposed here).
    #[arg(long, required = true)]
    pub handcrafted: bool,
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LsaFitArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    /// Output prefix; `.json` and `.bin` are appended.
    #[arg(long)]
    pub out: PathBuf,
    /// Total n-gram features, split evenly between words and characters.
    #[arg(long, default_value_t = 2500)]
    pub features: usize,
    /// Target dimension.
    #[arg(long, default_value_t = 512)]
    pub dim: usize,
}

#[derive(Args, Debug)]
pub struct LsaTransformArgs {
    /// Prefix of a fitted LSA model.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EmbeddingsValidateArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub embeddings: Vec<PathBuf>,
    /// Also check that every id of this corpus has a vector.
    #[arg(long, num_args = 1..)]
    pub corpus: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Args, Debug)]
pub struct TrainBaseArgs {
    /// Catalog preset (lsa-lr, handcrafted-svm, distilbert-lr, roberta-lr, xlm-svm).
    #[arg(long)]
    pub preset: String,
    #[command(flatten)]
    pub input: CorpusInput,
    #[command(flatten)]
    pub side: SideInputs,
    /// Model directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct NnArgs {
    #[arg(long = "preset", value_enum, default_value_t = NnPreset::Paper)]
    pub nn_preset: NnPreset,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Drop probability after each hidden layer.
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long, value_enum)]
    pub head: Option<HeadArg>,
    #[arg(long, value_enum)]
    pub normalizer: Option<NormalizerArg>,
    /// LSA n-gram features of the stacking input.
    #[arg(long)]
    pub lsa_features: Option<usize>,
    /// LSA dimension of the stacking input.
    #[arg(long)]
    pub lsa_dim: Option<usize>,
    /// Resize the first layer to the width of the inputs at hand.
    #[arg(long)]
    pub adapt_input: bool,
}

#[derive(Args, Debug)]
pub struct TrainNnArgs {
    #[command(flatten)]
    pub nn: NnArgs,
    #[command(flatten)]
    pub input: CorpusInput,
    #[command(flatten)]
    pub side: SideInputs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct LinearArgs {
    /// Base presets whose outputs are stacked; every `--predictions` file adds a column.
    #[arg(long, num_args = 1.., default_values_t = BASE_PRESETS.map(String::from))]
    pub bases: Vec<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Labels)]
    pub mode: ModeArg,
    /// Folds for the out-of-fold base outputs the stacker learns from.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Train the stacker on in-sample base outputs instead.
    #[arg(long)]
    pub in_fold: bool,
}

#[derive(Args, Debug)]
pub struct TrainLinearArgs {
    #[command(flatten)]
    pub linear: LinearArgs,
    #[command(flatten)]
    pub input: CorpusInput,
    #[command(flatten)]
    pub side: SideInputs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Saved model directory.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: CorpusInput,
    #[command(flatten)]
    pub side: SideInputs,
    /// Predictions TSV (id, label).
    #[arg(long)]
    pub out: PathBuf,
    /// With a labeled corpus, also render the confusion matrix here.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AveragingArg::Weighted)]
    pub averaging: AveragingArg,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// A base preset, `nn-stack` or `linear-stack`.
    #[arg(long)]
    pub model: String,
    #[command(flatten)]
    pub input: CorpusInput,
    #[command(flatten)]
    pub side: SideInputs,
    #[arg(long, value_enum, default_value_t = AveragingArg::Weighted)]
    pub averaging: AveragingArg,
    #[command(flatten)]
    pub nn: NnArgs,
    #[command(flatten)]
    pub linear: LinearArgs,
    /// Confusion matrix of all evaluated predictions (SVG).
    #[arg(long)]
    pub confusion: Option<PathBuf>,
    /// Score report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CvArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
}

#[derive(Args, Debug)]
pub struct GridCommon {
    #[command(flatten)]
    pub input: CorpusInput,
    #[command(flatten)]
    pub side: SideInputs,
    #[arg(long, value_enum, default_value_t = ProtocolArg::Cv)]
    pub protocol: ProtocolArg,
    /// Folds under the cv protocol.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = AveragingArg::Weighted)]
    pub averaging: AveragingArg,
    /// Classifier heads of the LSA grid.
    #[arg(long, value_enum, num_args = 1.., default_values_t = [ClassifierArg::Lr, ClassifierArg::Svm])]
    pub classifiers: Vec<ClassifierArg>,
    #[command(flatten)]
    pub nn: NnArgs,
    /// Evaluate only the first N configs of the grid.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Result table (JSON); defaults to `<out-dir>/<grid>-grid.json`.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long, value_enum)]
    pub grid: GridKind,
    #[command(flatten)]
    pub common: GridCommon,
}

#[derive(Args, Debug)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    #[arg(long, value_enum, default_value_t = VarianceArg::Tfidf)]
    pub weights: VarianceArg,
    #[arg(long, default_value_t = 10_000)]
    pub vocab_size: usize,
    /// Ranking as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConfusionArgs {
    /// Predictions TSV with `id` and `label` columns.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Labeled corpus holding the true labels.
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "Confusion matrix")]
    pub title: String,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatArg {
    Tsv,
    Csv,
}

impl From<FormatArg> for CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Tsv => CorpusFormat::Tsv,
            FormatArg::Csv => CorpusFormat::Csv,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashtagArg {
    DropToken,
    DropSymbol,
}

impl From<HashtagArg> for HashtagMode {
    fn from(h: HashtagArg) -> Self {
        match h {
            HashtagArg::DropToken => HashtagMode::DropToken,
            HashtagArg::DropSymbol => HashtagMode::DropSymbol,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum NnPreset {
    /// 2576-896-640-512-216-2 SELU network, lr 0.001, dropout 0.7, batch 32, 100 epochs.
    Paper,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadArg {
    Sigmoid,
    Softmax,
}

impl From<HeadArg> for OutputHead {
    fn from(h: HeadArg) -> Self {
        match h {
            HeadArg::Sigmoid => OutputHead::Sigmoid,
            HeadArg::Softmax => OutputHead::Softmax,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizerArg {
    Standardize,
    L2,
}

impl From<NormalizerArg> for NormalizerKind {
    fn from(n: NormalizerArg) -> Self {
        match n {
            NormalizerArg::Standardize => NormalizerKind::Standardize,
            NormalizerArg::L2 => NormalizerKind::L2PerSample,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    /// Stack predicted labels.
    Labels,
    /// Stack decision-function values.
    Decision,
}

impl From<ModeArg> for StackMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Labels => StackMode::Labels,
            ModeArg::Decision => StackMode::Decision,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AveragingArg {
    Weighted,
    Macro,
    /// F1 of the real class.
    Binary,
}

impl From<AveragingArg> for Averaging {
    fn from(a: AveragingArg) -> Self {
        match a {
            AveragingArg::Weighted => Averaging::Weighted,
            AveragingArg::Macro => Averaging::Macro,
            AveragingArg::Binary => Averaging::BinaryReal,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolArg {
    Tdt,
    Cv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierArg {
    Lr,
    Svm,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// 35 (features, dimensions) pairs times the classifier heads.
    Lsa,
    /// 360 learning-rate, dropout, batch-size and epoch combinations of the stacking network.
    Mlp,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceArg {
    Tfidf,
    Counts,
}

impl From<VarianceArg> for VarianceInput {
    fn from(v: VarianceArg) -> Self {
        match v {
            VarianceArg::Tfidf => VarianceInput::Tfidf,
            VarianceArg::Counts => VarianceInput::Counts,
        }
    }
}
