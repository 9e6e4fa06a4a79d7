use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spectral_core::dataset::Positive;
use spectral_core::features::FeatureConfig;
use spectral_core::head::{CellKind, LossReduction, TrainConfig};
use spectral_core::optim::AdamConfig;
use spectral_core::stream::WindowConfig;
use spectral_core::synth::SequenceSpec;

#[derive(Debug, Parser)]
#[command(
    name = "spectral",
    version,
    about = "Random-matrix spectral diagnostics for activation streams"
)]
#[command(
    after_help = "Any subcommand accepts --config FILE with flat key=value lines \
(keys are flag names); flags given on the command line win."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one synthetic activation container (or frame stream).
    GenSynth(GenSynthArgs),
    /// Write a balanced directory of structured and noise containers.
    GenDataset(GenDatasetArgs),
    /// Descriptor series of a container as NDJSON.
    Analyze(AnalyzeArgs),
    /// Fit the noise bulk of a whole container and report its edge.
    FitMp(FitMpArgs),
    /// Regenerate the Tracy-Widom CDF table by simulation.
    TwTable(TwTableArgs),
    /// Print the descriptor slot registry.
    Schema,
    /// Train a recurrent head on labelled sequences.
    TrainHead(TrainHeadArgs),
    /// Score containers with a trained head.
    Score(ScoreArgs),
    /// Score a live frame stream and emit alarms.
    Monitor(MonitorArgs),
    /// Run the progressive compression schedule.
    Compress(CompressArgs),
    /// Compression outcome across MP-initialisation quantiles.
    SweepQuantile(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Noise,
    Structured,
    /// Stationary spiked covariance (rows are samples).
    Spiked,
}

#[derive(Debug, Clone, Args)]
pub struct SequenceArgs {
    /// Time steps T.
    #[arg(long, default_value_t = 64)]
    pub steps: usize,
    /// Row width D.
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    /// Noise variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Structured sequences plant between 1 and this many spikes.
    #[arg(long, default_value_t = 3)]
    pub max_spikes: usize,
    /// Smallest initial spike strength of structured sequences.
    #[arg(long, default_value_t = 4.0)]
    pub theta_min: f64,
    /// Largest initial spike strength of structured sequences.
    #[arg(long, default_value_t = 12.0)]
    pub theta_max: f64,
}

impl SequenceArgs {
    pub fn spec(&self) -> SequenceSpec {
        SequenceSpec {
            steps: self.steps,
            width: self.width,
            sigma2: self.sigma2,
            max_spikes: self.max_spikes,
            theta_range: (self.theta_min, self.theta_max),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::Noise)]
    pub kind: SynthKind,
    #[command(flatten)]
    pub sequence: SequenceArgs,
    /// Spike strengths for `--kind spiked`, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write length-prefixed frames instead of a container.
    #[arg(long)]
    pub frames: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenDatasetArgs {
    /// Number of sequences; even indices are structured.
    #[arg(long, default_value_t = 400)]
    pub count: usize,
    #[command(flatten)]
    pub sequence: SequenceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct WindowArgs {
    /// Sliding-window length N.
    #[arg(long, default_value_t = 32)]
    pub window: usize,
    /// Emit a descriptor every this many steps.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Histogram bins of the noise fit and KL slot.
    #[arg(long, default_value_t = 64)]
    pub fit_bins: usize,
    /// Quantile initialising the noise-variance fit.
    #[arg(long, default_value_t = 0.5)]
    pub sigma2_quantile: f64,
    /// Subtract window column means before the covariance.
    #[arg(long)]
    pub center: bool,
}

impl WindowArgs {
    pub fn config(&self) -> WindowConfig {
        WindowConfig {
            capacity: self.window,
            stride: self.stride,
            features: FeatureConfig {
                fit_bins: self.fit_bins,
                sigma2_quantile: self.sigma2_quantile,
                center: self.center,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Container path, or `-` for stdin.
    #[arg(long)]
    pub input: PathBuf,
    /// Read a frame stream instead of a container.
    #[arg(long)]
    pub frames: bool,
    #[command(flatten)]
    pub window: WindowArgs,
    /// NDJSON destination, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitMpArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Quantile initialising the fit.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    #[arg(long)]
    pub center: bool,
}

#[derive(Debug, Args)]
pub struct TwTableArgs {
    #[arg(long, default_value_t = 200_000)]
    pub draws: usize,
    /// Samples per simulated matrix.
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    /// Features per simulated matrix.
    #[arg(long, default_value_t = 400)]
    pub d: usize,
    #[arg(long, default_value_t = 1_997_873_190)]
    pub seed: u64,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PositiveArg {
    Structured,
    Noise,
}

impl From<PositiveArg> for Positive {
    fn from(p: PositiveArg) -> Self {
        match p {
            PositiveArg::Structured => Positive::Structured,
            PositiveArg::Noise => Positive::Noise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    /// BCE on the last step.
    Final,
    /// BCE averaged over steps.
    Mean,
}

#[derive(Debug, Args)]
pub struct HeadArgs {
    /// Recurrent cell: vanilla (alias rnn), gru or lstm.
    #[arg(long, default_value = "gru")]
    pub cell: CellKind,
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 0.2)]
    pub validation_fraction: f64,
    #[arg(long, value_enum, default_value_t = LossArg::Final)]
    pub loss: LossArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl HeadArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            cell: self.cell,
            hidden: self.hidden,
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                weight_decay: self.weight_decay,
                ..AdamConfig::default()
            },
            seed: self.seed,
            validation_fraction: self.validation_fraction,
            reduction: match self.loss {
                LossArg::Final => LossReduction::FinalStep,
                LossArg::Mean => LossReduction::MeanOverSteps,
            },
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainHeadArgs {
    /// Directory of `.spac` containers; labels come from the header flag.
    #[arg(long, conflicts_with = "series", required_unless_present = "series")]
    pub data: Option<PathBuf>,
    /// NDJSON of pre-computed series: {"label": bool, "steps": [[22 floats]..]}.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Which container kind counts as the positive class.
    #[arg(long, value_enum, default_value_t = PositiveArg::Structured)]
    pub positive: PositiveArg,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub head: HeadArgs,
    /// Write the trained head here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-epoch metrics as NDJSON.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Trained head checkpoint.
    #[arg(long)]
    pub head: PathBuf,
    /// One container: per-window probabilities.
    #[arg(long, conflicts_with = "data", required_unless_present = "data")]
    pub input: Option<PathBuf>,
    /// Directory of containers: one final-step score each plus AUROC.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PositiveArg::Structured)]
    pub positive: PositiveArg,
    /// Gate threshold; alarm when probability exceeds it.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    #[arg(long)]
    pub head: PathBuf,
    /// Accept one TCP connection on this address and read frames from it.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub listen: Option<String>,
    /// Frame stream file, `-` for stdin.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Alarm NDJSON destination.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TaskArgs {
    #[arg(long, default_value_t = 32)]
    pub input_dim: usize,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    /// Spread of the class means.
    #[arg(long, default_value_t = 0.6)]
    pub mean_scale: f64,
    #[arg(long, default_value_t = 4000)]
    pub train_size: usize,
    #[arg(long, default_value_t = 1000)]
    pub validation_size: usize,
    #[arg(long, default_value_t = 2000)]
    pub test_size: usize,
    /// Hidden layer widths of the pretrained network.
    #[arg(long, value_delimiter = ',', default_value = "256,256,256")]
    pub hidden_widths: Vec<usize>,
    #[arg(long, default_value_t = 15)]
    pub pretrain_epochs: usize,
    /// Start from this network instead of pretraining one.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Save the starting network here.
    #[arg(long)]
    pub save_teacher: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Hidden layers to visit in order (default: all, shallow to deep).
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    /// Share of training data used for calibration activations.
    #[arg(long, default_value_t = 0.1)]
    pub calibration_fraction: f64,
    /// Weight of the hard-label term in the distillation loss.
    #[arg(long, default_value_t = 0.7)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    /// Stop when outliers make up less than this share of a layer.
    #[arg(long, default_value_t = 0.02)]
    pub rho_min: f64,
    /// Largest tolerated per-stage validation accuracy drop (fraction).
    #[arg(long, default_value_t = 0.02)]
    pub epsilon_acc: f64,
    /// Share of the starting accuracy each stage must recover.
    #[arg(long, default_value_t = 0.9)]
    pub stability_fraction: f64,
    #[arg(long, default_value_t = 4)]
    pub max_recovery_rounds: usize,
    #[arg(long, default_value_t = 64)]
    pub fit_bins: usize,
    #[arg(long, default_value_t = 5)]
    pub finetune_epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Quantile initialising each layer's noise fit.
    #[arg(long, default_value_t = 0.45)]
    pub tau: f64,
    /// Stop once parameters fall to this count; `current` means the
    /// starting count. Default: none.
    #[arg(long)]
    pub param_target: Option<String>,
    /// Stage and summary NDJSON destination.
    #[arg(long, default_value = "-")]
    pub report: PathBuf,
    /// Write the compressed network here.
    #[arg(long)]
    pub out_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.45,0.7,0.9")]
    pub taus: Vec<f64>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}
