use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use speakerid_core::pipeline::{ModeChoice, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(
    name = "speakerid",
    version,
    about = "Audio-visual speaker identification on synthetic scenes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render audio frames, image frames and ground truth for a scene.
    Simulate(SimulateArgs),
    /// Compute a steered response power map and its peak.
    Localize(LocalizeArgs),
    /// Run a face cascade over a PGM image.
    Detect(DetectArgs),
    /// Detect and identify faces in a PGM image.
    Recognize(RecognizeArgs),
    /// Train a face model and write it as JSON.
    Train(TrainArgs),
    /// Track faces and fuse them with acoustic peaks from a JSON-lines file.
    Fuse(FuseArgs),
    /// Run the full pipeline on a scenario (built-in talking-sprite scene by default).
    Demo(ScenarioArgs),
    /// Emit one of the experiment tables.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Auto,
    Phat,
    Const,
}

impl From<ModeArg> for ModeChoice {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => ModeChoice::Auto,
            ModeArg::Phat => ModeChoice::Phat,
            ModeArg::Const => ModeChoice::Const,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Eigen,
    Fisher,
    Lbph,
}

/// Scenario flags; each one overrides the matching field of `--config`.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario config file (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scene description (JSON).
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Double-ring array parameters (JSON).
    #[arg(long)]
    pub array: Option<PathBuf>,
    /// Steering grid parameters (JSON).
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Cascade model (JSON); the built-in toy cascade otherwise.
    #[arg(long)]
    pub cascade: Option<PathBuf>,
    /// Face model (JSON); trained on synthetic faces otherwise.
    #[arg(long)]
    pub face_model: Option<PathBuf>,
    #[arg(long)]
    pub frames: Option<usize>,
    /// Seed for all randomness [default: 42].
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Eigenfaces kept by the default face model.
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    #[arg(long)]
    pub unknown_threshold: Option<f64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub array: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub frames: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 640)]
    pub width: usize,
    #[arg(long, default_value_t = 480)]
    pub height: usize,
}

#[derive(Debug, Clone, Args)]
pub struct LocalizeArgs {
    /// Multichannel `.f32` file with its `.json` sidecar.
    #[arg(long, conflicts_with = "scene", required_unless_present = "scene")]
    pub audio: Option<PathBuf>,
    /// Synthesize one frame of this scene instead of reading audio.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub array: Option<PathBuf>,
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Minimum peak power.
    #[arg(long, default_value_t = 0.0)]
    pub floor: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub cascade: Option<PathBuf>,
    #[arg(long, default_value_t = 1.1)]
    pub scale_factor: f64,
    #[arg(long, default_value_t = 2)]
    pub step: usize,
    #[arg(long, default_value_t = 3)]
    pub min_neighbors: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RecognizeArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub face_model: PathBuf,
    #[arg(long)]
    pub cascade: Option<PathBuf>,
    /// The image is already a canonical face; skip detection and alignment.
    #[arg(long)]
    pub aligned: bool,
    #[arg(long, default_value_t = 1)]
    pub knn_k: usize,
    #[arg(long)]
    pub unknown_threshold: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value = "eigen")]
    pub kind: ModelKind,
    /// Directory with one subdirectory of canonical PGM faces per identity;
    /// synthetic faces otherwise.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Identities of the synthetic set.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "alice,bob,carol,dave,erin"
    )]
    pub identities: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub per_class: usize,
    /// Eigenfaces kept, or Fisher directions (capped at C-1).
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FuseArgs {
    /// JSON lines of `{"frame", "acoustic": {"position", "power"}?, "face": {"label", "position"}?}`.
    #[arg(long)]
    pub input: PathBuf,
    /// Image width; colocation and proximity distances scale with it.
    #[arg(long, default_value_t = 640)]
    pub width: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    pub name: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Trials per SNR level.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 16)]
    pub components: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}
