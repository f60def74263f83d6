use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcsmri::container::DType;
use pcsmri::{MaskKind, Organ, PhantomKind};

#[derive(Debug, Parser)]
#[command(
    name = "pcsmri",
    version,
    about = "Parallel compressed-sensing MRI simulation and reconstruction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic ground-truth image.
    Phantom(PhantomArgs),
    /// Write a 1D Cartesian sampling mask.
    Mask(MaskArgs),
    /// Simulate coil sensitivities, or estimate them from k-space.
    Sense(SenseArgs),
    /// Write a complete simulated case directory.
    Simulate(SimulateArgs),
    /// Reconstruct a case.
    Recon(ReconArgs),
    /// Compute PSNR, SSIM, RMSE and NMSE.
    Eval(EvalArgs),
    /// Reconstruct and evaluate a case over a parameter grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Grid2d {
    /// Square grid size.
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
}

impl Grid2d {
    pub fn dims(&self) -> (usize, usize) {
        (self.height.unwrap_or(self.size), self.width.unwrap_or(self.size))
    }
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long, default_value = "shepp_logan")]
    pub kind: PhantomKind,
    #[command(flatten)]
    pub grid: Grid2d,
    /// Add a smooth random phase to the object.
    #[arg(long)]
    pub phase_ramp: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "cf32")]
    pub dtype: DType,
    /// Output stem; `.bin` and `.hdr` are appended.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[arg(long)]
    pub width: usize,
    /// Rows of the grid (defaults to the width).
    #[arg(long)]
    pub height: Option<usize>,
    /// Acceleration factor.
    #[arg(long = "r")]
    pub acceleration: f64,
    #[arg(long, default_value_t = 24)]
    pub acs: usize,
    #[arg(long, default_value = "random")]
    pub kind: MaskKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed first column for equispaced masks instead of a seeded draw.
    #[arg(long)]
    pub offset: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SenseArgs {
    /// Estimate from this k-space stem instead of simulating.
    #[arg(long, requires = "mask")]
    pub kspace: Option<PathBuf>,
    /// Mask stem matching `--kspace`.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Calibration block size (defaults to the mask's ACS width).
    #[arg(long)]
    pub acs: Option<usize>,
    /// Skip the Hann taper on the calibration block.
    #[arg(long)]
    pub no_apodize: bool,
    #[arg(long, default_value_t = 4)]
    pub coils: usize,
    #[command(flatten)]
    pub grid: Grid2d,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "cf32")]
    pub dtype: DType,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Acquisition protocol and phantom for an organ.
    #[arg(long)]
    pub preset: Option<Organ>,
    #[arg(long)]
    pub phantom: Option<PhantomKind>,
    #[command(flatten)]
    pub grid: Grid2d,
    #[arg(long, default_value_t = 4)]
    pub coils: usize,
    /// Acceleration factor (overrides the preset).
    #[arg(long = "r")]
    pub acceleration: Option<f64>,
    #[arg(long)]
    pub acs: Option<usize>,
    #[arg(long)]
    pub kind: Option<MaskKind>,
    /// Noise standard deviation per real component.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub phase_ramp: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Case name recorded in the manifest (defaults to the directory name).
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value = "cf32")]
    pub dtype: DType,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconArgs {
    pub case_dir: PathBuf,
    /// Config file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the config's prior.
    #[arg(long)]
    pub prior: Option<String>,
    /// External denoiser command line (implies `--prior external`).
    #[arg(long)]
    pub cmd: Option<String>,
    /// Estimate sensitivities from the calibration block.
    #[arg(long)]
    pub estimate_sens: bool,
    #[arg(long)]
    pub acs: Option<usize>,
    #[arg(long)]
    pub no_apodize: bool,
    /// Write x and z after every iteration.
    #[arg(long)]
    pub snapshots: bool,
    /// Output directory name under `<case>/recon/` (defaults to the prior).
    #[arg(long)]
    pub name: Option<String>,
    /// Output directory (overrides `--name`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "cf32")]
    pub dtype: DType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Case directories: rows for the zero-filled image and every
    /// reconstruction under `recon/`.
    #[arg(long, num_args = 1.., conflicts_with_all = ["recon", "gt"])]
    pub batch: Vec<PathBuf>,
    /// Reconstruction stem.
    #[arg(long, requires = "gt")]
    pub recon: Option<PathBuf>,
    /// Ground-truth stem.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Sensitivity stem whose support restricts the metrics.
    #[arg(long)]
    pub support: Option<PathBuf>,
    #[arg(long, default_value = "case")]
    pub case: String,
    #[arg(long, default_value = "recon")]
    pub method: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub case_dir: PathBuf,
    /// Grid file: `key = v1, v2, ...` lines.
    #[arg(long)]
    pub grid: PathBuf,
    /// Base config the grid overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Concurrent runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory (defaults to `<case>/sweep`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "cf32")]
    pub dtype: DType,
}
