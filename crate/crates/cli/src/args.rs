use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "meanfield",
    version,
    about = "Axisymmetric solutions of Δu = λ(1 - e^u) on S² by radial shooting"
)]
pub struct Cli {
    /// Optional `key = value` file; flags given on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample β(s) on a uniform grid.
    Beta(BetaArgs),
    /// Certified roots of β(s) = 2λ.
    Roots(RootsArgs),
    /// Root branches over a λ-grid.
    Bifurcation(BifurcationArgs),
    /// Reconstruct the sphere solution at a root and run the identity checks.
    Validate(ValidateArgs),
    /// Compare shooting with spectral collocation, or print the spectrum.
    Crosscheck(CrosscheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Default, Args)]
pub struct ShootingFlags {
    #[arg(long)]
    pub r_start: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Width of the tail fit, in decades of r.
    #[arg(long)]
    pub slope_window: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct ScanFlags {
    #[arg(long)]
    pub s_min: Option<f64>,
    #[arg(long)]
    pub s_max: Option<f64>,
    #[arg(long)]
    pub ds: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct OutputFlags {
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BetaArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub scan: ScanFlags,
    #[command(flatten)]
    pub shooting: ShootingFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct RootsArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Reuse a profile written by `beta` (`-` for standard input) instead
    /// of sampling one.
    #[arg(long, value_name = "PATH")]
    pub profile: Option<PathBuf>,
    #[command(flatten)]
    pub scan: ScanFlags,
    #[command(flatten)]
    pub shooting: ShootingFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BifurcationArgs {
    /// Exclusive lower end of the λ range.
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub d_lambda: Option<f64>,
    /// Also write an SVG scatter of (λ, s_root) here.
    #[arg(long, value_name = "PATH")]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub scan: ScanFlags,
    #[command(flatten)]
    pub shooting: ShootingFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ValidateArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub s_root: Option<f64>,
    #[arg(long)]
    pub n_theta: Option<usize>,
    #[command(flatten)]
    pub shooting: ShootingFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CrosscheckArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, conflicts_with = "zero_guess")]
    pub s_root: Option<f64>,
    /// Start Newton from u ≡ 0 instead of a shooting solution.
    #[arg(long)]
    pub zero_guess: bool,
    /// Print the first N eigenvalues of the axisymmetric Laplacian instead.
    #[arg(long, value_name = "N")]
    pub spectrum: Option<usize>,
    #[arg(long)]
    pub n_theta: Option<usize>,
    #[command(flatten)]
    pub shooting: ShootingFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}
