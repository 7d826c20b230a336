use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ringtherm", version, about = "Disorder-ensemble simulations of ring photonic lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an ensemble of disordered rings and write one record per realization.
    Simulate(SimulateArgs),
    /// Compute g², localization level, amplitude laws and histograms from records.
    Stats(StatsArgs),
    /// Evaluate the g²/λ phase map over a grid of ring sizes and disorder levels.
    Sweep(SweepArgs),
    /// Derive the localization bound separating gap and no-gap regions.
    Bound(BoundArgs),
    /// Compare odd/even g² bands as a function of ensemble size.
    SizeStudy(SizeStudyArgs),
    /// Convert couplings into waveguide coordinates on a circle.
    Layout(LayoutArgs),
    /// Extract per-site intensities from PGM facet images.
    Ingest(IngestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedArg {
    Fixed(u64),
    Auto,
}

impl FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(SeedArg::Auto);
        }
        s.parse().map(SeedArg::Fixed).map_err(|_| format!("expected an unsigned integer or `auto`, got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Master seed for all randomness; `auto` draws a fresh one and reports it.
    #[arg(long)]
    pub seed: Option<SeedArg>,
    /// Output file, written atomically. Defaults to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// TOML configuration file. Flags override file values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    /// Disorder strength η.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Mean coupling c̄ in mm⁻¹.
    #[arg(long)]
    pub c_mean: Option<f64>,
    /// Normalized propagation distance z·c̄.
    #[arg(long = "z")]
    pub z_normalized: Option<f64>,
    /// Index of the excited waveguide.
    #[arg(long)]
    pub excited_site: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of sites on the ring.
    #[arg(long)]
    pub sites: Option<usize>,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Realizations to simulate. Defaults to 120, or 200 for rings of 11 sites or more.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Record file: JSON lines from `simulate` or CSV from `simulate`/`ingest`.
    pub input: PathBuf,
    /// Records drawn per bootstrap resample. Defaults to the record count.
    #[arg(long)]
    pub resample_size: Option<usize>,
    /// Bootstrap repeats.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Histogram bins.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Excited site for CSV inputs that do not carry one.
    #[arg(long)]
    pub excited_site: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub min_sites: Option<usize>,
    #[arg(long)]
    pub max_sites: Option<usize>,
    /// Disorder levels run from this step up to `--eta-max` in equal steps.
    #[arg(long)]
    pub eta_step: Option<f64>,
    #[arg(long)]
    pub eta_max: Option<f64>,
    #[arg(long)]
    pub c_mean: Option<f64>,
    #[arg(long = "z")]
    pub z_normalized: Option<f64>,
    /// Realizations per cell.
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    /// Bootstrap repeats per cell.
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub excited_site: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Phase-map CSV from `sweep` for the g² gap. Computed from the grid if absent.
    #[arg(long)]
    pub gap: Option<PathBuf>,
    /// Phase-map CSV for the localization level. Defaults to the gap map.
    #[arg(long)]
    pub loc: Option<PathBuf>,
    /// Largest |g²(even) − g²(odd)| counted as a closed gap.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct SizeStudyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub odd_sites: Option<usize>,
    #[arg(long)]
    pub even_sites: Option<usize>,
    /// Comma-separated ensemble sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Independent ensembles per size.
    #[arg(long)]
    pub repeats: Option<usize>,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated couplings in mm⁻¹. Sampled from the disorder law if absent.
    #[arg(long, value_delimiter = ',')]
    pub couplings: Option<Vec<f64>>,
    /// Ring size when sampling couplings.
    #[arg(long)]
    pub sites: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub c_mean: Option<f64>,
    /// Reference separation in µm.
    #[arg(long)]
    pub d_ref: Option<f64>,
    /// Coupling at the reference separation in mm⁻¹.
    #[arg(long)]
    pub c_ref: Option<f64>,
    /// Decay length of the coupling law in µm.
    #[arg(long)]
    pub decay_length: Option<f64>,
    #[arg(long)]
    pub wavelength: Option<f64>,
    #[arg(long)]
    pub waveguide_length: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// PGM images, one output row each.
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    /// CSV of spot centres with columns x, y, radius_1e.
    #[arg(long)]
    pub spots: Option<PathBuf>,
    /// Background model: `annulus`, `none`, or a constant level.
    #[arg(long)]
    pub background: Option<String>,
}
