use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pslap", version, about = "Persistent Laplacian spectra of alpha-complex filtrations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep persistent Laplacian spectra over a range of scales.
    Spectra(SpectraArgs),
    /// Cross-check spectral Betti numbers against barcode and exact-rank oracles.
    Validate(ValidateArgs),
    /// Report vertex pairs joined at unusually small scales.
    Anomaly(AnomalyArgs),
    /// Per-vertex normalized diagonal of the accumulated 0-Laplacian.
    Accumulate(AccumulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Xyz,
    Pdb,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Point cloud file.
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; inferred from the extension when omitted (.pdb and .ent are PDB).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Keep only this chain (PDB input).
    #[arg(long)]
    pub chain: Option<char>,
    /// Seed for the symbolic perturbation of degenerate point sets.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the spectral sweep.
    #[arg(long, env = "PSLAP_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 1.5f64.sqrt())]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 10f64.sqrt())]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Use the critical values of the filtration instead of the uniform grid.
    #[arg(long)]
    pub critical: bool,
    /// Explicit scales; replace the uniform grid, or add to the critical values.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SpectraArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Homology orders.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub q: Vec<usize>,
    /// Persistence length.
    #[arg(long, default_value_t = 0.0)]
    pub p: f64,
    /// CSV output; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG curve plot; with several orders one file per order is written, suffixed `_q<order>`.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// JSON output with run metadata and full spectra.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Print every spectrum, rounded to 4 decimals, to standard output.
    #[arg(long)]
    pub show_spectra: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub q: Vec<usize>,
    /// Persistence lengths; defaults to 0, 1/3 and 2/3 of the filtration span.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    /// Print only disagreeing cells and the summary.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct AnomalyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Report pairs whose edge appears below half this distance.
    #[arg(long, default_value_t = 3.0)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct AccumulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// CSV output; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
