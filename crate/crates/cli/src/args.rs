use std::path::PathBuf;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};
use eitsim::fits::ModelShape;
use eitsim::ModelVariant;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "eitsim",
    version,
    about = "Simulate and analyze EIT spectra and light storage in warm Rb vapor",
    after_help = "Set EITSIM_THREADS to bound the number of worker threads."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "subcommand")]
pub enum Command {
    /// Probe absorption spectrum at one coupling detuning
    Spectrum(SpectrumArgs),
    /// Spectra over a range of coupling detunings
    Series(SeriesArgs),
    /// Resonant EIT linewidth versus coupling intensity, with a linear fit
    LinewidthScan(LinewidthArgs),
    /// Closed-form broadening budget of a cell
    Broadening(BroadeningArgs),
    /// Light storage efficiency versus storage time, with an exponential fit
    Storage(StorageArgs),
    /// Fit a model shape to a two-column CSV
    Fit(FitArgs),
    /// Average I, I0 and B traces and convert them to optical depth
    Analyze(AnalyzeArgs),
    /// Replay a run from its manifest
    #[serde(skip)]
    Run(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Series(_) => "series",
            Command::LinewidthScan(_) => "linewidth-scan",
            Command::Broadening(_) => "broadening",
            Command::Storage(_) => "storage",
            Command::Fit(_) => "fit",
            Command::Analyze(_) => "analyze",
            Command::Run(_) => "run",
        }
    }

    pub fn out(&self) -> &PathBuf {
        match self {
            Command::Spectrum(a) => &a.out.out,
            Command::Series(a) => &a.out.out,
            Command::LinewidthScan(a) => &a.out.out,
            Command::Broadening(a) => &a.out.out,
            Command::Storage(a) => &a.out.out,
            Command::Fit(a) => &a.out.out,
            Command::Analyze(a) => &a.out.out,
            Command::Run(a) => &a.out.out,
        }
    }

    pub fn cell(&self) -> Option<&str> {
        match self {
            Command::Spectrum(a) => Some(&a.model.cell),
            Command::Series(a) => Some(&a.model.cell),
            Command::LinewidthScan(a) => Some(&a.model.cell),
            Command::Broadening(a) => Some(&a.cell),
            Command::Storage(a) => Some(&a.model.cell),
            _ => None,
        }
    }
}

fn model_parser() -> impl clap::builder::TypedValueParser<Value = ModelVariant> {
    PossibleValuesParser::new(["three-level", "four-level"]).map(|s| s.parse::<ModelVariant>().unwrap())
}

fn shape_parser() -> impl clap::builder::TypedValueParser<Value = ModelShape> {
    PossibleValuesParser::new(ModelShape::ALL.map(|s| s.name())).map(|s| s.parse::<ModelShape>().unwrap())
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutArgs {
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Atomic model
    #[arg(long, default_value = "four-level", value_parser = model_parser())]
    pub model: ModelVariant,
    /// Cell preset (ne-5torr, alkene, paraffin, reference) or path to a cell JSON document
    #[arg(long, default_value = "ne-5torr")]
    pub cell: String,
    /// Probe field amplitude, V/m
    #[arg(long, default_value_t = 3.0)]
    pub probe_field: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Coupling intensity, W/m²
    #[arg(long, default_value_t = 21.75)]
    pub coupling_intensity: f64,
    /// Coupling detuning, Hz
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub delta_c: f64,
    /// Probe detuning grid start:stop:n in Hz, relative to the coupling detuning
    #[arg(long, default_value = "-25e3:25e3:1001", allow_hyphen_values = true)]
    pub probe_grid: String,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SeriesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Coupling intensity, W/m²
    #[arg(long, default_value_t = 21.75)]
    pub coupling_intensity: f64,
    /// Coupling detunings start:stop:n, Hz
    #[arg(long, default_value = "-800e6:800e6:9", allow_hyphen_values = true)]
    pub delta_c: String,
    /// Probe detuning grid start:stop:n in Hz, relative to each coupling detuning
    #[arg(long, default_value = "-250e3:250e3:1001", allow_hyphen_values = true)]
    pub probe_grid: String,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LinewidthArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Coupling intensities start:stop:n, W/m²
    #[arg(long, default_value = "1.5:25:8")]
    pub intensities: String,
    /// Coupling detuning, Hz
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub delta_c: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BroadeningArgs {
    /// Cell preset (ne-5torr, alkene, paraffin, reference) or path to a cell JSON document
    #[arg(long, default_value = "ne-5torr")]
    pub cell: String,
    /// Angle between probe and coupling beams, rad
    #[arg(long, default_value_t = 0.0)]
    pub angle: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct StorageArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Coupling intensity, W/m²
    #[arg(long, default_value_t = 21.75)]
    pub coupling_intensity: f64,
    /// Coupling detuning, Hz
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub delta_c: f64,
    /// Storage times start:stop:n in s [default: 0 to three predicted lifetimes, 8 points]
    #[arg(long)]
    pub storage_times: Option<String>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Two-column CSV (x,y) with a header row
    #[arg(long)]
    pub input: PathBuf,
    /// Model shape
    #[arg(long, value_parser = shape_parser())]
    pub shape: ModelShape,
    /// Comma-separated initial parameters [default: estimated from the data]
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
    /// Bootstrap resamples for a second uncertainty estimate (0 disables)
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    /// Bootstrap seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// Trace files holding I, I0 and B records
    #[arg(long, required = true, num_args = 1..)]
    pub traces: Vec<PathBuf>,
    /// Also report the vapor OD estimate at this temperature, K
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Cell length for the OD estimate, m
    #[arg(long, default_value_t = 75e-3)]
    pub cell_length: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Manifest written by an earlier run
    #[arg(long)]
    pub from_manifest: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}
