use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scatlip::bounds::{McConfig, Method};
use scatlip::signal::Interpolation;

#[derive(Debug, Parser)]
#[command(name = "scatlip", version, about = "Lipschitz bounds for scattering-type feature extractors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one or more estimators on a network and write a JSON report per method.
    Compute(ComputeArgs),
    /// Rebuild a reference example and compare against the published numbers.
    Reproduce(ReproduceArgs),
    /// Measure feature drift under shrinking deformations.
    ProbeDeformation(ProbeArgs),
    /// Print a builtin network in the JSON network format.
    ExportBuiltin(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Example {
    Haar,
    Bump,
}

impl Example {
    pub fn name(self) -> &'static str {
        match self {
            Example::Haar => "haar",
            Example::Bump => "bump",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Bessel,
    Backprop,
    Montecarlo,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Bessel => Method::BesselProduct,
            MethodArg::Backprop => Method::BackpropL1,
            MethodArg::Montecarlo => Method::MonteCarloLower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterpArg {
    Sinc,
    Linear,
    Hold,
}

impl From<InterpArg> for Interpolation {
    fn from(m: InterpArg) -> Interpolation {
        match m {
            InterpArg::Sinc => Interpolation::Sinc,
            InterpArg::Linear => Interpolation::Linear,
            InterpArg::Hold => Interpolation::Hold,
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Network description file (JSON).
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Builtin network: haar or bump.
    #[arg(long)]
    pub builtin: Option<String>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Monte-Carlo iterations [default: 100000, or the example's own count]
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Spacing of the random coarse samples.
    #[arg(long, default_value_t = 1.0)]
    pub coarse_step: f64,
    /// Coarse samples are uniform on [-amplitude, amplitude].
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, value_enum, default_value_t = InterpArg::Sinc)]
    pub upsample: InterpArg,
}

impl McArgs {
    pub fn config(&self, default_iterations: u64) -> McConfig {
        McConfig {
            iterations: self.iterations.unwrap_or(default_iterations),
            seed: self.seed,
            coarse_step: self.coarse_step,
            amplitude: self.amplitude,
            upsample: self.upsample.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "bessel,backprop,montecarlo")]
    pub methods: Vec<MethodArg>,
    #[command(flatten)]
    pub mc: McArgs,
    /// Frequency oversampling for the Bessel bounds.
    #[arg(long, default_value_t = 4)]
    pub refine: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Add wall time to the manifest (breaks byte-identical reports).
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub example: Example,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long, default_value_t = 4)]
    pub refine: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub record_timing: bool,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub source: Source,
    /// gaussian[:sigma] or box (the indicator of [0, 8)).
    #[arg(long, default_value = "gaussian:2")]
    pub signal: String,
    /// Declared band limit R of the signal.
    #[arg(long, default_value_t = 0.5)]
    pub band_limit: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025")]
    pub scales: Vec<f64>,
    #[arg(long, value_enum, default_value_t = InterpArg::Sinc)]
    pub interpolation: InterpArg,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(value_enum)]
    pub example: Example,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
