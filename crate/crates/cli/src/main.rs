//! Batch harness for the sketching experiments. Every subcommand is fully
//! seeded and writes CSV with its resolved configuration in the header, so
//! any output can be regenerated from the file alone.

mod commands;
mod csvout;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use covsketch::transforms::SketchKind;
use covsketch::tsqr::Scheme;

#[derive(Parser)]
#[command(name = "covsketch", version, about = "Randomized low-rank covariance benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalue decay of kernel Gram matrices across a parameter sweep.
    Decay(DecayArgs),
    /// Condition numbers of best rank-m truncations across the sweep.
    Cond(CondArgs),
    /// Monte-Carlo projection errors of randomized sketches vs the
    /// tail-spectrum bound.
    SketchError(SketchErrorArgs),
    /// Wall-time and parallel efficiency of the sketch + TSQR pipeline.
    Speedup(SpeedupArgs),
    /// Gaussian log-likelihood through the low-rank surrogate, with a dense
    /// oracle at small n.
    Loglik(LoglikArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Sqexp,
    Matern,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SketchArg {
    Gaussian,
    Wht,
    Dct,
    Dht,
}

impl SketchArg {
    pub fn kind(self) -> SketchKind {
        match self {
            SketchArg::Gaussian => SketchKind::Gaussian,
            SketchArg::Wht => SketchKind::Wht,
            SketchArg::Dct => SketchKind::Dct,
            SketchArg::Dht => SketchKind::Dht,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Tree,
    Seq,
}

impl SchemeArg {
    pub fn scheme(self, chains: usize) -> Scheme {
        match self {
            SchemeArg::Tree => Scheme::Tree,
            SchemeArg::Seq => Scheme::Sequential { chains },
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixArg {
    /// Synthetic PSD matrix with planted exponential spectrum.
    Synthetic,
    /// Kernel Gram matrix on an equispaced grid over [0, 1].
    Kernel,
}

#[derive(clap::Args)]
pub struct DecayArgs {
    /// Kernel family driving the sweep (sqexp sweeps theta2, matern sweeps nu).
    #[arg(long, value_enum, default_value = "sqexp")]
    pub kernel: KernelArg,
    /// Grid size.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub theta1: f64,
    /// Fixed theta2 for the Matern sweep.
    #[arg(long, default_value_t = 1.0)]
    pub theta2: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct CondArgs {
    #[arg(long, value_enum, default_value = "sqexp")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub theta1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta2: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct SketchErrorArgs {
    #[arg(long, value_enum, default_value = "synthetic")]
    pub matrix: MatrixArg,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Sketch dimension.
    #[arg(long, default_value_t = 40)]
    pub r: usize,
    /// Planted spectrum scale (synthetic matrix).
    #[arg(long, default_value_t = 1.0)]
    pub lambda1: f64,
    /// Planted spectrum decay rate (synthetic matrix).
    #[arg(long, default_value_t = 0.05)]
    pub lambda2: f64,
    #[arg(long, value_enum, default_value = "sqexp")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    pub theta1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta2: f64,
    /// Matern smoothness (kernel matrix only).
    #[arg(long, default_value_t = 1.5)]
    pub nu: f64,
    /// Sketch kind; omit to sweep every applicable kind.
    #[arg(long, value_enum)]
    pub sketch: Option<SketchArg>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Row blocks for TSQR; defaults to floor(n / 2r) + 1.
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long, value_enum, default_value = "tree")]
    pub scheme: SchemeArg,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the first trial's structured-sketch draws (signs and
    /// selected columns) as a reproducibility record.
    #[arg(long)]
    pub dump_sketch: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct SpeedupArgs {
    /// Matrix sizes (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "32768")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 64)]
    pub r: usize,
    /// Row blocks for TSQR; defaults to floor(n / 2r) + 1 per size.
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long, value_enum, default_value = "tree")]
    pub scheme: SchemeArg,
    #[arg(long, value_enum, default_value = "wht")]
    pub sketch: SketchArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker counts to sweep (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub workers: Vec<usize>,
    /// Timing repeats per cell (median is reported).
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 1.0)]
    pub theta1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta2: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct LoglikArgs {
    #[arg(long, value_enum, default_value = "synthetic")]
    pub matrix: MatrixArg,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Surrogate rank.
    #[arg(long, default_value_t = 40)]
    pub r: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 0.25)]
    pub lambda2: f64,
    #[arg(long, value_enum, default_value = "sqexp")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    pub theta1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta2: f64,
    #[arg(long, default_value_t = 1.5)]
    pub nu: f64,
    /// Noise variance added to the surrogate covariance.
    #[arg(long, default_value_t = 1.0)]
    pub nugget: f64,
    #[arg(long, value_enum, default_value = "dct")]
    pub sketch: SketchArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long, value_enum, default_value = "tree")]
    pub scheme: SchemeArg,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Observation vector, one value per line; omitted = seeded N(0,1) draw.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Decay(args) => commands::cmd_decay(&args).map(|doc| (doc, args.out)),
        Cmd::Cond(args) => commands::cmd_cond(&args).map(|doc| (doc, args.out)),
        Cmd::SketchError(args) => {
            commands::cmd_sketch_error(&args).map(|doc| (doc, args.out.clone()))
        }
        Cmd::Speedup(args) => commands::cmd_speedup(&args).map(|doc| (doc, args.out.clone())),
        Cmd::Loglik(args) => commands::cmd_loglik(&args).map(|doc| (doc, args.out.clone())),
    };
    match result {
        Ok((doc, out)) => {
            if let Err(e) = doc.write(out.as_deref()) {
                eprintln!("error: failed to write output: {e}");
                std::process::exit(1);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
