//! `prodyadic`: seeded batch driver for weight audits, norm estimates and
//! depth sweeps.

mod commands;
mod report;

use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use prodyadic::measures::WeightSpec;
use prodyadic::operators::OperatorForm;

#[derive(Parser, Debug)]
#[command(
    name = "prodyadic",
    version,
    about = "Product dyadic weight and operator experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Root seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores). Never changes the output.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file; a `<out>.manifest.json` sidecar is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock seconds per depth (makes output run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Uniform,
    Power,
    Cascade,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Fractional,
    Random,
    Zero,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a weight file.
    GenWeight {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        dims: Vec<usize>,
        #[arg(long)]
        depth: u32,
        /// Cascade ratio bound, in (1, 4].
        #[arg(long, default_value_t = 2.0)]
        rho: f64,
        /// Power exponents, one per axis.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        exponents: Vec<f64>,
        /// Power singularity, one coordinate per axis.
        #[arg(long, value_delimiter = ',')]
        center: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Doubling, reverse doubling and condition (D) audit of a weight.
    CheckWeight {
        #[arg(long)]
        weight: String,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
        eps: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Fefferman-Phong constant of a kernel against weights.
    Fp {
        /// Weight file or inline JSON spec; repeat for several weights.
        #[arg(long, required = true)]
        weight: Vec<String>,
        #[arg(long, value_enum, default_value_t = KernelKind::Fractional)]
        kernel: KernelKind,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Mass exponent of the random kernel.
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        /// One exponent per weight, or a single `p` for the fractional
        /// pair `(p, q')`.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        depth: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Lower bound for the multilinear embedding constant.
    EmbedNorm {
        #[arg(long, required = true)]
        weight: Vec<String>,
        #[arg(long, value_enum, default_value_t = KernelKind::Random)]
        kernel: KernelKind,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Fractional integral operator norms across depths.
    Hls {
        #[arg(long, default_value = "uniform")]
        weight: String,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 4.0 / 3.0)]
        p: f64,
        /// Target exponent; must satisfy 1/q = 1/p - alpha/N when given.
        #[arg(long)]
        q: Option<f64>,
        /// Operator form, or `all`.
        #[arg(long, default_value = "all")]
        form: String,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Pointwise comparison of the kernel sum with the closed kernel.
    KernelEquiv {
        #[arg(long, default_value = "uniform")]
        weight: String,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        /// Level whose cube centres are sampled (default: depth - 1).
        #[arg(long)]
        level: Option<u32>,
        #[arg(long)]
        depth: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive check of the one-third shift cover.
    ShiftCover {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 6)]
        maxlevel: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Carleson embedding lower bound against its testing constant.
    Carleson {
        #[arg(long, default_value = "uniform")]
        weight: String,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone, Debug)]
pub struct SweepArgs {
    /// Single depth (default: depth of the weight file).
    #[arg(long, conflicts_with = "depths")]
    pub depth: Option<u32>,
    /// Depth range `a..b` (inclusive), warm-started from coarse to fine.
    #[arg(long)]
    pub depths: Option<String>,
    /// Ascent stopping tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_sweeps: usize,
}

pub fn parse_range(s: &str) -> anyhow::Result<RangeInclusive<u32>> {
    let (a, b) = s
        .split_once("..")
        .with_context(|| format!("depth range must look like 3..6, got {s:?}"))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let (a, b): (u32, u32) = (a.trim().parse()?, b.trim().parse()?);
    if a > b {
        bail!("empty depth range {s}");
    }
    Ok(a..=b)
}

/// A weight argument: `uniform`, inline JSON such as
/// `{"kind":"cascade","rho":2,"seed":3}`, or a weight file path.
pub fn parse_weight(arg: &str) -> anyhow::Result<WeightSpec> {
    if arg == "uniform" {
        return Ok(WeightSpec::Uniform);
    }
    if arg.trim_start().starts_with('{') {
        return serde_json::from_str(arg).with_context(|| format!("bad weight spec {arg}"));
    }
    Ok(WeightSpec::File { path: arg.into() })
}

pub fn parse_forms(s: &str) -> anyhow::Result<Vec<OperatorForm>> {
    if s == "all" {
        return Ok(OperatorForm::ALL.to_vec());
    }
    s.split(',')
        .map(|f| {
            f.parse::<OperatorForm>()
                .map_err(|e| anyhow::anyhow!("{e}"))
        })
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    use commands::*;
    match cli.command {
        Command::GenWeight {
            kind,
            dims,
            depth,
            rho,
            exponents,
            center,
            common,
        } => gen_weight(kind, dims, depth, rho, exponents, center, &common),
        Command::CheckWeight {
            weight,
            eps,
            common,
        } => check_weight(&weight, &eps, &common),
        Command::Fp {
            weight,
            kernel,
            alpha,
            beta,
            p,
            dims,
            depth,
            common,
        } => fp(&weight, kernel, alpha, beta, &p, dims, depth, &common),
        Command::EmbedNorm {
            weight,
            kernel,
            alpha,
            beta,
            p,
            dims,
            sweep,
            common,
        } => embed_norm(&weight, kernel, alpha, beta, &p, dims, &sweep, &common),
        Command::Hls {
            weight,
            dims,
            alpha,
            p,
            q,
            form,
            sweep,
            common,
        } => hls(&weight, dims, alpha, p, q, &form, &sweep, &common),
        Command::KernelEquiv {
            weight,
            dims,
            alpha,
            pairs,
            level,
            depth,
            common,
        } => kernel_equiv(&weight, dims, alpha, pairs, level, depth, &common),
        Command::ShiftCover {
            dim,
            maxlevel,
            common,
        } => shift_cover(dim, maxlevel, &common),
        Command::Carleson {
            weight,
            dims,
            p,
            q,
            sweep,
            common,
        } => carleson(&weight, dims, p, q, &sweep, &common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
