//! Batch driver for the comparison-geometry pipelines.
//!
//! Every subcommand emits one JSON document (a report, an array of
//! reports, a space file, or a constants block) to stdout or `--out`.
//! Exit codes: 0 when all checks passed, 1 when mathematical violations
//! were found (the expected outcome for negative controls), 2 for
//! configuration or I/O problems. Reruns with identical flags and seeds
//! produce byte-identical output; nothing time- or host-dependent is
//! recorded.

mod commands;
mod spacefile;

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(
    name = "alexlab",
    version,
    about = "Verification pipelines for comparison geometry on sampled metric spaces"
)]
struct Cli {
    /// JSON file of default flag values (keys are long flag names);
    /// explicit flags win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write the JSON document here instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Which space to work on: a model kind sampled on the spot, or a space
/// file produced by `generate`.
#[derive(Args, Clone)]
pub struct SpaceArgs {
    /// Model kind (euclidean, cone, cylinder, hyperbolic, paraboloid)
    /// or path to a space file [default: euclidean]
    #[arg(long)]
    space: Option<String>,
    /// Dimension of the Euclidean ball
    #[arg(long)]
    n: Option<usize>,
    /// Truncation radius of the model
    #[arg(long)]
    radius: Option<f64>,
    /// Cone opening (arc length of the unit link over 2 pi)
    #[arg(long)]
    rho: Option<f64>,
    /// Cylinder half height
    #[arg(long)]
    half_height: Option<f64>,
    /// Hyperbolic curvature (negative)
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// Paraboloid shape coefficient
    #[arg(long)]
    a: Option<f64>,
    /// Sample size
    #[arg(long)]
    count: Option<usize>,
    /// Sampling seed, recorded in every report
    #[arg(long)]
    seed: Option<u64>,
    /// Name recorded in generated space files
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
pub struct CurvatureArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Comparison curvature [default: the generator's known bound,
    /// else a seeded estimate]
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    /// Quadruples to test [default: 200]
    #[arg(long)]
    samples: Option<usize>,
    /// Seed for the quadruple draw [default: --seed]
    #[arg(long)]
    op_seed: Option<u64>,
    /// Also bisect for the largest curvature bound the sample supports
    #[arg(long)]
    estimate: bool,
}

#[derive(Args)]
pub struct BgArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Center index [default: the distinguished point]
    #[arg(long)]
    center: Option<usize>,
    /// Radial bins for the profile [default: sized from the sample]
    #[arg(long)]
    bins: Option<usize>,
    /// Bin-to-bin tolerance for the profile check [default: 0.25]
    #[arg(long)]
    profile_tol: Option<f64>,
    /// Inner ball radius [default: 0.3 of the trusted span]
    #[arg(long)]
    r1: Option<f64>,
    /// Outer ball radius [default: 0.9 of the trusted span]
    #[arg(long)]
    r2: Option<f64>,
    /// Tolerance for the ball-ratio floor [default: 0.05]
    #[arg(long)]
    ratio_tol: Option<f64>,
    /// Dimension the comparison runs at [default: the space dimension]
    #[arg(long)]
    dim: Option<usize>,
    /// Write the radial profile as CSV (r_mid, a_estimate, a_over_r_pow)
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct ExcessArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Triples to sample [default: 2000]
    #[arg(long)]
    triples: Option<usize>,
    /// Seed for the triple draw [default: --seed]
    #[arg(long)]
    op_seed: Option<u64>,
}

#[derive(Args)]
pub struct ScanArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Center index [default: the distinguished point]
    #[arg(long)]
    center: Option<usize>,
    /// Comma-separated scan radii [default: 0.3, 0.5, 0.7, 0.9 of the
    /// trusted span]
    #[arg(long)]
    radii: Option<String>,
    /// Annulus radius around each candidate [default: 3 times the
    /// sample resolution]
    #[arg(long)]
    annulus: Option<f64>,
    /// Angle slack above pi/2 a regularity witness must clear
    /// [default: 0.1]
    #[arg(long)]
    tol: Option<f64>,
    /// Comparison curvature [default: known bound, else estimated]
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    /// Candidates tested per shell [default: 48]
    #[arg(long)]
    cap: Option<usize>,
    /// Seed for candidate subsampling [default: --seed]
    #[arg(long)]
    op_seed: Option<u64>,
    /// Write the critical hits as CSV
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct ThresholdArgs {
    /// Dimension [default: 2]
    #[arg(long)]
    n: Option<usize>,
    /// Comparison curvature scale (positive)
    #[arg(long)]
    kappa: Option<f64>,
    /// Working excess scale in (0, epsilon_max]
    /// [default: 0.99 epsilon_max]
    #[arg(long)]
    eps_hat: Option<f64>,
    /// Excess scale for the volume-growth threshold gamma
    #[arg(long)]
    gamma_eps: Option<f64>,
    /// Distance factor C for gamma (pair with --gamma-eps)
    #[arg(long)]
    big_c: Option<f64>,
    /// Far-scale factor for the intermediate form of gamma
    #[arg(long)]
    cbar: Option<f64>,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Center index for volume, placement, and scan pipelines
    /// [default: the distinguished point]
    #[arg(long)]
    center: Option<usize>,
    /// Radial bins for the profile [default: sized from the sample]
    #[arg(long)]
    bins: Option<usize>,
    /// Bin-to-bin tolerance for the profile check [default: 0.25]
    #[arg(long)]
    profile_tol: Option<f64>,
    /// Inner ball radius [default: 0.3 of the trusted span]
    #[arg(long)]
    r1: Option<f64>,
    /// Outer ball radius [default: 0.9 of the trusted span]
    #[arg(long)]
    r2: Option<f64>,
    /// Tolerance for the ball-ratio floor [default: 0.05]
    #[arg(long)]
    ratio_tol: Option<f64>,
    /// Quadruples for the curvature test [default: 200]
    #[arg(long)]
    samples: Option<usize>,
    /// Comparison curvature for quadruples and the scan
    /// [default: known bound, else estimated]
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    /// Triples for the excess check [default: 2000]
    #[arg(long)]
    triples: Option<usize>,
    /// Distance factor for the placement check [default: 3]
    #[arg(long)]
    big_c: Option<f64>,
    /// Relative scale for the placement check [default: 0.3]
    #[arg(long)]
    eps: Option<f64>,
    /// Base radius for the placement check [default: 0.25 of the
    /// trusted span]
    #[arg(long)]
    r: Option<f64>,
    /// Comma-separated scan radii [default: 0.3, 0.5, 0.7, 0.9 of the
    /// trusted span]
    #[arg(long)]
    radii: Option<String>,
    /// Annulus radius for the scan [default: 3 times the sample
    /// resolution]
    #[arg(long)]
    annulus: Option<f64>,
    /// Angle slack for the scan [default: 0.1]
    #[arg(long)]
    tol: Option<f64>,
    /// Candidates tested per scan shell [default: 48]
    #[arg(long)]
    cap: Option<usize>,
    /// Seed for all pipeline draws [default: --seed]
    #[arg(long)]
    op_seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a model space and emit it as a space file
    Generate(SpaceArgs),
    /// Summarize a space: backing, size, resolution, weights
    Inspect(SpaceArgs),
    /// Quadruple comparison test at a curvature bound
    CheckCurvature(CurvatureArgs),
    /// Volume profile and ball-ratio comparisons
    CheckBg(BgArgs),
    /// Excess bound on sampled triples
    CheckExcess(ExcessArgs),
    /// Scan a radius grid for critical points of the distance function
    ScanCritical(ScanArgs),
    /// Constants of the finiteness theorem at (n, kappa)
    Thresholds(ThresholdArgs),
    /// Run every pipeline against one space
    VerifyAll(VerifyArgs),
}

/// Defaults loaded from `--config`: a flat JSON object keyed by long
/// flag names. Unknown keys are allowed so one file can serve several
/// subcommands.
pub struct Defaults(Option<serde_json::Map<String, serde_json::Value>>);

impl Defaults {
    fn load(path: Option<&PathBuf>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Defaults(None));
        };
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("{} is not valid JSON", path.display()))?;
        match value {
            serde_json::Value::Object(map) => Ok(Defaults(Some(map))),
            _ => anyhow::bail!("{} must hold a JSON object", path.display()),
        }
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        let Some(map) = &self.0 else {
            return Ok(None);
        };
        let Some(value) = map.get(key) else {
            return Ok(None);
        };
        let parsed = serde_json::from_value(value.clone())
            .with_context(|| format!("config key {key:?} has the wrong type"))?;
        Ok(Some(parsed))
    }
}

/// Flag value, else config value, else the built-in default.
pub fn pick<T: DeserializeOwned>(
    flag: Option<T>,
    dfl: &Defaults,
    key: &str,
    fallback: T,
) -> Result<T> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(dfl.get(key)?.unwrap_or(fallback)),
    }
}

/// Flag value, else config value, else nothing.
pub fn opt_pick<T: DeserializeOwned>(
    flag: Option<T>,
    dfl: &Defaults,
    key: &str,
) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => dfl.get(key),
    }
}

/// Flag value, else config value, else an error naming the flag.
pub fn pick_required<T: DeserializeOwned>(
    flag: Option<T>,
    dfl: &Defaults,
    key: &str,
) -> Result<T> {
    opt_pick(flag, dfl, key)?.with_context(|| format!("--{key} is required"))
}

fn run(cli: Cli) -> Result<i32> {
    let dfl = Defaults::load(cli.config.as_ref())?;
    let (doc, code) = match &cli.cmd {
        Cmd::Generate(args) => commands::generate(args, &dfl)?,
        Cmd::Inspect(args) => commands::inspect(args, &dfl)?,
        Cmd::CheckCurvature(args) => commands::check_curvature(args, &dfl)?,
        Cmd::CheckBg(args) => commands::check_bg(args, &dfl)?,
        Cmd::CheckExcess(args) => commands::check_excess(args, &dfl)?,
        Cmd::ScanCritical(args) => commands::scan_critical(args, &dfl)?,
        Cmd::Thresholds(args) => commands::thresholds(args, &dfl)?,
        Cmd::VerifyAll(args) => commands::verify_all(args, &dfl)?,
    };
    match &cli.out {
        Some(path) => {
            fs::write(path, &doc).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{doc}"),
    }
    Ok(code)
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}
