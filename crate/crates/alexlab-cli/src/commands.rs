//! Subcommand implementations. Every function returns the JSON document
//! to emit plus the process exit code: 0 when all checks passed, 1 when
//! mathematical violations were found. Operational failures surface as
//! errors and are mapped to exit 2 by the caller.

use std::fs;
use std::path::PathBuf;

use alexlab::critical::{
    critical_scan, gamma_threshold, geodesic_placement_check, known_curvature_lower_bound,
    theorem_constants, CriticalScanReport, ScanOptions,
};
use alexlab::excess::{verify_excess_on_space, ExcessSampleConfig};
use alexlab::generators::{make_space, SpaceKind};
use alexlab::measure::{
    ball_ratio_check, bg_profile_check, radial_profile, MeasuredSpace, RadialProfile,
};
use alexlab::metric_core::{FiniteMetricSpace, SpaceError};
use alexlab::model_plane::PlaneError;
use alexlab::report::{Verdict, VerificationReport};
use anyhow::{bail, Context, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::spacefile::SpaceFile;
use crate::{
    BgArgs, CurvatureArgs, Defaults, ExcessArgs, ScanArgs, SpaceArgs, ThresholdArgs, VerifyArgs,
};

const DEFAULT_N: usize = 2;
const DEFAULT_RADIUS: f64 = 4.0;
const DEFAULT_RHO: f64 = 0.5;
const DEFAULT_HALF_HEIGHT: f64 = 6.0;
const DEFAULT_KAPPA: f64 = -1.0;
const DEFAULT_SHAPE_A: f64 = 0.5;
const DEFAULT_COUNT: usize = 1000;
const DEFAULT_SEED: u64 = 7;

struct ResolvedSpace {
    name: String,
    ms: MeasuredSpace,
    /// The sampling seed (for generated spaces) or the seed flag value
    /// (for loaded files); recorded in every emitted report.
    seed: u64,
}

fn kind_from_args(word: &str, args: &SpaceArgs, dfl: &Defaults) -> Result<Option<SpaceKind>> {
    let n = crate::pick(args.n, dfl, "n", DEFAULT_N)?;
    let radius = crate::pick(args.radius, dfl, "radius", DEFAULT_RADIUS)?;
    let rho = crate::pick(args.rho, dfl, "rho", DEFAULT_RHO)?;
    let half_height = crate::pick(args.half_height, dfl, "half-height", DEFAULT_HALF_HEIGHT)?;
    let kappa = crate::pick(args.kappa, dfl, "kappa", DEFAULT_KAPPA)?;
    let a = crate::pick(args.a, dfl, "a", DEFAULT_SHAPE_A)?;
    let kind = match word {
        "euclidean" | "euclid" => SpaceKind::EuclideanBall { n, radius },
        "cone" => SpaceKind::ConeOverCircle { rho, radius },
        "cylinder" => SpaceKind::FlatCylinder { rho, half_height },
        "hyperbolic" => SpaceKind::HyperbolicDisk { kappa, radius },
        "paraboloid" => SpaceKind::ParaboloidPatch { a, radius },
        _ => return Ok(None),
    };
    Ok(Some(kind))
}

fn default_name(kind: &SpaceKind, count: usize, seed: u64) -> String {
    match kind {
        SpaceKind::EuclideanBall { n, radius } => {
            format!("euclidean-n{n}-R{radius}-N{count}-seed{seed}")
        }
        SpaceKind::ConeOverCircle { rho, radius } => {
            format!("cone-rho{rho}-R{radius}-N{count}-seed{seed}")
        }
        SpaceKind::FlatCylinder { rho, half_height } => {
            format!("cylinder-rho{rho}-H{half_height}-N{count}-seed{seed}")
        }
        SpaceKind::HyperbolicDisk { kappa, radius } => {
            format!("hyperbolic-k{kappa}-R{radius}-N{count}-seed{seed}")
        }
        SpaceKind::ParaboloidPatch { a, radius } => {
            format!("paraboloid-a{a}-R{radius}-N{count}-seed{seed}")
        }
    }
}

/// Resolve `--space`: a model kind word samples a fresh space, anything
/// else is read as a space file path.
fn resolve_space(args: &SpaceArgs, dfl: &Defaults) -> Result<ResolvedSpace> {
    let word = crate::pick(args.space.clone(), dfl, "space", "euclidean".to_string())?;
    let count = crate::pick(args.count, dfl, "count", DEFAULT_COUNT)?;
    let seed = crate::pick(args.seed, dfl, "seed", DEFAULT_SEED)?;
    if let Some(kind) = kind_from_args(&word, args, dfl)? {
        let space = make_space(kind.clone())?;
        let ms = space.sample(count, seed)?;
        let name = match crate::opt_pick::<String>(args.name.clone(), dfl, "name")? {
            Some(name) => name,
            None => default_name(&kind, count, seed),
        };
        return Ok(ResolvedSpace { name, ms, seed });
    }
    let path = PathBuf::from(&word);
    if !path.is_file() {
        bail!("--space {word:?} is neither a model kind (euclidean, cone, cylinder, hyperbolic, paraboloid) nor an existing file");
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let (name, ms) = SpaceFile::parse(&text)?.into_measured()?;
    Ok(ResolvedSpace { name, ms, seed })
}

/// 0.8 of the largest trustworthy distance from `center`: the generator
/// truncation radius when distances are exact, the observed eccentricity
/// for graph backings. Sampling artifacts concentrate outside it.
fn trusted_span(ms: &MeasuredSpace, center: usize) -> f64 {
    let base = ms.base();
    if let Some(space) = base.analytic_space() {
        return 0.8 * space.truncation_radius();
    }
    let rmax = (0..base.point_count())
        .map(|i| base.distance(center, i))
        .fold(0.0f64, f64::max);
    0.8 * rmax
}

fn default_center(ms: &MeasuredSpace) -> usize {
    ms.distinguished_index().unwrap_or(0)
}

fn exit_code(violations: usize) -> i32 {
    if violations > 0 {
        1
    } else {
        0
    }
}

fn json_array(values: Vec<serde_json::Value>) -> Result<String> {
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Array(values))?;
    text.push('\n');
    Ok(text)
}

pub fn generate(args: &SpaceArgs, dfl: &Defaults) -> Result<(String, i32)> {
    let word = crate::pick(args.space.clone(), dfl, "space", "euclidean".to_string())?;
    if kind_from_args(&word, args, dfl)?.is_none() {
        bail!("generate needs a model kind (euclidean, cone, cylinder, hyperbolic, paraboloid), got {word:?}");
    }
    let resolved = resolve_space(args, dfl)?;
    let file = SpaceFile::from_measured(&resolved.name, &resolved.ms);
    Ok((file.to_pretty_json()?, 0))
}

#[derive(Serialize)]
struct Inspection {
    name: String,
    backing: String,
    n: usize,
    points: usize,
    total_weight: f64,
    delta_net: f64,
    quadruple_tolerance: f64,
    distinguished_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator: Option<SpaceKind>,
}

pub fn inspect(args: &SpaceArgs, dfl: &Defaults) -> Result<(String, i32)> {
    let resolved = resolve_space(args, dfl)?;
    let ms = &resolved.ms;
    let base = ms.base();
    let doc = Inspection {
        name: resolved.name,
        backing: base.backing_name().to_string(),
        n: ms.n(),
        points: base.point_count(),
        total_weight: ms.total_weight(),
        delta_net: base.delta_net(),
        quadruple_tolerance: base.quadruple_tolerance(),
        distinguished_index: ms.distinguished_index(),
        generator: ms.generator().map(|g| g.kind().clone()),
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok((text, 0))
}

/// Comparison curvature for quadruple tests and scans: explicit value,
/// else the generator's known lower bound (also available on graph
/// backings that carry generator metadata), else a seeded estimate
/// clamped to at most zero.
fn resolve_comparison_k(
    flag: Option<f64>,
    ms: &MeasuredSpace,
    seed: u64,
) -> Result<(f64, &'static str)> {
    if let Some(k) = flag {
        return Ok((k, "flag"));
    }
    if let Some(k) = known_curvature_lower_bound(ms.base()) {
        return Ok((k, "known-bound"));
    }
    if let Some(space) = ms.generator() {
        let k = match *space.kind() {
            SpaceKind::HyperbolicDisk { kappa, .. } => kappa,
            _ => 0.0,
        };
        return Ok((k, "known-bound"));
    }
    let k = ms.base().estimate_curvature_bound(48, seed)?;
    Ok((k.min(0.0), "estimated"))
}

fn quadruple_report(
    base: &FiniteMetricSpace,
    space_name: &str,
    k: f64,
    k_source: &str,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if base.point_count() < 4 {
        bail!(
            "the quadruple test needs at least 4 points, the space has {}",
            base.point_count()
        );
    }
    if samples == 0 {
        bail!("--samples must be at least 1");
    }
    let tol = base.quadruple_tolerance();
    let mut rep = VerificationReport::new("quadruple-test", tol);
    rep.seed = Some(seed);
    rep.echo("space", space_name);
    rep.echo("backing", base.backing_name());
    rep.echo("k", k);
    rep.echo("k_source", k_source);
    rep.echo("samples_requested", samples);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = base.point_count();
    let mut drawn = 0usize;
    let mut attempts = 0usize;
    while drawn < samples && attempts < 60 * samples {
        attempts += 1;
        let mut idx = [0usize; 4];
        let mut distinct = true;
        for slot in 0..4 {
            let cand = rng.gen_range(0..count);
            if idx[..slot].contains(&cand) {
                distinct = false;
                break;
            }
            idx[slot] = cand;
        }
        if !distinct {
            continue;
        }
        match base.quadruple_defect(k, idx[0], idx[1], idx[2], idx[3]) {
            Ok(defect) => {
                drawn += 1;
                rep.items_tested += 1;
                let margin = defect + tol;
                rep.observe_margin(margin);
                if margin < 0.0 {
                    rep.push_violation(
                        format!("quadruple ({}, {}, {}, {})", idx[0], idx[1], idx[2], idx[3]),
                        margin,
                        format!("defect {defect:.6} at k = {k} is below -{tol:.6}"),
                    );
                }
            }
            // coordinates can coincide on wrapped charts; redraw
            // rather than fail the run
            Err(SpaceError::NotDistinct { .. }) | Err(SpaceError::CoincidentPoints { .. }) => {}
            // a comparison triangle that cannot fit on the k-sphere
            // refutes the bound, same as a negative defect
            Err(SpaceError::Plane(PlaneError::PerimeterTooLong {
                perimeter, limit, ..
            })) => {
                drawn += 1;
                rep.items_tested += 1;
                let margin = limit - perimeter;
                rep.observe_margin(margin);
                rep.push_violation(
                    format!("quadruple ({}, {}, {}, {})", idx[0], idx[1], idx[2], idx[3]),
                    margin,
                    format!(
                        "comparison triangle perimeter {perimeter:.6} exceeds \
                         the k = {k} sphere limit {limit:.6}"
                    ),
                );
            }
            Err(e) => return Err(e.into()),
        }
    }
    if rep.items_tested == 0 {
        rep.verdict = Verdict::Inconclusive;
    } else {
        rep.finish();
    }
    Ok(rep)
}

pub fn check_curvature(args: &CurvatureArgs, dfl: &Defaults) -> Result<(String, i32)> {
    let resolved = resolve_space(&args.space, dfl)?;
    let base = resolved.ms.base();
    let op_seed = crate::pick(args.op_seed, dfl, "op-seed", resolved.seed)?;
    let samples = crate::pick(args.samples, dfl, "samples", 200)?;
    let k_flag = crate::opt_pick(args.k, dfl, "k")?;
    let (k, k_source) = resolve_comparison_k(k_flag, &resolved.ms, op_seed)?;
    let mut rep = quadruple_report(base, &resolved.name, k, k_source, samples, op_seed)?;
    let estimate = args.estimate || dfl.get::<bool>("estimate")?.unwrap_or(false);
    if estimate {
        let bound = base.estimate_curvature_bound(48, op_seed)?;
        rep.echo("estimated_bound", bound);
    }
    Ok((rep.to_json(), exit_code(rep.violations.len())))
}

struct BgParams {
    center: Option<usize>,
    bins: Option<usize>,
    profile_tol: Option<f64>,
    r1: Option<f64>,
    r2: Option<f64>,
    ratio_tol: Option<f64>,
    dim: Option<usize>,
    csv: Option<PathBuf>,
}

fn write_profile_csv(path: &PathBuf, profile: &RadialProfile, n: usize) -> Result<()> {
    let mut text = String::from("r_mid,a_estimate,a_over_r_pow\n");
    for k in 0..profile.bin_count() {
        let mid = profile.midpoint(k);
        let a = profile.a_estimate[k];
        let normalized = a / mid.powi(n as i32 - 1);
        text.push_str(&format!("{mid},{a},{normalized}\n"));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Bin count sized so the innermost bin (whose population scales like
/// `count / bins^n` under an n-dimensional volume law) still expects a
/// few dozen points.
fn default_bins(count: usize, n: usize) -> usize {
    let raw = (count as f64 / 35.0).powf(1.0 / n as f64).floor() as usize;
    raw.clamp(4, 12)
}

fn bg_reports(
    ms: &MeasuredSpace,
    space_name: &str,
    seed: u64,
    params: &BgParams,
    dfl: &Defaults,
) -> Result<(VerificationReport, VerificationReport)> {
    let center = crate::pick(params.center, dfl, "center", default_center(ms))?;
    let bins = match crate::opt_pick(params.bins, dfl, "bins")? {
        Some(b) => b,
        None => default_bins(ms.base().point_count(), ms.n()),
    };
    let profile_tol = crate::pick(params.profile_tol, dfl, "profile-tol", 0.25)?;
    let ratio_tol = crate::pick(params.ratio_tol, dfl, "ratio-tol", 0.05)?;
    let dim = crate::pick(params.dim, dfl, "dim", ms.n())?;
    let span = trusted_span(ms, center);
    let r1 = crate::pick(params.r1, dfl, "r1", 0.3 * span)?;
    let r2 = crate::pick(params.r2, dfl, "r2", 0.9 * span)?;

    let profile = radial_profile(ms, center, bins)?;
    let mut profile_rep = bg_profile_check(&profile, dim, profile_tol);
    profile_rep.seed = Some(seed);
    profile_rep.echo("space", space_name);
    if let Some(csv) = crate::opt_pick::<PathBuf>(params.csv.clone(), dfl, "csv")? {
        write_profile_csv(&csv, &profile, dim)?;
    }

    let mut ratio_rep = ball_ratio_check(ms, center, r1, r2, dim, ratio_tol)?;
    ratio_rep.seed = Some(seed);
    ratio_rep.echo("space", space_name);
    Ok((profile_rep, ratio_rep))
}

pub fn check_bg(args: &BgArgs, dfl: &Defaults) -> Result<(String, i32)> {
    let resolved = resolve_space(&args.space, dfl)?;
    let params = BgParams {
        center: args.center,
        bins: args.bins,
        profile_tol: args.profile_tol,
        r1: args.r1,
        r2: args.r2,
        ratio_tol: args.ratio_tol,
        dim: args.dim,
        csv: args.csv.clone(),
    };
    let (profile_rep, ratio_rep) =
        bg_reports(&resolved.ms, &resolved.name, resolved.seed, &params, dfl)?;
    let bad = profile_rep.violations.len() + ratio_rep.violations.len();
    let doc = json_array(vec![
        serde_json::to_value(&profile_rep)?,
        serde_json::to_value(&ratio_rep)?,
    ])?;
    Ok((doc, exit_code(bad)))
}

pub fn check_excess(args: &ExcessArgs, dfl: &Defaults) -> Result<(String, i32)> {
    let resolved = resolve_space(&args.space, dfl)?;
    let op_seed = crate::pick(args.op_seed, dfl, "op-seed", resolved.seed)?;
    let triples = crate::pick(args.triples, dfl, "triples", 2000)?;
    let cfg = ExcessSampleConfig {
        triples,
        seed: op_seed,
    };
    let mut rep = verify_excess_on_space(resolved.ms.base(), &cfg)?;
    rep.echo("space", &resolved.name);
    let code = exit_code(rep.violations.len());
    Ok((rep.to_json(), code))
}

struct ScanParams {
    radii: Option<String>,
    annulus: Option<f64>,
    tol: Option<f64>,
    cap: Option<usize>,
    csv: Option<PathBuf>,
}

fn parse_radii(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .with_context(|| format!("--radii entry {s:?} is not a number"))
        })
        .collect()
}

fn scan_radii(params: &ScanParams, dfl: &Defaults, span: f64) -> Result<Vec<f64>> {
    if let Some(text) = crate::opt_pick::<String>(params.radii.clone(), dfl, "radii")? {
        return parse_radii(&text);
    }
    Ok([0.3, 0.5, 0.7, 0.9].iter().map(|f| f * span).collect())
}

fn run_scan(
    base: &FiniteMetricSpace,
    center: usize,
    radii: &[f64],
    params: &ScanParams,
    dfl: &Defaults,
    op_seed: u64,
    kappa: f64,
) -> Result<CriticalScanReport> {
    let opts = ScanOptions {
        kappa: Some(kappa),
        annulus_radius: crate::pick(params.annulus, dfl, "annulus", 0.0)?,
        tol: crate::pick(params.tol, dfl, "tol", 0.1)?,
        candidate_cap: crate::pick(params.cap, dfl, "cap", 48)?,
        seed: op_seed,
    };
    let report = critical_scan(base, center, radii, &opts)?;
    if let Some(csv) = crate::opt_pick::<PathBuf>(params.csv.clone(), dfl, "csv")? {
        let mut text = String::from("point,grid_radius,distance,worst_angle\n");
        for hit in &report.hits {
            text.push_str(&format!(
                "{},{},{},{}\n",
                hit.point, hit.grid_radius, hit.distance, hit.worst_angle
            ));
        }
        fs::write(&csv, text).with_context(|| format!("writing {}", csv.display()))?;
    }
    Ok(report)
}

pub fn scan_critical(args: &ScanArgs, dfl: &Defaults) -> Result<(String, i32)> {
    let resolved = resolve_space(&args.space, dfl)?;
    let base = resolved.ms.base();
    let center = crate::pick(args.center, dfl, "center", default_center(&resolved.ms))?;
    let op_seed = crate::pick(args.op_seed, dfl, "op-seed", resolved.seed)?;
    let span = trusted_span(&resolved.ms, center);
    let params = ScanParams {
        radii: args.radii.clone(),
        annulus: args.annulus,
        tol: args.tol,
        cap: args.cap,
        csv: args.csv.clone(),
    };
    let k_flag = crate::opt_pick(args.k, dfl, "k")?;
    let (kappa, _) = resolve_comparison_k(k_flag, &resolved.ms, op_seed)?;
    let radii = scan_radii(&params, dfl, span)?;
    let report = run_scan(base, center, &radii, &params, dfl, op_seed, kappa)?;
    let code = exit_code(report.hits.len());
    Ok((report.to_json(), code))
}

#[derive(Serialize)]
struct ThresholdsDoc {
    n: usize,
    kappa: f64,
    epsilon_max: f64,
    epsilon_hat: f64,
    alpha_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    big_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cbar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_threshold: Option<f64>,
}

pub fn thresholds(args: &ThresholdArgs, dfl: &Defaults) -> Result<(String, i32)> {
    let n = crate::pick(args.n, dfl, "n", DEFAULT_N)?;
    let kappa = crate::pick_required(args.kappa, dfl, "kappa")?;
    let eps_hat = crate::opt_pick(args.eps_hat, dfl, "eps-hat")?;
    let constants = theorem_constants(n, kappa, eps_hat)?;
    let gamma_eps = crate::opt_pick::<f64>(args.gamma_eps, dfl, "gamma-eps")?;
    let big_c = crate::opt_pick::<f64>(args.big_c, dfl, "big-c")?;
    let cbar = crate::opt_pick::<f64>(args.cbar, dfl, "cbar")?;
    let gamma = match (gamma_eps, big_c) {
        (Some(eps), Some(c)) => Some(gamma_threshold(eps, c, n, cbar)?),
        (None, None) => {
            if cbar.is_some() {
                bail!("--cbar needs --gamma-eps and --big-c");
            }
            None
        }
        _ => bail!("--gamma-eps and --big-c go together"),
    };
    let doc = ThresholdsDoc {
        n: constants.n,
        kappa: constants.kappa,
        epsilon_max: constants.epsilon_max,
        epsilon_hat: constants.epsilon_hat,
        alpha_min: constants.alpha_min,
        gamma_eps,
        big_c,
        cbar,
        gamma_threshold: gamma,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok((text, 0))
}

/// Run every pipeline against one space: quadruple test, volume profile
/// and ball ratio, excess bound, geodesic placement, critical scan.
pub fn verify_all(args: &VerifyArgs, dfl: &Defaults) -> Result<(String, i32)> {
    let resolved = resolve_space(&args.space, dfl)?;
    let ms = &resolved.ms;
    let base = ms.base();
    let name = resolved.name.as_str();
    let op_seed = crate::pick(args.op_seed, dfl, "op-seed", resolved.seed)?;
    let center = crate::pick(args.center, dfl, "center", default_center(ms))?;
    let span = trusted_span(ms, center);

    let samples = crate::pick(args.samples, dfl, "samples", 200)?;
    let k_flag = crate::opt_pick(args.k, dfl, "k")?;
    let (k, k_source) = resolve_comparison_k(k_flag, ms, op_seed)?;
    let quadruple = quadruple_report(base, name, k, k_source, samples, op_seed)?;

    let bg_params = BgParams {
        center: Some(center),
        bins: args.bins,
        profile_tol: args.profile_tol,
        r1: args.r1,
        r2: args.r2,
        ratio_tol: args.ratio_tol,
        dim: None,
        csv: None,
    };
    let (profile_rep, ratio_rep) = bg_reports(ms, name, resolved.seed, &bg_params, dfl)?;

    let triples = crate::pick(args.triples, dfl, "triples", 2000)?;
    let mut excess_rep = verify_excess_on_space(
        base,
        &ExcessSampleConfig {
            triples,
            seed: op_seed,
        },
    )?;
    excess_rep.echo("space", name);

    let big_c = crate::pick(args.big_c, dfl, "big-c", 3.0)?;
    let eps = crate::pick(args.eps, dfl, "eps", 0.3)?;
    let r = crate::pick(args.r, dfl, "r", 0.25 * span)?;
    let mut placement_rep = geodesic_placement_check(base, center, big_c, eps, r, op_seed)?;
    placement_rep.echo("space", name);

    let scan_params = ScanParams {
        radii: args.radii.clone(),
        annulus: args.annulus,
        tol: args.tol,
        cap: args.cap,
        csv: None,
    };
    let radii = scan_radii(&scan_params, dfl, span)?;
    let scan_report = run_scan(base, center, &radii, &scan_params, dfl, op_seed, k)?;

    let bad = quadruple.violations.len()
        + profile_rep.violations.len()
        + ratio_rep.violations.len()
        + excess_rep.violations.len()
        + placement_rep.violations.len()
        + scan_report.hits.len();

    let doc = json_array(vec![
        serde_json::to_value(&quadruple)?,
        serde_json::to_value(&profile_rep)?,
        serde_json::to_value(&ratio_rep)?,
        serde_json::to_value(&excess_rep)?,
        serde_json::to_value(&placement_rep)?,
        serde_json::to_value(&scan_report)?,
    ])?;
    Ok((doc, exit_code(bad)))
}
