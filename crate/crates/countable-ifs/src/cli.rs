//! Command-line driver. Every subcommand resolves a family, runs one of
//! the library computations, and writes CSV point files plus a JSON
//! report into `--out`. Output is deterministic for a fixed invocation
//! and seed, except for the timestamp field (`--no-timestamp` drops it).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::cloud::{self, PointCloud};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::measure::{chaos_game, markov_residual, support_estimate, ProbabilitySequence};
use crate::rational;
use crate::setops::{attractor_approx, composition_fixed_points, AttractorOptions};
use crate::verify::{self, ClaimStatus, VerifyOptions};

/// Central knob defaults, printed by `--show-defaults`.
pub mod defaults {
    pub const TRUNCATION: u32 = crate::family::DEFAULT_TRUNCATION;
    pub const WORD_LEN: u32 = 6;
    pub const WORD_BUDGET: u64 = crate::setops::DEFAULT_WORD_BUDGET;
    pub const TOL: f64 = 1e-3;
    pub const MAX_ITERS: u32 = 1_000;
    pub const MAX_POINTS: usize = 4_000_000;
    pub const SAMPLES: usize = 1_000_000;
    pub const BURN_IN: u32 = 1_000;
    pub const CELL: f64 = 1.0 / 128.0;
    pub const SEED: u64 = 42;
    pub const IMAX: u32 = 100;

    pub fn as_json() -> serde_json::Value {
        serde_json::json!({
            "N": TRUNCATION,
            "k": WORD_LEN,
            "budget": WORD_BUDGET,
            "tol": TOL,
            "max_iters": MAX_ITERS,
            "max_points": MAX_POINTS,
            "samples": SAMPLES,
            "burn_in": BURN_IN,
            "cell": CELL,
            "seed": SEED,
            "imax": IMAX,
        })
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ifs",
    version,
    about = "countable families of contractions: fixed points, invariant sets, chaos game, claim checks"
)]
pub struct Cli {
    /// Print the default knob values as JSON and exit.
    #[arg(long)]
    pub show_defaults: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fixed points of the maps and of their compositions up to length k.
    FixedPoints(FixedPointsArgs),
    /// Iterate the union of images until the point cloud stabilizes.
    Attractor(AttractorArgs),
    /// Sample the invariant measure by random composition.
    Chaos(ChaosArgs),
    /// Run named numerical checks and write a consolidated report.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct FamilySel {
    /// Builtin family: EX1 | EX2 | DYADIC | GEO(q).
    #[arg(long, value_name = "NAME")]
    pub family: Option<String>,
    /// Path to a JSON family description.
    #[arg(long, value_name = "PATH", conflicts_with = "family")]
    pub config: Option<PathBuf>,
    /// Truncation level: keep maps with index <= N.
    #[arg(long = "N", value_name = "N")]
    pub truncation: Option<u32>,
}

impl FamilySel {
    fn resolve(&self) -> CliResult<Family> {
        let fam = match (&self.family, &self.config) {
            (Some(name), None) => Family::builtin(name)?,
            (None, Some(path)) => {
                let text = fs::read_to_string(path).map_err(Error::from)?;
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
                Family::from_json(stem, &text)?
            }
            (None, None) => {
                return Err(CliError::Usage(
                    "one of --family or --config is required".into(),
                ))
            }
            (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
        };
        Ok(match self.truncation {
            Some(n) => fam.with_truncation(n)?,
            None => fam,
        })
    }

    fn resolve_optional(&self) -> CliResult<Option<Family>> {
        if self.family.is_none() && self.config.is_none() {
            if self.truncation.is_some() {
                return Err(CliError::Usage("--N needs --family or --config".into()));
            }
            return Ok(None);
        }
        self.resolve().map(Some)
    }
}

#[derive(Args, Debug)]
pub struct OutArgs {
    /// Directory for the output files (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Omit the timestamp field so reruns are byte-identical.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Args, Debug)]
pub struct FixedPointsArgs {
    #[command(flatten)]
    pub fam: FamilySel,
    /// Maximum composition length.
    #[arg(long, default_value_t = defaults::WORD_LEN)]
    pub k: u32,
    /// Cap on the number of composition words to enumerate.
    #[arg(long, default_value_t = defaults::WORD_BUDGET)]
    pub budget: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct AttractorArgs {
    #[command(flatten)]
    pub fam: FamilySel,
    /// Stop once one more image-union step moves the cloud less than this.
    #[arg(long, default_value_t = defaults::TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = defaults::MAX_ITERS)]
    pub max_iters: u32,
    #[arg(long, default_value_t = defaults::MAX_POINTS)]
    pub max_points: usize,
    /// Iterate the truncated family even when the declared ratio bound is >= 1.
    #[arg(long)]
    pub force_truncate: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct ChaosArgs {
    #[command(flatten)]
    pub fam: FamilySel,
    /// Number of retained samples.
    #[arg(long, default_value_t = defaults::SAMPLES)]
    pub samples: usize,
    /// Initial draws to discard.
    #[arg(long, default_value_t = defaults::BURN_IN)]
    pub burn_in: u32,
    /// Probability sequence: "uniform", "geometric:<q>", or comma-separated weights.
    #[arg(long, default_value = "uniform")]
    pub rho: String,
    #[arg(long, default_value_t = defaults::SEED)]
    pub seed: u64,
    /// Histogram cell width for the support estimate.
    #[arg(long, default_value_t = defaults::CELL)]
    pub cell: f64,
    /// Also enumerate composition fixed points up to this length and
    /// report the Hausdorff distance between them and the support.
    #[arg(long = "compare-P", value_name = "K")]
    pub compare_p: Option<u32>,
    /// Word cap for the --compare-P enumeration.
    #[arg(long, default_value_t = defaults::WORD_BUDGET)]
    pub budget: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub fam: FamilySel,
    /// Run every claim.
    #[arg(long, conflicts_with = "claim")]
    pub all: bool,
    /// Run a single named claim.
    #[arg(long, value_name = "NAME")]
    pub claim: Option<String>,
    /// List claim names with their statements and exit.
    #[arg(long)]
    pub list: bool,
    /// Index horizon for the unbounded-growth witness.
    #[arg(long, default_value_t = defaults::IMAX)]
    pub imax: u32,
    #[arg(long, default_value_t = defaults::SEED)]
    pub seed: u64,
    /// Word-budget override for the enumeration-heavy claims.
    #[arg(long)]
    pub budget: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parse `std::env::args`, run, and return the process exit code:
/// 0 success, 1 domain error (or failing claims), 2 usage error.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error[usage]: {msg}");
            2
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error[{}]: {e}", e.code());
            1
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<i32> {
    if cli.show_defaults {
        println!("{}", pretty(&defaults::as_json()));
        return Ok(0);
    }
    match cli.command {
        Some(Command::FixedPoints(a)) => cmd_fixed_points(a).map(|()| 0),
        Some(Command::Attractor(a)) => cmd_attractor(a).map(|()| 0),
        Some(Command::Chaos(a)) => cmd_chaos(a).map(|()| 0),
        Some(Command::Verify(a)) => cmd_verify(a),
        None => Err(CliError::Usage(
            "missing subcommand: fixed-points | attractor | chaos | verify".into(),
        )),
    }
}

fn cmd_fixed_points(a: FixedPointsArgs) -> CliResult<()> {
    if a.k == 0 {
        return Err(CliError::Usage("--k must be >= 1".into()));
    }
    let fam = a.fam.resolve()?;
    let d = fam.fixed_point_set()?;
    let p = composition_fixed_points(&fam, a.k, a.budget)?;
    let sup = fam.sup_ratio()?;

    write_atomic(&a.out.out.join("map_fixed_points.csv"), d.to_csv_string().as_bytes())?;
    write_atomic(
        &a.out.out.join("composition_fixed_points.csv"),
        p.cloud.to_csv_string().as_bytes(),
    )?;
    let mut summary = json!({
        "family": fam.name(),
        "dimension": fam.dimension(),
        "truncation": fam.truncation(),
        "alphabet_len": p.alphabet_len,
        "k": a.k,
        "words": p.words,
        "map_fixed_points": cloud_stats(&d),
        "composition_fixed_points": cloud_stats(&p.cloud),
        "duplicates_removed": p.words - p.cloud.len() as u64,
        "enumeration_resolution": p.resolution,
        "sup_ratio": sup_json(&sup),
    });
    stamp(&mut summary, a.out.no_timestamp);
    write_atomic(&a.out.out.join("fixed_points.json"), pretty(&summary).as_bytes())?;
    println!(
        "{}: {} map fixed points, {} composition fixed points (k = {}) -> {}",
        fam.name(),
        d.len(),
        p.cloud.len(),
        a.k,
        a.out.out.display()
    );
    Ok(())
}

fn cmd_attractor(a: AttractorArgs) -> CliResult<()> {
    if !(a.tol.is_finite() && a.tol > 0.0) {
        return Err(CliError::Usage("--tol must be a positive number".into()));
    }
    let fam = a.fam.resolve()?;
    let sup = fam.sup_ratio()?;
    if !a.force_truncate {
        if let Some(declared) = sup.declared {
            if declared >= 1.0 - 1e-9 {
                return Err(Error::DeclaredRatioNotContractive { declared }.into());
            }
        }
    }
    let result = attractor_approx(
        &fam,
        &AttractorOptions { tol: a.tol, max_iters: a.max_iters, max_points: a.max_points },
    )?;
    write_atomic(&a.out.out.join("attractor.csv"), result.cloud.to_csv_string().as_bytes())?;
    let mut report = json!({
        "family": fam.name(),
        "dimension": fam.dimension(),
        "truncation": fam.truncation(),
        "tol": a.tol,
        "iterations": result.iterations,
        "last_delta": result.last_delta,
        "converged": result.converged,
        "stop_reason": result.stop_reason.as_str(),
        "points": result.cloud.len(),
        "bounding_box": bbox_json(&result.cloud),
        "forced_truncate": a.force_truncate,
        "sup_ratio": sup_json(&sup),
    });
    stamp(&mut report, a.out.no_timestamp);
    write_atomic(&a.out.out.join("attractor.json"), pretty(&report).as_bytes())?;
    println!(
        "{}: {} points after {} iterations (delta {:.3e}, {}) -> {}",
        fam.name(),
        result.cloud.len(),
        result.iterations,
        result.last_delta,
        result.stop_reason.as_str(),
        a.out.out.display()
    );
    Ok(())
}

fn cmd_chaos(a: ChaosArgs) -> CliResult<()> {
    if !(a.cell.is_finite() && a.cell > 0.0) {
        return Err(CliError::Usage("--cell must be a positive number".into()));
    }
    if a.samples == 0 {
        return Err(CliError::Usage("--samples must be >= 1".into()));
    }
    if let Some(k) = a.compare_p {
        if k == 0 {
            return Err(CliError::Usage("--compare-P must be >= 1".into()));
        }
    }
    let fam = a.fam.resolve()?;
    let seq = parse_rho(&a.rho, fam.alphabet().len())?;
    let rep = chaos_game(&fam, &seq, a.samples, a.burn_in, a.seed)?;
    write_atomic(&a.out.out.join("samples.csv"), rep.measure.to_csv_string().as_bytes())?;

    let cell_for_residual = (fam.dimension() > 1).then_some(a.cell);
    let residual = markov_residual(&rep.measure, &fam, &seq, cell_for_residual)?;
    let support = support_estimate(&rep.measure, a.cell, 1)?;

    let compare = match a.compare_p {
        Some(k) => {
            let p = composition_fixed_points(&fam, k, a.budget)?;
            let dist = cloud::hausdorff(&support, &p.cloud)?;
            json!({
                "k": k,
                "composition_points": p.cloud.len(),
                "enumeration_resolution": p.resolution,
                "support_vs_compositions_hausdorff": dist,
            })
        }
        None => Value::Null,
    };

    let mut report = json!({
        "family": fam.name(),
        "dimension": fam.dimension(),
        "truncation": fam.truncation(),
        "rho": a.rho,
        "samples": rep.measure.len(),
        "burn_in": rep.burn_in,
        "seed": rep.seed,
        "truncation_resamples": rep.truncation_resamples,
        "sup_ratio": rep.sup_ratio,
        "markov_residual": {
            "value": residual.residual,
            "method": residual.method,
            "renormalized_tail": residual.renormalized_tail,
        },
        "cell": a.cell,
        "support_cells": support.len(),
        "support_bounding_box": bbox_json(&support),
        "compare_compositions": compare,
    });
    stamp(&mut report, a.out.no_timestamp);
    write_atomic(&a.out.out.join("chaos.json"), pretty(&report).as_bytes())?;
    println!(
        "{}: {} samples, residual {:.3e} ({}), {} support cells -> {}",
        fam.name(),
        rep.measure.len(),
        residual.residual,
        residual.method,
        support.len(),
        a.out.out.display()
    );
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> CliResult<i32> {
    if a.list {
        for name in verify::claim_names() {
            println!("{name}: {}", verify::claim_anchor(name).expect("listed name"));
        }
        return Ok(0);
    }
    let opts = VerifyOptions {
        family: a.fam.resolve_optional()?,
        imax: a.imax,
        seed: a.seed,
        word_budget: a.budget,
    };
    let mut report = if a.all {
        verify::run_all(&opts)?
    } else if let Some(name) = &a.claim {
        verify::report_from(vec![verify::run_claim(name, &opts)?])
    } else {
        return Err(CliError::Usage("pass --all or --claim <name> (or --list)".into()));
    };
    if !a.out.no_timestamp {
        report.timestamp = Some(unix_now().to_string());
    }
    write_atomic(
        &a.out.out.join("verify.json"),
        format!("{}\n", serde_json::to_string_pretty(&report).map_err(Error::from)?).as_bytes(),
    )?;
    for claim in &report.claims {
        let status = match claim.status {
            ClaimStatus::Pass => "pass",
            ClaimStatus::Fail => "FAIL",
            ClaimStatus::NotApplicable => "not-applicable",
        };
        match claim.status {
            ClaimStatus::Pass => println!("{}: {status}", claim.name),
            _ => println!("{}: {status} — {}", claim.name, claim.detail),
        }
    }
    println!(
        "{} passed, {} failed, {} not applicable -> {}",
        report.passed,
        report.failed,
        report.not_applicable,
        a.out.out.join("verify.json").display()
    );
    Ok(if report.all_pass { 0 } else { 1 })
}

fn parse_rho(spec: &str, alphabet_len: usize) -> Result<ProbabilitySequence> {
    let spec = spec.trim();
    if spec == "uniform" {
        return ProbabilitySequence::uniform(alphabet_len);
    }
    if let Some(rest) = spec.strip_prefix("geometric:") {
        return ProbabilitySequence::geometric(parse_number(rest)?);
    }
    let weights = spec.split(',').map(parse_number).collect::<Result<Vec<f64>>>()?;
    ProbabilitySequence::finite(weights)
}

/// Accepts decimal ("0.25") and fraction ("1/4") spellings.
fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    match rational::parse_rational(s) {
        Ok(r) => Ok(rational::to_f64(&r)),
        Err(_) => Err(Error::InvalidProbabilities(format!("cannot parse number {s:?}"))),
    }
}

fn cloud_stats(cloud: &PointCloud) -> Value {
    json!({
        "count": cloud.len(),
        "bounding_box": bbox_json(cloud),
    })
}

fn bbox_json(cloud: &PointCloud) -> Value {
    match cloud.bounding_box() {
        Some((lo, hi)) => json!({"lo": lo, "hi": hi}),
        None => Value::Null,
    }
}

fn sup_json(sup: &crate::family::SupRatioReport) -> Value {
    json!({
        "empirical": sup.empirical,
        "declared": sup.declared,
        "truncation_gap": sup.truncation_gap,
    })
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn stamp(report: &mut Value, suppress: bool) {
    if !suppress {
        report["timestamp"] = json!(unix_now().to_string());
    }
}

fn pretty(v: &Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(v).expect("json value"))
}

/// Write via a temp file in the same directory plus rename, so a crash
/// never leaves a half-written artifact under the final name.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(Error::from)?;
    let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{file_name}.tmp"));
    fs::write(&tmp, bytes).map_err(Error::from)?;
    fs::rename(&tmp, path).map_err(Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn rho_spellings() {
        assert!(matches!(
            parse_rho("uniform", 3).unwrap(),
            ProbabilitySequence::Finite { .. }
        ));
        assert!(matches!(
            parse_rho("geometric:1/2", 2).unwrap(),
            ProbabilitySequence::Geometric { .. }
        ));
        assert!(matches!(
            parse_rho("0.25, 0.75", 2).unwrap(),
            ProbabilitySequence::Finite { .. }
        ));
        assert!(parse_rho("geometric:nope", 2).is_err());
        assert!(parse_rho("0.5,oops", 2).is_err());
    }

    #[test]
    fn missing_family_is_usage_error() {
        let sel = FamilySel { family: None, config: None, truncation: None };
        match sel.resolve() {
            Err(CliError::Usage(msg)) => assert!(msg.contains("--family")),
            other => panic!("expected usage error, got {other:?}"),
        }
        assert!(sel.resolve_optional().unwrap().is_none());
    }

    #[test]
    fn atomic_write_replaces_content(){
        let dir = std::env::temp_dir().join(format!("ifs-cli-test-{}", std::process::id()));
        let path = dir.join("report.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"second");
        assert!(fs::read_dir(&dir).unwrap().count() == 1, "no temp residue");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn defaults_json_lists_every_knob() {
        let v = defaults::as_json();
        for key in ["N", "k", "tol", "samples", "burn_in", "cell", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["N"], 100);
        assert_eq!(v["cell"], 1.0 / 128.0);
    }
}
