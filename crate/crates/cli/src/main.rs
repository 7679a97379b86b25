//! `hsm` - numerics for Hardy and Hardy-Sobolev-Maz'ya inequalities with
//! chained interior singularities.
//!
//! Exit codes: 0 success, 1 runtime error, 2 rejected/invalid verdict,
//! 64 usage error, 65 numeric precondition violation.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hsm_core::error::Error as CoreError;
use hsm_core::exponents::{sobolev_spec, SobolevSpec, WeightKind};
use hsm_core::families::{
    failure_sweep, sharpness_sweep, sobolev_quotient, FailureSweep, FamilyDescriptor,
    QuotientReport, SweepFit,
};
use hsm_core::oracle::{
    assemble, assemble_hardy_mass, min_rayleigh, shifted_min_rayleigh, EigEstimate, GridSpec,
    SolverOptions,
};
use hsm_core::params::{
    alpha_from_beta, beta_from_alpha, gamma_from_alpha, AdmissibilityCertificate, AlphaSeq,
    BetaSeq,
};
use hsm_core::{sobolev_constant, ProblemFrame};

const EXIT_VERDICT: u8 = 2;
const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 64;
const EXIT_PRECONDITION: u8 = 65;

#[derive(Parser)]
#[command(name = "hsm", version, about = "Hardy / Hardy-Sobolev-Maz'ya inequality numerics")]
struct Cli {
    /// Optional JSON config file; values are defaults, flags override.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the JSON report here as well as to stdout. Relative paths are
    /// resolved against HSM_OUT_DIR when it is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// CSV output path for sweep commands (default: the --out path with a
    /// .csv extension).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide admissibility of a beta sequence (recursion certificate).
    CheckBeta(CheckBetaArgs),
    /// Forward recursion: beta from alpha.
    Alpha2beta(AlphaArgs),
    /// Ground-state exponents gamma from alpha.
    Gamma(AlphaArgs),
    /// Weighted Sobolev exponent table for (alpha, Q, weight).
    Exponents(ExponentsArgs),
    /// Rayleigh-quotient sharpness sweep over a cutoff grid.
    Sharpness(SharpnessArgs),
    /// Borderline (alpha_n = 0) Sobolev quotient sweep over epsilon.
    Failure(FailureArgs),
    /// A single weighted Sobolev quotient for a test family.
    Sobolev(SobolevArgs),
    /// Finite-difference eigenvalue oracle on a staggered grid.
    Oracle(OracleArgs),
    /// Classical Sobolev constant S_n.
    Sn(SnArgs),
}

#[derive(Args)]
struct CheckBetaArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Chain start (3 interior, 1 half-space).
    #[arg(long)]
    k0: Option<usize>,
    /// Comma-separated beta values.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
}

#[derive(Args)]
struct AlphaArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k0: Option<usize>,
    /// Comma-separated alpha values.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Allow positive entries (forward recursion only).
    #[arg(long, default_value_t = false)]
    forward: bool,
}

#[derive(Args)]
struct ExponentsArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Sobolev exponent Q in (2, 2n/(n-2)].
    #[arg(long = "Q", visible_alias = "q-exponent")]
    q_exponent: Option<f64>,
    /// Weight kind: x2 or x1.
    #[arg(long)]
    weight: Option<String>,
}

#[derive(Args)]
struct SharpnessArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Step index: 3 for the one-cutoff family, 4..=n for two cutoffs.
    #[arg(long)]
    step: Option<usize>,
    /// Comma-separated increasing cutoff levels.
    #[arg(long)]
    k_grid: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct FailureArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Alpha sequence with alpha_n = 0.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long = "Q", visible_alias = "q-exponent")]
    q_exponent: Option<f64>,
    #[arg(long)]
    weight: Option<String>,
    /// Comma-separated decreasing epsilon grid.
    #[arg(long)]
    eps_grid: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct SobolevArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Family kind: step3, stepq or failure.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    k3: Option<f64>,
    #[arg(long)]
    kq: Option<f64>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "Q", visible_alias = "q-exponent")]
    q_exponent: Option<f64>,
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    half_width: Option<f64>,
    /// Denominator Hardy index m (mass weight 1/|X_m|^2).
    #[arg(long)]
    target: Option<usize>,
    /// Optional beta sequence subtracted from the stiffness.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SnArgs {
    #[arg(long)]
    n: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    return ExitCode::SUCCESS;
                }
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

/// Numeric precondition violations exit 65; everything else is a plain
/// runtime error.
fn classify(e: &CoreError) -> u8 {
    match e {
        CoreError::Argument(_) => EXIT_PRECONDITION,
        _ => EXIT_ERROR,
    }
}

struct Ctx {
    config: serde_json::Value,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
}

impl Ctx {
    fn section(&self, name: &str) -> serde_json::Value {
        self.config.get(name).cloned().unwrap_or(serde_json::Value::Null)
    }
}

fn run(cli: Cli) -> Result<u8, CoreError> {
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CoreError::Argument(format!("cannot read config {path:?}: {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| CoreError::Argument(format!("config is not valid JSON: {e}")))?
        }
        None => serde_json::Value::Null,
    };
    let out = cli.out.map(resolve_out_path);
    let ctx = Ctx { config, out, csv: cli.csv.map(resolve_out_path) };

    match cli.command {
        Command::CheckBeta(a) => check_beta(&ctx, a),
        Command::Alpha2beta(a) => alpha2beta(&ctx, a),
        Command::Gamma(a) => gamma_cmd(&ctx, a),
        Command::Exponents(a) => exponents_cmd(&ctx, a),
        Command::Sharpness(a) => sharpness_cmd(&ctx, a),
        Command::Failure(a) => failure_cmd(&ctx, a),
        Command::Sobolev(a) => sobolev_cmd(&ctx, a),
        Command::Oracle(a) => oracle_cmd(&ctx, a),
        Command::Sn(a) => sn_cmd(&ctx, a),
    }
}

fn resolve_out_path(p: PathBuf) -> PathBuf {
    if p.is_relative() {
        if let Ok(dir) = std::env::var("HSM_OUT_DIR") {
            return PathBuf::from(dir).join(p);
        }
    }
    p
}

fn emit<T: Serialize>(ctx: &Ctx, rep: &T) -> Result<(), CoreError> {
    let json = report::to_json(rep);
    print!("{json}");
    if let Some(path) = &ctx.out {
        report::write_output(path, &json)
            .map_err(|e| CoreError::Argument(format!("cannot write {path:?}: {e}")))?;
    }
    Ok(())
}

fn emit_csv(ctx: &Ctx, rows: &[(f64, f64, f64)]) -> Result<(), CoreError> {
    let path = match (&ctx.csv, &ctx.out) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(out)) => Some(out.with_extension("csv")),
        (None, None) => None,
    };
    if let Some(path) = path {
        report::write_output(&path, &report::sweep_csv(rows))
            .map_err(|e| CoreError::Argument(format!("cannot write {path:?}: {e}")))?;
    }
    Ok(())
}

// ---- flag / config resolution helpers ----

fn pick_usize(flag: Option<usize>, cfg: &serde_json::Value, key: &str) -> Option<usize> {
    flag.or_else(|| cfg.get(key).and_then(|v| v.as_u64()).map(|v| v as usize))
}

fn pick_f64(flag: Option<f64>, cfg: &serde_json::Value, key: &str) -> Option<f64> {
    flag.or_else(|| cfg.get(key).and_then(|v| v.as_f64()))
}

fn pick_u64(flag: Option<u64>, cfg: &serde_json::Value, key: &str) -> Option<u64> {
    flag.or_else(|| cfg.get(key).and_then(|v| v.as_u64()))
}

fn pick_string(flag: Option<String>, cfg: &serde_json::Value, key: &str) -> Option<String> {
    flag.or_else(|| cfg.get(key).and_then(|v| v.as_str()).map(str::to_string))
}

/// Sequences: comma-separated on the command line, arrays in the config.
fn pick_seq(flag: Option<String>, cfg: &serde_json::Value, key: &str) -> Result<Option<Vec<f64>>, CoreError> {
    if let Some(text) = flag {
        return parse_seq(&text).map(Some);
    }
    match cfg.get(key) {
        Some(serde_json::Value::Array(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                out.push(item.as_f64().ok_or_else(|| {
                    CoreError::Argument(format!("config {key}: non-numeric array entry"))
                })?);
            }
            Ok(Some(out))
        }
        _ => Ok(None),
    }
}

fn parse_seq(text: &str) -> Result<Vec<f64>, CoreError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CoreError::Argument(format!("cannot parse '{s}' as a number")))
        })
        .collect()
}

fn require<T>(v: Option<T>, what: &str) -> Result<T, CoreError> {
    v.ok_or_else(|| CoreError::Argument(format!("missing required value: {what}")))
}

fn parse_weight(text: &str) -> Result<WeightKind, CoreError> {
    match text.to_ascii_lowercase().as_str() {
        "x2" => Ok(WeightKind::X2),
        "x1" => Ok(WeightKind::X1),
        other => Err(CoreError::Argument(format!("weight must be x2 or x1, got '{other}'"))),
    }
}

fn frame_of(n: usize, k0: usize) -> Result<ProblemFrame, CoreError> {
    ProblemFrame::new(n, k0)
}

// ---- reports ----

#[derive(Serialize)]
struct CheckBetaReport {
    schema_version: &'static str,
    command: &'static str,
    n: usize,
    k0: usize,
    beta: Vec<f64>,
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fail_index: Option<usize>,
    slack: f64,
}

fn check_beta(ctx: &Ctx, a: CheckBetaArgs) -> Result<u8, CoreError> {
    let cfg = ctx.section("check-beta");
    let n = require(pick_usize(a.n, &cfg, "n"), "--n")?;
    let k0 = pick_usize(a.k0, &cfg, "k0").unwrap_or(3);
    let beta_vals = require(pick_seq(a.beta, &cfg, "beta")?, "--beta")?;
    let frame = frame_of(n, k0)?;
    let beta = BetaSeq::new(frame, beta_vals.clone())?;
    let cert = alpha_from_beta(&beta);
    let (verdict, alpha, fail_index, slack, code) = match &cert {
        AdmissibilityCertificate::Accepted { alpha, slack } => {
            ("accepted", Some(alpha.values().to_vec()), None, *slack, 0)
        }
        AdmissibilityCertificate::Rejected { fail_index, slack } => {
            ("rejected", None, Some(*fail_index), *slack, EXIT_VERDICT)
        }
    };
    emit(ctx, &CheckBetaReport {
        schema_version: report::SCHEMA_VERSION,
        command: "check-beta",
        n,
        k0,
        beta: beta_vals,
        verdict,
        alpha,
        fail_index,
        slack,
    })?;
    Ok(code)
}

#[derive(Serialize)]
struct SeqReport {
    schema_version: &'static str,
    command: &'static str,
    n: usize,
    k0: usize,
    alpha: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<Vec<f64>>,
}

fn build_alpha(frame: ProblemFrame, vals: Vec<f64>, forward: bool) -> Result<AlphaSeq, CoreError> {
    if forward {
        AlphaSeq::forward(frame, vals)
    } else {
        AlphaSeq::nonpositive(frame, vals)
    }
}

fn alpha2beta(ctx: &Ctx, a: AlphaArgs) -> Result<u8, CoreError> {
    let cfg = ctx.section("alpha2beta");
    let n = require(pick_usize(a.n, &cfg, "n"), "--n")?;
    let k0 = pick_usize(a.k0, &cfg, "k0").unwrap_or(3);
    let vals = require(pick_seq(a.alpha, &cfg, "alpha")?, "--alpha")?;
    let frame = frame_of(n, k0)?;
    let alpha = build_alpha(frame, vals.clone(), a.forward)?;
    let beta = beta_from_alpha(&alpha);
    emit(ctx, &SeqReport {
        schema_version: report::SCHEMA_VERSION,
        command: "alpha2beta",
        n,
        k0,
        alpha: vals,
        beta: Some(beta.values().to_vec()),
        gamma: None,
    })?;
    Ok(0)
}

fn gamma_cmd(ctx: &Ctx, a: AlphaArgs) -> Result<u8, CoreError> {
    let cfg = ctx.section("gamma");
    let n = require(pick_usize(a.n, &cfg, "n"), "--n")?;
    let k0 = pick_usize(a.k0, &cfg, "k0").unwrap_or(3);
    let vals = require(pick_seq(a.alpha, &cfg, "alpha")?, "--alpha")?;
    let frame = frame_of(n, k0)?;
    let alpha = build_alpha(frame, vals.clone(), a.forward)?;
    let gamma = gamma_from_alpha(&alpha);
    emit(ctx, &SeqReport {
        schema_version: report::SCHEMA_VERSION,
        command: "gamma",
        n,
        k0,
        alpha: vals,
        beta: None,
        gamma: Some(gamma.values().to_vec()),
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct ExponentsReport {
    schema_version: &'static str,
    command: &'static str,
    n: usize,
    alpha: Vec<f64>,
    spec: SobolevSpec,
}

fn resolve_spec(
    cfg: &serde_json::Value,
    n: Option<usize>,
    alpha: Option<String>,
    q_exponent: Option<f64>,
    weight: Option<String>,
) -> Result<(ProblemFrame, AlphaSeq, SobolevSpec), CoreError> {
    let n = require(pick_usize(n, cfg, "n"), "--n")?;
    let vals = require(pick_seq(alpha, cfg, "alpha")?, "--alpha")?;
    let q = require(pick_f64(q_exponent, cfg, "Q"), "--Q")?;
    let weight = parse_weight(&pick_string(weight, cfg, "weight").unwrap_or_else(|| "x2".into()))?;
    let frame = ProblemFrame::interior(n)?;
    let alpha = AlphaSeq::nonpositive(frame, vals)?;
    let spec = sobolev_spec(frame, &alpha, q, weight)?;
    Ok((frame, alpha, spec))
}

fn exponents_cmd(ctx: &Ctx, a: ExponentsArgs) -> Result<u8, CoreError> {
    let cfg = ctx.section("exponents");
    let (frame, alpha, spec) = resolve_spec(&cfg, a.n, a.alpha, a.q_exponent, a.weight)?;
    let code = if spec.valid { 0 } else { EXIT_VERDICT };
    emit(ctx, &ExponentsReport {
        schema_version: report::SCHEMA_VERSION,
        command: "exponents",
        n: frame.n(),
        alpha: alpha.values().to_vec(),
        spec,
    })?;
    Ok(code)
}

#[derive(Serialize)]
struct SharpnessReport {
    schema_version: &'static str,
    command: &'static str,
    n: usize,
    alpha: Vec<f64>,
    step: usize,
    k_grid: Vec<f64>,
    fit: SweepFit,
}

fn sharpness_cmd(ctx: &Ctx, a: SharpnessArgs) -> Result<u8, CoreError> {
    let cfg = ctx.section("sharpness");
    let n = require(pick_usize(a.n, &cfg, "n"), "--n")?;
    let vals = require(pick_seq(a.alpha, &cfg, "alpha")?, "--alpha")?;
    let step = pick_usize(a.step, &cfg, "step").unwrap_or(3);
    let k_grid = require(pick_seq(a.k_grid, &cfg, "k_grid")?, "--k-grid")?;
    let tol = pick_f64(a.tol, &cfg, "tol").unwrap_or(1e-9);
    let frame = ProblemFrame::interior(n)?;
    let alpha = AlphaSeq::nonpositive(frame, vals.clone())?;
    let fit = sharpness_sweep(frame, &alpha, step, &k_grid, tol)?;
    let rows: Vec<(f64, f64, f64)> =
        fit.points.iter().map(|p| (p.k, p.value, p.error_estimate)).collect();
    emit(ctx, &SharpnessReport {
        schema_version: report::SCHEMA_VERSION,
        command: "sharpness",
        n,
        alpha: vals,
        step,
        k_grid,
        fit,
    })?;
    emit_csv(ctx, &rows)?;
    Ok(0)
}

#[derive(Serialize)]
struct FailureReport {
    schema_version: &'static str,
    command: &'static str,
    n: usize,
    alpha: Vec<f64>,
    q_exponent: f64,
    weight: String,
    sweep: FailureSweep,
}

fn failure_cmd(ctx: &Ctx, a: FailureArgs) -> Result<u8, CoreError> {
    let cfg = ctx.section("failure");
    let n = require(pick_usize(a.n, &cfg, "n"), "--n")?;
    let vals = require(pick_seq(a.alpha, &cfg, "alpha")?, "--alpha")?;
    let q = require(pick_f64(a.q_exponent, &cfg, "Q"), "--Q")?;
    let weight_name = pick_string(a.weight, &cfg, "weight").unwrap_or_else(|| "x2".into());
    let weight = parse_weight(&weight_name)?;
    let eps_grid = require(pick_seq(a.eps_grid, &cfg, "eps_grid")?, "--eps-grid")?;
    let tol = pick_f64(a.tol, &cfg, "tol").unwrap_or(1e-9);
    let frame = ProblemFrame::interior(n)?;
    let alpha = AlphaSeq::nonpositive(frame, vals.clone())?;
    let spec = sobolev_spec(frame, &alpha, q, weight)?;
    let sweep = failure_sweep(frame, &alpha, &spec, &eps_grid, tol)?;
    let rows: Vec<(f64, f64, f64)> =
        sweep.points.iter().map(|p| (p.epsilon, p.quotient, p.error_estimate)).collect();
    emit(ctx, &FailureReport {
        schema_version: report::SCHEMA_VERSION,
        command: "failure",
        n,
        alpha: vals,
        q_exponent: q,
        weight: weight_name,
        sweep,
    })?;
    emit_csv(ctx, &rows)?;
    Ok(0)
}

#[derive(Serialize)]
struct SobolevReport {
    schema_version: &'static str,
    command: &'static str,
    n: usize,
    alpha: Vec<f64>,
    kind: String,
    q_exponent: f64,
    weight: String,
    report: QuotientReport,
}

fn sobolev_cmd(ctx: &Ctx, a: SobolevArgs) -> Result<u8, CoreError> {
    let cfg = ctx.section("sobolev");
    let n = require(pick_usize(a.n, &cfg, "n"), "--n")?;
    let vals = require(pick_seq(a.alpha, &cfg, "alpha")?, "--alpha")?;
    let kind = pick_string(a.kind, &cfg, "kind").unwrap_or_else(|| "step3".into());
    let q = require(pick_f64(a.q_exponent, &cfg, "Q"), "--Q")?;
    let weight_name = pick_string(a.weight, &cfg, "weight").unwrap_or_else(|| "x2".into());
    let weight = parse_weight(&weight_name)?;
    let tol = pick_f64(a.tol, &cfg, "tol").unwrap_or(1e-9);
    let k3 = pick_f64(a.k3, &cfg, "k3").unwrap_or(1e6);
    let frame = ProblemFrame::interior(n)?;
    let alpha = AlphaSeq::nonpositive(frame, vals.clone())?;
    let desc = match kind.as_str() {
        "step3" => FamilyDescriptor::step3(frame, alpha.clone(), k3)?,
        "stepq" => {
            let qidx = require(pick_usize(a.q, &cfg, "q"), "--q")?;
            let kq = pick_f64(a.kq, &cfg, "kq").unwrap_or(1e6);
            FamilyDescriptor::stepq(frame, alpha.clone(), qidx, k3, kq)?
        }
        "failure" => {
            let eps = require(pick_f64(a.epsilon, &cfg, "epsilon"), "--epsilon")?;
            FamilyDescriptor::failure(frame, alpha.clone(), k3, eps)?
        }
        other => {
            return Err(CoreError::Argument(format!(
                "kind must be step3, stepq or failure, got '{other}'"
            )))
        }
    };
    let spec = sobolev_spec(frame, &alpha, q, weight)?;
    let beta = beta_from_alpha(&alpha);
    let report = sobolev_quotient(&desc, &beta, &spec, tol)?;
    emit(ctx, &SobolevReport {
        schema_version: report::SCHEMA_VERSION,
        command: "sobolev",
        n,
        alpha: vals,
        kind,
        q_exponent: q,
        weight: weight_name,
        report,
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct OracleReport {
    schema_version: &'static str,
    command: &'static str,
    n: usize,
    cells: usize,
    half_width: f64,
    target: usize,
    beta: Option<Vec<f64>>,
    seed: u64,
    estimate: EigEstimate,
}

fn oracle_cmd(ctx: &Ctx, a: OracleArgs) -> Result<u8, CoreError> {
    let cfg = ctx.section("oracle");
    let n = require(pick_usize(a.n, &cfg, "n"), "--n")?;
    let cells = require(pick_usize(a.cells, &cfg, "cells"), "--cells")?;
    let half_width = pick_f64(a.half_width, &cfg, "half_width").unwrap_or(1.0);
    let target = pick_usize(a.target, &cfg, "target").unwrap_or(n);
    let beta_vals = pick_seq(a.beta, &cfg, "beta")?;
    let tol = pick_f64(a.tol, &cfg, "tol").unwrap_or(1e-6);
    let seed = pick_u64(a.seed, &cfg, "seed").unwrap_or(1);

    let grid = GridSpec::new(n, cells, half_width)?;
    if grid.node_count() > 8_000_000 {
        return Err(CoreError::Argument(format!(
            "{} nodes exceed the desk-scale cap of 8e6",
            grid.node_count()
        )));
    }
    let opts = SolverOptions { tol, seed, ..Default::default() };
    let target_mass = assemble_hardy_mass(&grid, target)?;

    let estimate = match &beta_vals {
        Some(vals) => {
            let frame = ProblemFrame::interior(n)?;
            let beta = BetaSeq::new(frame, vals.clone())?;
            let system = assemble(&grid, &beta)?;
            shifted_min_rayleigh(&system, &target_mass, grid, &opts)?
        }
        None => {
            let stiffness = hsm_core::oracle::assemble_stiffness(&grid);
            min_rayleigh(&stiffness, &target_mass, grid, &opts)?
        }
    };
    emit(ctx, &OracleReport {
        schema_version: report::SCHEMA_VERSION,
        command: "oracle",
        n,
        cells,
        half_width,
        target,
        beta: beta_vals,
        seed,
        estimate,
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct SnReport {
    schema_version: &'static str,
    command: &'static str,
    n: usize,
    value: f64,
}

fn sn_cmd(ctx: &Ctx, a: SnArgs) -> Result<u8, CoreError> {
    let cfg = ctx.section("sn");
    let n = require(pick_usize(a.n, &cfg, "n"), "--n")?;
    let value = sobolev_constant(n)?;
    emit(ctx, &SnReport { schema_version: report::SCHEMA_VERSION, command: "sn", n, value })?;
    Ok(0)
}
