//! Command-line front end.
//!
//! Every subcommand produces a [`Report`]: schema version, the resolved
//! inputs, a results payload, warnings (always present) and optional timing.
//! Floats are rounded to 12 significant digits before rendering so identical
//! invocations give byte-identical output. Errors are reserved for malformed
//! specs, I/O and generation failures; mathematical outcomes (including a
//! failed witness construction) live in the payload.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Number, Value};

use crate::axioms::default_grid;
use crate::density::{complement_inequality_check, f_density, natural_density};
use crate::error::Error;
use crate::matrix::make_matrix;
use crate::membership::{
    boundedness_inclusion_probe, fstat_cauchy_check, fstat_limit_estimate, fstat_membership_block,
    fstat_membership_global, w_membership, SpaceParams,
};
use crate::modulus::{check_modulus_axioms, make_modulus, Modulus};
use crate::numeric::log_grid;
use crate::orlicz::{
    check_orlicz_axioms, luxemburg_norm, make_orlicz_family, make_orlicz_fn, make_rho, ntheta_norm, orlicz_norm,
    RhoSchedule,
};
use crate::sequence::{make_index_set, make_lacunary, make_sequence, SequencePrefix};
use crate::witnesses::{
    cauchy_limit_construction, converge_off_witness, extract_witness_set, gen_thm36_instance, gen_thm37_instance,
    multi_modulus_probe, GeneratedInstance,
};

pub const SCHEMA_VERSION: &str = "seqlab/1";

const DEFAULT_N: usize = 100_000;
const DEFAULT_DENSITY_N: usize = 1_000_000;
const MIN_N: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "seqlab",
    version,
    about = "Finite-truncation diagnostics for lacunary f-statistical convergence and Musielak-Orlicz sequence spaces"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Truncation N; accepts `100000` or `1e5`
    #[arg(long, global = true, value_parser = parse_count)]
    pub n: Option<usize>,
    /// Number of lacunary blocks R
    #[arg(long, global = true, default_value_t = 10)]
    pub blocks: usize,
    /// Tolerance (default 1e-2; 1e-12 for `norm`)
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Exceedance threshold
    #[arg(long, global = true, default_value_t = 0.1)]
    pub eps: f64,
    /// Order alpha in (0, 1]
    #[arg(long, global = true, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Record wall-clock time in the report (output is then not reproducible)
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// f-density and natural density of an index set
    Density(DensityArgs),
    /// Membership diagnostics for a sequence or a generated instance
    Membership(MembershipArgs),
    /// Luxemburg, Orlicz or N_theta norm of a sequence prefix
    Norm(NormArgs),
    /// Witness constructions and counterexample generators
    Witness(WitnessArgs),
    /// Sampled axiom checks for a modulus or an Orlicz function
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub set: String,
    #[arg(long, default_value = "id")]
    pub modulus: String,
    /// Also scan f(n) <= f(|A(n)|) + f(|A^c(n)|) for every n <= N
    #[arg(long)]
    pub complement: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Thm36,
    Thm37,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    W,
    FstatBlock,
    FstatGlobal,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["seq", "witness"])))]
pub struct MembershipArgs {
    #[arg(long)]
    pub seq: Option<String>,
    /// Use a generated instance instead of --seq
    #[arg(long, value_enum)]
    pub witness: Option<Generator>,
    #[arg(long, default_value = "identity")]
    pub matrix: String,
    #[arg(long, default_value = "linear")]
    pub orlicz: String,
    #[arg(long, default_value = "powers2")]
    pub theta: String,
    #[arg(long, default_value = "const:1")]
    pub rho: String,
    /// Candidate limit L
    #[arg(long = "L", allow_hyphen_values = true)]
    pub limit: Option<f64>,
    /// Estimate L from histogram modes of A_i(x)
    #[arg(long = "estimate-L", conflicts_with = "limit")]
    pub estimate_limit: bool,
    #[arg(long, value_enum, default_value_t = Mode::FstatBlock)]
    pub mode: Mode,
    /// Modulus for the global reading and for limit estimation
    #[arg(long, default_value = "id")]
    pub modulus: String,
    /// Height for the thm36 generator
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Luxemburg,
    Orlicz,
    Ntheta,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    #[arg(long, value_enum)]
    pub kind: NormKind,
    #[arg(long)]
    pub seq: String,
    #[arg(long, default_value = "linear")]
    pub orlicz: String,
    #[arg(long, default_value = "powers2")]
    pub theta: String,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("what").required(true).args(["theorem", "probe_moduli"])))]
pub struct WitnessArgs {
    #[arg(long, value_parser = ["3.1", "3.3", "3.4", "3.5", "3.6", "3.7"])]
    pub theorem: Option<String>,
    /// Run the multi-modulus agreement probe (same as --theorem 3.4)
    #[arg(long)]
    pub probe_moduli: bool,
    /// Moduli for the agreement probe
    #[arg(long, value_delimiter = ',', default_value = "id,log1p,pow:0.5")]
    pub moduli: Vec<String>,
    #[arg(long)]
    pub seq: Option<String>,
    #[arg(long, default_value = "id")]
    pub modulus: String,
    #[arg(long, default_value = "identity")]
    pub matrix: String,
    #[arg(long, default_value = "linear")]
    pub orlicz: String,
    #[arg(long, default_value = "powers2")]
    pub theta: String,
    #[arg(long, default_value = "const:1")]
    pub rho: String,
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
    #[arg(long = "L", allow_hyphen_values = true)]
    pub limit: Option<f64>,
    /// Levels J for 3.1 (default 5) or K for 3.3 (default 10)
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("subject").required(true).args(["modulus", "orlicz"])))]
pub struct CheckArgs {
    #[arg(long)]
    pub modulus: Option<String>,
    #[arg(long)]
    pub orlicz: Option<String>,
    /// Log grid `lo,hi,per_decade` (default 1e-6,1e6,4)
    #[arg(long)]
    pub grid: Option<String>,
}

fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= 1e15 => Ok(v as usize),
        _ => Err(format!("`{s}` is not a non-negative integer")),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub inputs: Value,
    pub results: Value,
    pub warnings: Vec<String>,
    pub timing: Option<Value>,
}

struct Outcome {
    inputs: Map<String, Value>,
    results: Value,
    warnings: Vec<String>,
}

impl Outcome {
    fn new(inputs: Value, results: Value) -> Self {
        let Value::Object(inputs) = inputs else {
            unreachable!("inputs are built as objects")
        };
        Outcome {
            inputs,
            results,
            warnings: Vec::new(),
        }
    }
}

/// Parses nothing and prints nothing: runs the subcommand and builds its report.
pub fn run(cli: &Cli) -> anyhow::Result<Report> {
    let g = &cli.global;
    validate_global(g)?;
    let start = Instant::now();
    let (command, outcome) = match &cli.command {
        Command::Density(a) => ("density", run_density(g, a)?),
        Command::Membership(a) => ("membership", run_membership(g, a)?),
        Command::Norm(a) => ("norm", run_norm(g, a)?),
        Command::Witness(a) => ("witness", run_witness(g, a)?),
        Command::Check(a) => ("check", run_check(a)?),
    };
    let elapsed = start.elapsed();
    let mut inputs = outcome.inputs;
    inputs.insert("format".into(), json!(g.format));
    let mut report = Report {
        schema_version: SCHEMA_VERSION,
        command,
        inputs: Value::Object(inputs),
        results: outcome.results,
        warnings: outcome.warnings,
        timing: g
            .timing
            .then(|| json!({ "elapsed_ms": elapsed.as_secs_f64() * 1e3 })),
    };
    round_floats(&mut report.inputs);
    round_floats(&mut report.results);
    Ok(report)
}

/// Runs, renders and writes to `--out` or stdout.
pub fn execute(cli: &Cli) -> anyhow::Result<()> {
    let report = run(cli)?;
    let text = render(&report, cli.global.format)?;
    match &cli.global.out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn validate_global(g: &Global) -> anyhow::Result<()> {
    if let Some(n) = g.n {
        if n < MIN_N {
            bail!("--n must be at least {MIN_N}, got {n}");
        }
    }
    if let Some(t) = g.tol {
        if !(t > 0.0) {
            bail!("--tol must be > 0, got {t}");
        }
    }
    if !(g.eps > 0.0) {
        bail!("--eps must be > 0, got {}", g.eps);
    }
    if !(g.alpha > 0.0 && g.alpha <= 1.0) {
        bail!("--alpha must lie in (0, 1], got {}", g.alpha);
    }
    if g.blocks == 0 {
        bail!("--blocks must be >= 1");
    }
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn run_density(g: &Global, a: &DensityArgs) -> anyhow::Result<Outcome> {
    let n = g.n.unwrap_or(DEFAULT_DENSITY_N);
    let tol = g.tol.unwrap_or(1e-2);
    let set = make_index_set(&a.set)?;
    let f = make_modulus(&a.modulus)?;
    let fd = f_density(&set, &f, n, tol)?;
    let nd = natural_density(&set, n, tol)?;
    let mut results = json!({
        "set": set.describe(),
        "modulus": f.name(),
        "verdict": fd.verdict,
        "value": fd.value,
        "f_density": fd,
        "natural_density": nd,
    });
    if a.complement {
        results["complement_check"] = to_value(&complement_inequality_check(&set, &f, n));
    }
    let inputs = json!({
        "set": a.set, "modulus": a.modulus, "complement": a.complement, "n": n, "tol": tol,
    });
    Ok(Outcome::new(inputs, results))
}

fn space_params(
    g: &Global,
    matrix: &str,
    orlicz: &str,
    theta: &str,
    rho: &str,
) -> anyhow::Result<SpaceParams> {
    let p = SpaceParams {
        matrix: make_matrix(matrix)?,
        family: make_orlicz_family(orlicz)?,
        scheme: make_lacunary(theta, g.blocks)?,
        alpha: g.alpha,
        rho: make_rho(rho)?,
        limit: 0.0,
        eps: g.eps,
    };
    p.validate()?;
    Ok(p)
}

fn constant_rho(spec: &str) -> anyhow::Result<f64> {
    match make_rho(spec)? {
        RhoSchedule::Constant(c) => Ok(c),
        RhoSchedule::Table(_) => bail!("generated instances need a constant rho (`const:c`), got `{spec}`"),
    }
}

fn instance_summary(inst: &GeneratedInstance) -> Value {
    json!({
        "n": inst.sequence.len(),
        "family": inst.params.family.name(),
        "cuts": inst.params.scheme.cuts(),
        "eps": inst.params.eps,
        "alpha": inst.params.alpha,
        "rho": inst.params.rho.describe(),
        "limit": inst.params.limit,
        "heights": inst.heights,
    })
}

/// Sequence over a prefix long enough for the scheme.
fn load_sequence(g: &Global, spec: &str, p: &SpaceParams) -> anyhow::Result<SequencePrefix> {
    let n = g.n.unwrap_or(DEFAULT_N.max(p.scheme.end()));
    Ok(make_sequence(spec, n)?)
}

/// `--L` if given, otherwise the first histogram mode that passes the global
/// test; failing that, the most populated mode with a warning.
fn resolve_limit(
    x: &SequencePrefix,
    p: &SpaceParams,
    f: &Modulus,
    tol: f64,
    given: Option<f64>,
    warnings: &mut Vec<String>,
) -> anyhow::Result<(f64, Option<Value>)> {
    if let Some(l) = given {
        return Ok((l, None));
    }
    let est = fstat_limit_estimate(x, p, f, tol)?;
    let limit = match est.limit {
        Some(l) => l,
        None => {
            let first = est.candidates[0];
            warnings.push(format!(
                "no histogram mode passed the global statistical test under `{}`; using the most populated mode L = {first}",
                f.name()
            ));
            first
        }
    };
    Ok((limit, Some(to_value(&est))))
}

fn run_membership(g: &Global, a: &MembershipArgs) -> anyhow::Result<Outcome> {
    let tol = g.tol.unwrap_or(1e-2);
    let f = make_modulus(&a.modulus)?;
    let mut warnings = Vec::new();
    let (x, mut p, instance) = match (a.witness, &a.seq) {
        (Some(Generator::Thm36), _) => {
            let inst = gen_thm36_instance(a.nu, constant_rho(&a.rho)?, g.blocks)?;
            let summary = instance_summary(&inst);
            warnings.extend(inst.warnings);
            (inst.sequence, inst.params, Some(summary))
        }
        (Some(Generator::Thm37), _) => {
            let base = make_orlicz_fn(&a.orlicz)?;
            let scheme = make_lacunary(&a.theta, g.blocks)?;
            let inst = gen_thm37_instance(&base, &scheme, constant_rho(&a.rho)?, g.alpha)?;
            let summary = instance_summary(&inst);
            warnings.extend(inst.warnings);
            (inst.sequence, inst.params, Some(summary))
        }
        (None, Some(spec)) => {
            let p = space_params(g, &a.matrix, &a.orlicz, &a.theta, &a.rho)?;
            (load_sequence(g, spec, &p)?, p, None)
        }
        (None, None) => unreachable!("clap requires --seq or --witness"),
    };
    let mut estimate = None;
    if instance.is_none() || a.limit.is_some() || a.estimate_limit {
        if a.limit.is_none() && !a.estimate_limit {
            bail!("membership on --seq needs --L or --estimate-L");
        }
        let (l, est) = resolve_limit(&x, &p, &f, tol, a.limit, &mut warnings)?;
        p.limit = l;
        estimate = est;
    }
    let report = match a.mode {
        Mode::W => w_membership(&x, &p, tol)?,
        Mode::FstatBlock => fstat_membership_block(&x, &p, tol)?,
        Mode::FstatGlobal => fstat_membership_global(&x, &p, &f, tol)?,
    };
    let mut results = to_value(&report);
    results["limit_estimate"] = estimate.unwrap_or(Value::Null);
    results["instance"] = instance.unwrap_or(Value::Null);
    let inputs = json!({
        "seq": a.seq, "witness": a.witness, "matrix": p.matrix.label(), "orlicz": p.family.name(),
        "theta": a.theta, "cuts": p.scheme.cuts(), "rho": p.rho.describe(), "L": a.limit,
        "estimate_L": a.estimate_limit, "mode": a.mode, "modulus": a.modulus, "nu": a.nu,
        "n": x.len(), "blocks": p.scheme.blocks(), "tol": tol, "eps": p.eps, "alpha": p.alpha,
    });
    let mut out = Outcome::new(inputs, results);
    out.warnings = warnings;
    Ok(out)
}

fn run_norm(g: &Global, a: &NormArgs) -> anyhow::Result<Outcome> {
    let tol = g.tol.unwrap_or(1e-12);
    let x = make_sequence(&a.seq, g.n.unwrap_or(DEFAULT_N))?;
    let mut inputs = json!({ "kind": a.kind, "seq": a.seq, "n": x.len(), "tol": tol });
    let results = match a.kind {
        NormKind::Luxemburg | NormKind::Orlicz => {
            let fam = make_orlicz_family(&a.orlicz)?;
            inputs["orlicz"] = json!(fam.name());
            let mut r = if a.kind == NormKind::Luxemburg {
                to_value(&luxemburg_norm(&fam, &x, tol)?)
            } else {
                to_value(&orlicz_norm(&fam, &x, tol)?)
            };
            r["kind"] = json!(a.kind);
            r
        }
        NormKind::Ntheta => {
            let scheme = make_lacunary(&a.theta, g.blocks)?;
            inputs["theta"] = json!(a.theta);
            inputs["cuts"] = json!(scheme.cuts());
            json!({ "kind": a.kind, "value": ntheta_norm(&x, &scheme)?, "blocks": scheme.blocks() })
        }
    };
    Ok(Outcome::new(inputs, results))
}

fn run_witness(g: &Global, a: &WitnessArgs) -> anyhow::Result<Outcome> {
    let tol = g.tol.unwrap_or(1e-2);
    let theorem = match (&a.theorem, a.probe_moduli) {
        (Some(t), _) => t.as_str(),
        (None, true) => "3.4",
        (None, false) => unreachable!("clap requires --theorem or --probe-moduli"),
    };
    let mut warnings = Vec::new();
    let mut inputs = json!({ "theorem": theorem, "tol": tol, "eps": g.eps, "alpha": g.alpha, "blocks": g.blocks });
    let results = match theorem {
        "3.6" => {
            let rho = constant_rho(&a.rho)?;
            let inst = gen_thm36_instance(a.nu, rho, g.blocks)?;
            inputs["nu"] = json!(a.nu);
            inputs["rho"] = json!(rho);
            generated_results(&inst, tol, true)?
        }
        "3.7" => {
            let rho = constant_rho(&a.rho)?;
            let base = make_orlicz_fn(&a.orlicz)?;
            let scheme = make_lacunary(&a.theta, g.blocks)?;
            let inst = gen_thm37_instance(&base, &scheme, rho, g.alpha)?;
            inputs["orlicz"] = json!(base.name());
            inputs["theta"] = json!(a.theta);
            inputs["rho"] = json!(rho);
            warnings.extend(inst.warnings.iter().cloned());
            generated_results(&inst, tol, false)?
        }
        _ => {
            let seq = a
                .seq
                .as_deref()
                .with_context(|| format!("--theorem {theorem} needs --seq"))?;
            let mut p = space_params(g, &a.matrix, &a.orlicz, &a.theta, &a.rho)?;
            let f = make_modulus(&a.modulus)?;
            let x = if theorem == "3.5" {
                load_sequence(g, seq, &p)?
            } else {
                make_sequence(seq, g.n.unwrap_or(DEFAULT_N))?
            };
            inputs["seq"] = json!(seq);
            inputs["n"] = json!(x.len());
            inputs["matrix"] = json!(p.matrix.label());
            inputs["modulus"] = json!(f.name());
            match theorem {
                "3.1" => {
                    let (l, est) = resolve_limit(&x, &p, &f, tol, a.limit, &mut warnings)?;
                    p.limit = l;
                    let depth = a.depth.unwrap_or(5);
                    inputs["depth"] = json!(depth);
                    witness_set_results(&x, &p, &f, depth, tol, est)?
                }
                "3.3" => {
                    let depth = a.depth.unwrap_or(10);
                    inputs["depth"] = json!(depth);
                    let check = fstat_cauchy_check(&x, &p, &f, tol)?;
                    let construction = match cauchy_limit_construction(&x, &p, &f, depth, tol) {
                        Ok(c) => json!({ "status": "found", "limit": c }),
                        Err(e @ (Error::EmptyIntersection { .. } | Error::MissingAnchor { .. })) => {
                            json!({ "status": "failed", "diagnostic": e.to_string() })
                        }
                        Err(e) => return Err(e.into()),
                    };
                    json!({ "cauchy_check": check, "construction": construction })
                }
                "3.4" => {
                    let moduli = a
                        .moduli
                        .iter()
                        .map(|s| make_modulus(s))
                        .collect::<Result<Vec<_>, _>>()?;
                    inputs["moduli"] = json!(a.moduli);
                    to_value(&multi_modulus_probe(&x, &p, &moduli, tol)?)
                }
                "3.5" => {
                    let (l, est) = resolve_limit(&x, &p, &f, tol, a.limit, &mut warnings)?;
                    p.limit = l;
                    inputs["orlicz"] = json!(p.family.name());
                    inputs["cuts"] = json!(p.scheme.cuts());
                    let mut r = to_value(&boundedness_inclusion_probe(&x, &p, tol)?);
                    r["limit"] = json!(l);
                    r["limit_estimate"] = est.unwrap_or(Value::Null);
                    r
                }
                _ => unreachable!("theorem ids are validated by clap"),
            }
        }
    };
    let mut out = Outcome::new(inputs, results);
    out.warnings = warnings;
    Ok(out)
}

fn witness_set_results(
    x: &SequencePrefix,
    p: &SpaceParams,
    f: &Modulus,
    depth: usize,
    tol: f64,
    estimate: Option<Value>,
) -> anyhow::Result<Value> {
    const HEAD: usize = 32;
    let mut r = match extract_witness_set(x, p, f, depth, tol) {
        Ok(w) => {
            let off = converge_off_witness(x, p, &w.set, 1.0 / depth as f64)?;
            let head: Vec<usize> = w.set.materialize(x.len())?.into_iter().take(HEAD).collect();
            json!({
                "status": "found",
                "witness_set": w,
                "members_head": head,
                "converge_off": off,
            })
        }
        Err(e @ Error::WitnessStuck { .. }) => {
            let Error::WitnessStuck { level, at, ratio } = e else { unreachable!() };
            json!({
                "status": "stuck",
                "level": level,
                "at": at,
                "ratio": ratio,
                "diagnostic": e.to_string(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    r["limit"] = json!(p.limit);
    r["limit_estimate"] = estimate.unwrap_or(Value::Null);
    Ok(r)
}

fn generated_results(inst: &GeneratedInstance, tol: f64, with_bound: bool) -> anyhow::Result<Value> {
    let w = w_membership(&inst.sequence, &inst.params, tol)?;
    let b = fstat_membership_block(&inst.sequence, &inst.params, tol)?;
    let mut r = json!({
        "instance": instance_summary(inst),
        "block_residuals": w.block_residuals,
        "exceedance_ratios": b.exceedance_ratios,
        "w_verdict": w.verdict,
        "fstat_block_verdict": b.verdict,
    });
    if with_bound {
        let bounds: Vec<f64> = (1..=w.block_residuals.len()).map(|r| 2f64.powi(-(r as i32))).collect();
        let holds = w.block_residuals.iter().zip(&bounds).all(|(t, b)| t <= b);
        r["residual_bounds"] = json!(bounds);
        r["residual_bound_holds"] = json!(holds);
    }
    Ok(r)
}

fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let [lo, hi, k] = parts.as_slice() else {
        bail!("grid must be `lo,hi,per_decade`, got `{spec}`");
    };
    let (lo, hi): (f64, f64) = (lo.parse()?, hi.parse()?);
    let k: usize = k.parse()?;
    if !(lo > 0.0 && hi > lo && k > 0) {
        bail!("grid needs 0 < lo < hi and per_decade >= 1, got `{spec}`");
    }
    Ok(log_grid(lo, hi, k))
}

fn run_check(a: &CheckArgs) -> anyhow::Result<Outcome> {
    let grid = match &a.grid {
        Some(s) => parse_grid(s)?,
        None => default_grid(),
    };
    let (report, kind, spec) = match (&a.modulus, &a.orlicz) {
        (Some(m), _) => (check_modulus_axioms(&make_modulus(m)?, &grid)?, "modulus", m),
        (None, Some(o)) => (check_orlicz_axioms(&make_orlicz_fn(o)?, &grid)?, "orlicz", o),
        (None, None) => unreachable!("clap requires --modulus or --orlicz"),
    };
    let mut results = to_value(&report);
    results["all_passed"] = json!(report.all_passed());
    let inputs = json!({
        "kind": kind, "spec": spec, "grid": a.grid.as_deref().unwrap_or("1e-6,1e6,4"), "grid_points": grid.len(),
    });
    Ok(Outcome::new(inputs, results))
}

/// Rounds every float to 12 significant digits.
fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let r: f64 = format!("{x:.11e}").parse().expect("round-trip of formatted float");
            *v = Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn render(report: &Report, format: Format) -> anyhow::Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Table => Ok(render_table(report)),
        Format::Csv => Ok(render_csv(&report.results)),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, item, rows);
            }
        }
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            rows.push((prefix.to_string(), items.iter().map(scalar).collect::<Vec<_>>().join(", ")));
        }
        Value::Array(items) => {
            for (k, item) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{k}]"), item, rows);
            }
        }
        other => rows.push((prefix.to_string(), scalar(other))),
    }
}

fn render_table(report: &Report) -> String {
    let mut rows = vec![
        ("schema_version".to_string(), report.schema_version.to_string()),
        ("command".to_string(), report.command.to_string()),
    ];
    flatten("inputs", &report.inputs, &mut rows);
    flatten("results", &report.results, &mut rows);
    for w in &report.warnings {
        rows.push(("warning".into(), w.clone()));
    }
    if let Some(t) = &report.timing {
        flatten("timing", t, &mut rows);
    }
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    out
}

fn numeric_series(prefix: &str, v: &Value, out: &mut Vec<(String, Vec<Value>)>) {
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                numeric_series(&key, item, out);
            }
        }
        Value::Array(items) if !items.is_empty() && items.iter().all(|i| i.is_number() || i.is_null()) => {
            out.push((prefix.to_string(), items.clone()));
        }
        Value::Array(items) => {
            for (k, item) in items.iter().enumerate() {
                numeric_series(&format!("{prefix}[{k}]"), item, out);
            }
        }
        _ => {}
    }
}

/// One column per numeric trail in the payload, one row per position.
fn render_csv(results: &Value) -> String {
    let mut series = Vec::new();
    numeric_series("", results, &mut series);
    let mut out = String::from("row");
    for (name, _) in &series {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    let rows = series.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
    for r in 0..rows {
        let _ = write!(out, "{}", r + 1);
        for (_, s) in &series {
            out.push(',');
            if let Some(v) = s.get(r).filter(|v| !v.is_null()) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(args: &[&str]) -> Report {
        let cli = Cli::try_parse_from(std::iter::once("seqlab").chain(args.iter().copied())).unwrap();
        run(&cli).unwrap()
    }

    fn fails(args: &[&str]) -> String {
        let cli = Cli::try_parse_from(std::iter::once("seqlab").chain(args.iter().copied())).unwrap();
        format!("{:#}", run(&cli).unwrap_err())
    }

    #[test]
    fn count_parser() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("250"), Ok(250));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn rounding_keeps_twelve_digits() {
        let mut v = json!({ "a": [0.1 + 0.2, 5.000000000000001, 3], "b": 1.0 / 3.0 });
        round_floats(&mut v);
        assert_eq!(v, json!({ "a": [0.3, 5.0, 3], "b": 0.333333333333 }));
    }

    #[test]
    fn density_examples() {
        let r = report(&["density", "--set", "evens", "--modulus", "id", "--n", "100000"]);
        assert_eq!(r.results["value"], json!(0.5));
        let r = report(&["density", "--set", "squares", "--modulus", "log1p", "--n", "1e6"]);
        let v = r.results["value"].as_f64().unwrap();
        assert!((v - 0.5).abs() <= 0.02);
        assert!(fails(&["density", "--set", "squares", "--modulus", "bounded", "--n", "1000"]).contains("bounded modulus"));
    }

    #[test]
    fn membership_examples() {
        let r = report(&["membership", "--witness", "thm36", "--mode", "w", "--blocks", "10"]);
        assert_eq!(r.results["verdict"], "member");
        let r = report(&["membership", "--witness", "thm36", "--mode", "fstat-block"]);
        assert_eq!(r.results["verdict"], "non-member");
        let c = r.results["exceedance_ratios"].as_array().unwrap();
        assert!((c.last().unwrap().as_f64().unwrap() - 0.5).abs() < 0.05);
        let r = report(&["membership", "--seq", "const:3", "--L", "3", "--mode", "fstat-global", "--modulus", "id"]);
        assert_eq!(r.results["verdict"], "member");
        let r = report(&["membership", "--witness", "thm37", "--mode", "w"]);
        assert_eq!(r.results["verdict"], "non-member");
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn membership_needs_a_limit_for_sequences() {
        assert!(fails(&["membership", "--seq", "const:3"]).contains("--L"));
        let r = report(&["membership", "--seq", "const:3", "--estimate-L", "--mode", "w"]);
        assert_eq!(r.results["limit"], json!(3.0));
        assert_eq!(r.results["verdict"], "member");
    }

    #[test]
    fn incomplete_matrix_rows_fail() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, b"i,k,a\n1,1,1\n2,5000,1\n").unwrap();
        let spec = format!("file:{}", f.path().display());
        let msg = fails(&["membership", "--seq", "const:1", "--L", "1", "--matrix", &spec, "--n", "1024"]);
        assert!(msg.contains("row 2"), "{msg}");
    }

    #[test]
    fn norm_examples() {
        let r = report(&["norm", "--kind", "luxemburg", "--orlicz", "poly:2", "--seq", "list:3,4"]);
        assert_eq!(r.results["value"], json!(5.0));
        let r = report(&["norm", "--kind", "orlicz", "--orlicz", "poly:2", "--seq", "list:3,4"]);
        assert_eq!(r.results["value"], json!(10.0));
        assert_eq!(r.results["attained"], "interior");
        let r = report(&["norm", "--kind", "ntheta", "--theta", "powers2", "--seq", "const:1"]);
        assert_eq!(r.results["value"], json!(1.0));
    }

    #[test]
    fn witness_examples() {
        let r = report(&["witness", "--theorem", "3.6", "--nu", "1", "--rho", "1", "--blocks", "10"]);
        assert_eq!(r.results["residual_bound_holds"], json!(true));
        let r = report(&["witness", "--theorem", "3.7", "--theta", "powers2", "--orlicz", "linear"]);
        assert_eq!(r.results["fstat_block_verdict"], "member");
        assert_eq!(r.results["w_verdict"], "non-member");
        assert_eq!(r.warnings.len(), 1);
        let r = report(&["witness", "--theorem", "3.1", "--seq", "spike:set=squares,base=2,delta=1", "--modulus", "id"]);
        assert_eq!(r.results["status"], "found");
        let head = r.results["members_head"].as_array().unwrap();
        assert!(head.iter().all(|i| {
            let i = i.as_u64().unwrap();
            let s = (i as f64).sqrt() as u64;
            s * s == i
        }));
        let r = report(&["witness", "--theorem", "3.1", "--seq", "alternating", "--L", "0"]);
        assert_eq!(r.results["status"], "stuck");
        assert_eq!(r.results["level"], json!(2));
        let r = report(&["witness", "--probe-moduli", "--seq", "spike:set=squares,base=2,delta=1", "--moduli", "id,log1p"]);
        assert_eq!(r.results["agree"], json!(false));
    }

    #[test]
    fn witness_generation_errors_fail() {
        assert!(fails(&["witness", "--theorem", "3.6", "--nu", "1e9", "--rho", "const:1"]).contains("budget"));
    }

    #[test]
    fn check_subjects() {
        let r = report(&["check", "--modulus", "log1p"]);
        assert_eq!(r.results["all_passed"], json!(true));
        let r = report(&["check", "--orlicz", "poly:2", "--grid", "1e-3,1e3,2"]);
        assert_eq!(r.results["all_passed"], json!(true));
        assert!(fails(&["check", "--modulus", "pow:2"]).contains("pow"));
    }

    #[test]
    fn csv_and_table_render() {
        let r = report(&["density", "--set", "evens", "--n", "1000"]);
        let csv = render(&r, Format::Csv).unwrap();
        assert!(csv.starts_with("row,f_density.checkpoints,f_density.ratios"));
        let table = render(&r, Format::Table).unwrap();
        assert!(table.contains("results.verdict"));
        assert!(table.contains("converged"));
    }
}
