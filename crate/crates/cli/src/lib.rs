//! Command-line front end: run orbits, verify hypotheses, compare result
//! applicability and generate random instances.
//!
//! Exit codes: 0 success, 1 hypothesis or ratio violation, 2 iteration limit
//! reached, 3 invalid input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bmfix::fmt::sig17;
use bmfix::orbit::{audit_trace, run_orbit, verify_fixed_point, write_trace_csv, OrbitStatus};
use bmfix::quasicontraction::check_hypotheses;
use bmfix::scenarios::{self, builtin, random_finite, Scenario};
use bmfix::{ContractionCertificate, Error, HypothesisVerdicts, Instance};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "bmfix",
    version,
    about = "Fixed points of set-valued quasi-contractions in b-metric spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an orbit, write trace and report to the output directory.
    Run(RunArgs),
    /// Check the space axioms and the contraction certificate.
    Verify(ScenarioArg),
    /// Tabulate which fixed-point conditions apply.
    Compare(ScenarioArg),
    /// Emit a random certified finite scenario.
    Generate(GenerateArgs),
}

#[derive(Debug, clap::Args)]
pub struct ScenarioArg {
    /// Scenario file or built-in name (squared-line, alias paper-example; metric-example).
    #[arg(long)]
    pub scenario: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TraceFormat {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Trace file format.
    #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
    pub format: TraceFormat,
}

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub points: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long = "alpha-cap", default_value_t = 0.5)]
    pub alpha_cap: f64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_INVALID
                }
            };
        }
    };
    match cli.command {
        Command::Run(a) => cmd_run(&a, out, err),
        Command::Verify(a) => cmd_verify(&a.scenario, out, err),
        Command::Compare(a) => cmd_compare(&a.scenario, out, err),
        Command::Generate(a) => cmd_generate(&a, out, err),
    }
}

/// Built-in names take precedence over paths.
pub fn resolve_scenario(name: &str) -> bmfix::Result<Scenario> {
    match builtin(name) {
        Some(s) => Ok(s),
        None => scenarios::load(name),
    }
}

/// SHA-256 of the scenario's canonical JSON.
pub fn scenario_digest(scenario: &Scenario) -> String {
    hex::encode(Sha256::digest(scenario.to_json().as_bytes()))
}

fn invalid_input(err: &mut dyn Write, e: &Error) -> i32 {
    let _ = writeln!(err, "error: {e}");
    EXIT_INVALID
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn applicability(holds: bool) -> &'static str {
    if holds {
        "applicable"
    } else {
        "not applicable"
    }
}

fn alpha_note(cert: &ContractionCertificate, hyp: &HypothesisVerdicts) -> String {
    if !hyp.contraction_holds {
        format!(
            "scenario alpha = {} is not a valid certificate (alpha_min = {})",
            sig17(hyp.alpha),
            sig17(cert.alpha_min)
        )
    } else if hyp.alpha > cert.alpha_min {
        format!(
            "scenario alpha = {} is a valid, non-minimal certificate (alpha_min = {})",
            sig17(hyp.alpha),
            sig17(cert.alpha_min)
        )
    } else {
        format!(
            "scenario alpha = {} is the minimal certificate",
            sig17(hyp.alpha)
        )
    }
}

fn certificate_summary(cert: &ContractionCertificate, hyp: &HypothesisVerdicts) -> Value {
    let mut v = to_value(cert);
    let obj = v.as_object_mut().expect("object");
    obj.insert("d".into(), json!(cert.q));
    obj.insert("alpha".into(), json!(hyp.alpha));
    obj.insert("alpha_note".into(), json!(alpha_note(cert, hyp)));
    let at_min = obj.remove("verdicts").expect("verdicts");
    obj.insert("verdicts_at_alpha_min".into(), at_min);
    obj.insert(
        "verdicts".into(),
        json!({
            "thm21_feasible": applicability(hyp.contraction_holds && hyp.orbit_product < 1.0),
            "thm31": applicability(hyp.continuous_map),
            "thm32": applicability(hyp.star_continuous),
            "thm33": applicability(hyp.quasi_contraction),
            "lemma41": hyp.classical_cauchy.map(applicability),
            "thm41": applicability(hyp.five_term),
        }),
    );
    obj.insert("hypotheses".into(), to_value(hyp));
    v
}

struct Prepared {
    scenario: Scenario,
    instance: Instance,
    cert: ContractionCertificate,
    hyp: HypothesisVerdicts,
}

fn prepare(scenario: Scenario) -> bmfix::Result<Prepared> {
    let instance = scenario.build()?;
    let cert = instance.certify()?;
    let p = instance.params;
    let hyp = check_hypotheses(&cert, instance.space.s(), p.c, p.q, p.alpha);
    Ok(Prepared {
        scenario,
        instance,
        cert,
        hyp,
    })
}

fn write_file(path: &Path, contents: &[u8]) -> bmfix::Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn cmd_run(args: &RunArgs, _out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let start = Instant::now();
    let mut scenario = match resolve_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => return invalid_input(err, &e),
    };
    if let Some(tol) = args.tol {
        scenario.tol = tol;
    }
    if let Some(beta) = args.beta {
        scenario.params.beta = Some(beta);
    }
    if let Some(m) = args.max_iter {
        scenario.max_iter = m;
    }
    let prep = match prepare(scenario) {
        Ok(p) => p,
        Err(e) => return invalid_input(err, &e),
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        let _ = writeln!(err, "error: cannot create {}: {e}", args.out.display());
        return EXIT_INVALID;
    }
    let inst = &prep.instance;
    let hyp = &prep.hyp;
    let mut report = json!({
        "scenario_digest": scenario_digest(&prep.scenario),
        "certificate": certificate_summary(&prep.cert, hyp),
        "orbit": Value::Null,
        "audit": Value::Null,
    });

    let feasible = hyp.contraction_holds && hyp.orbit_product < 1.0;
    let code = if !feasible {
        let _ = writeln!(
            err,
            "hypothesis violation: alpha = {} with alpha_min = {} and alpha*q*s = {}",
            sig17(hyp.alpha),
            sig17(prep.cert.alpha_min),
            sig17(hyp.orbit_product)
        );
        EXIT_VIOLATION
    } else {
        let trace = match run_orbit(&inst.space, &inst.map, &inst.x0, &inst.orbit_config()) {
            Ok(t) => t,
            Err(e) => return invalid_input(err, &e),
        };
        let trace_path = match args.format {
            TraceFormat::Csv => args.out.join("trace.csv"),
            TraceFormat::Json => args.out.join("trace.json"),
        };
        let body = match args.format {
            TraceFormat::Csv => {
                let mut buf = Vec::new();
                write_trace_csv(&trace, &mut buf).expect("in-memory write");
                buf
            }
            TraceFormat::Json => {
                let mut s = serde_json::to_string_pretty(&trace).expect("serializable");
                s.push('\n');
                s.into_bytes()
            }
        };
        if let Err(e) = write_file(&trace_path, &body) {
            return invalid_input(err, &e);
        }
        let check = verify_fixed_point(&inst.space, &inst.map, trace.last(), inst.tol)
            .expect("trace points lie in the space");
        let code = match &trace.status {
            OrbitStatus::Converged => EXIT_OK,
            OrbitStatus::MaxIter => {
                let _ = writeln!(err, "iteration limit {} reached", inst.max_iter);
                EXIT_MAX_ITER
            }
            OrbitStatus::RatioViolation {
                step,
                step_distance,
                bound,
            } => {
                let _ = writeln!(
                    err,
                    "ratio violation at step {step}: {} is not below {}",
                    sig17(*step_distance),
                    sig17(*bound)
                );
                EXIT_VIOLATION
            }
        };
        report["orbit"] = json!({
            "status": trace.status,
            "iterations": trace.iterations(),
            "fixed_point": trace.fixed_point,
            "residual": trace.residual,
            "fixed_point_check": check,
            "beta": trace.beta,
            "gamma": trace.gamma,
            "cauchy": trace.cauchy_certificate(),
        });
        report["audit"] = to_value(&audit_trace(&inst.space, &trace));
        code
    };

    report["timing_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    let mut text = serde_json::to_string_pretty(&report).expect("serializable");
    text.push('\n');
    if let Err(e) = write_file(&args.out.join("report.json"), text.as_bytes()) {
        return invalid_input(err, &e);
    }
    code
}

pub fn cmd_verify(name: &str, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let prep = match resolve_scenario(name).and_then(prepare) {
        Ok(p) => p,
        Err(e) => return invalid_input(err, &e),
    };
    let inst = &prep.instance;
    let tol = inst.space.relative_tolerance(&inst.sample);
    let axioms = inst.space.verify_axioms(&inst.sample, tol);
    let doc = json!({
        "axioms": axioms,
        "certificate": prep.cert,
        "hypotheses": prep.hyp,
    });
    let _ = writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&doc).expect("serializable")
    );
    if !axioms.passed {
        let _ = writeln!(
            err,
            "axiom check failed with {} violation(s)",
            axioms.violations.len()
        );
    }
    if !prep.hyp.quasi_contraction {
        let _ = writeln!(err, "quasi-contraction condition does not hold");
    }
    if axioms.passed && prep.hyp.quasi_contraction {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

pub fn cmd_compare(name: &str, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let prep = match resolve_scenario(name).and_then(prepare) {
        Ok(p) => p,
        Err(e) => return invalid_input(err, &e),
    };
    let h = &prep.hyp;
    let yes_no = |b: bool| if b { "YES" } else { "NO" };
    let thm33_value = if h.contraction_holds {
        format!(
            "{} {} 1",
            sig17(h.quasi_product),
            if h.quasi_product < 1.0 { "<" } else { ">=" }
        )
    } else {
        format!(
            "alpha = {} < alpha_min = {}",
            sig17(h.alpha),
            sig17(prep.cert.alpha_min)
        )
    };
    let thm41_value = format!(
        "{} {} {}",
        sig17(h.alpha41_min),
        if h.five_term { "<=" } else { ">" },
        sig17(h.five_term_threshold)
    );
    let rows = [
        ("result", "condition", "value", "verdict"),
        (
            "thm33",
            "max{alpha*c*s, alpha*q*s} < 1",
            thm33_value.as_str(),
            yes_no(h.quasi_contraction),
        ),
        (
            "thm41",
            "alpha41 <= 1/(s+s^2)",
            thm41_value.as_str(),
            yes_no(h.five_term),
        ),
    ];
    let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
    let w2 = rows.iter().map(|r| r.2.len()).max().unwrap_or(0);
    let _ = writeln!(
        out,
        "s = {}, c = {}, q (d) = {}, alpha = {}, alpha_min = {}",
        sig17(h.s),
        sig17(h.c),
        sig17(h.q),
        sig17(h.alpha),
        sig17(prep.cert.alpha_min)
    );
    for (name, cond, value, verdict) in rows {
        let _ = writeln!(out, "{name:<7} {cond:<w1$}  {value:<w2$}  {verdict}");
    }
    let _ = err;
    EXIT_OK
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let gen = match random_finite(args.seed, args.points, args.p, args.alpha_cap) {
        Ok(g) => g,
        Err(e) => return invalid_input(err, &e),
    };
    let _ = writeln!(
        err,
        "accepted after {} candidate(s); alpha_min = {}",
        gen.attempts,
        sig17(gen.certificate.alpha_min)
    );
    match &args.out {
        Some(path) => match scenarios::save(&gen.scenario, path) {
            Ok(()) => EXIT_OK,
            Err(e) => invalid_input(err, &e),
        },
        None => {
            let _ = writeln!(out, "{}", gen.scenario.to_json());
            EXIT_OK
        }
    }
}
