//! The `cloner` command line.
//!
//! Exit codes: 0 success, 1 failed verification, 2 usage error, 3 solver or
//! other runtime failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{
    alpha_grid, calibrated_operators, fidelity_bh, fidelity_global, fidelity_locc, params_for,
    CloneFamily, SchmidtAlpha,
};
use crate::channel::representative_state;
use crate::covariant::{TOperators, DEFAULT_TWIRL_SAMPLES, DEFAULT_TWIRL_SEED};
use crate::error::{Error, Result};
use crate::protocol::{average_fidelity, run_protocol_exact, run_protocol_sampled};
use crate::sdp::{detect_threshold, solve, SdpProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::verify::{format_line, run_all, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cloner", version, about = "Optimal 1->2 cloning of entangled two-qubit states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Local fidelities over a grid of Schmidt coefficients
    Sweep(SweepArgs),
    /// Nonzero parameters of the optimal LOCC operation
    Params(ParamsArgs),
    /// Run the acceptance checks
    Verify(VerifyArgs),
    /// Simulate the one-bit LOCC protocol
    Protocol(ProtocolArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Global,
    Bh,
    Locc,
    Sdp,
    SdpPpt,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Grid {
    /// Smallest alpha (decimal, or `max` for 1/sqrt(2))
    #[arg(long, default_value = "0", value_parser = parse_alpha)]
    alpha_min: f64,
    #[arg(long, default_value = "max", value_parser = parse_alpha)]
    alpha_max: f64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
}

#[derive(Debug, Args)]
struct Output {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Solver {
    /// Objective tolerance of the SDP solver
    #[arg(long, default_value_t = DEFAULT_TOL, value_parser = parse_tol)]
    tol: f64,
    /// Seed of the intertwiner construction and of sampled runs
    #[arg(long, env = "CLONER_SEED", default_value_t = DEFAULT_TWIRL_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    grid: Grid,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "global,bh,locc")]
    modes: Vec<Mode>,
    #[command(flatten)]
    output: Output,
    #[command(flatten)]
    solver: Solver,
}

#[derive(Debug, Args)]
struct ParamsArgs {
    #[command(flatten)]
    grid: Grid,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    solver: Solver,
}

#[derive(Debug, Args)]
struct ProtocolArgs {
    #[arg(long, default_value = "max", value_parser = parse_alpha)]
    alpha: f64,
    /// Monte Carlo trials; 0 runs the exact enumeration only
    #[arg(long, default_value_t = 0)]
    trials: usize,
    #[command(flatten)]
    output: Output,
    #[command(flatten)]
    solver: Solver,
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let x = if s.trim().eq_ignore_ascii_case("max") {
        SchmidtAlpha::MAX
    } else {
        s.trim().parse::<f64>().map_err(|e| e.to_string())?
    };
    SchmidtAlpha::new(x).map(SchmidtAlpha::value).map_err(|e| e.to_string())
}

fn parse_tol(s: &str) -> std::result::Result<f64, String> {
    let t: f64 = s.parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if t.is_finite() && t > 0.0 {
        Ok(t)
    } else {
        Err(format!("tolerance must be positive, got {s}"))
    }
}

/// 17 significant digits, positional unless the magnitude is extreme.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..=16).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, x)
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct Metadata {
    version: &'static str,
    seed: u64,
    tol: Option<f64>,
    sign_convention: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    kink_alpha: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Document<R> {
    metadata: Metadata,
    records: Vec<R>,
}

/// CSV header plus rows; the header names are the JSON field names.
trait Tabular: Serialize {
    const HEADER: &'static [&'static str];
    fn row(&self) -> Vec<String>;
}

#[derive(Debug, Serialize)]
pub struct SweepRecord {
    pub alpha: f64,
    pub f_global: Option<f64>,
    pub f_bh: Option<f64>,
    pub f_locc: Option<f64>,
    pub f_sdp: Option<f64>,
    pub f_sdp_ppt: Option<f64>,
    pub status: String,
}

impl Tabular for SweepRecord {
    const HEADER: &'static [&'static str] =
        &["alpha", "f_global", "f_bh", "f_locc", "f_sdp", "f_sdp_ppt", "status"];
    fn row(&self) -> Vec<String> {
        vec![
            fmt_f64(self.alpha),
            fmt_opt(self.f_global),
            fmt_opt(self.f_bh),
            fmt_opt(self.f_locc),
            fmt_opt(self.f_sdp),
            fmt_opt(self.f_sdp_ppt),
            self.status.clone(),
        ]
    }
}

/// The entries that can be nonzero on the LOCC family.
const PARAM_LABELS: [&str; 5] = ["a11", "a12", "a21", "a22", "a44"];

#[derive(Debug, Serialize)]
pub struct ParamRecord {
    pub alpha: f64,
    pub a11: Option<f64>,
    pub a12: Option<f64>,
    pub a21: Option<f64>,
    pub a22: Option<f64>,
    pub a44: Option<f64>,
}

impl Tabular for ParamRecord {
    const HEADER: &'static [&'static str] = &["alpha", "a11", "a12", "a21", "a22", "a44"];
    fn row(&self) -> Vec<String> {
        let mut r = vec![fmt_f64(self.alpha)];
        r.extend([self.a11, self.a12, self.a21, self.a22, self.a44].map(fmt_opt));
        r
    }
}

#[derive(Debug, Serialize)]
pub struct ProtocolRecord {
    pub kind: &'static str,
    pub alice_outcome: Option<usize>,
    pub classical_bit: Option<u8>,
    pub bob_outcome: Option<usize>,
    pub probability: Option<f64>,
    pub fidelity: f64,
    pub stderr: Option<f64>,
    pub trials: Option<usize>,
}

impl Tabular for ProtocolRecord {
    const HEADER: &'static [&'static str] = &[
        "kind",
        "alice_outcome",
        "classical_bit",
        "bob_outcome",
        "probability",
        "fidelity",
        "stderr",
        "trials",
    ];
    fn row(&self) -> Vec<String> {
        let int = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        vec![
            self.kind.to_string(),
            int(self.alice_outcome),
            self.classical_bit.map(|b| b.to_string()).unwrap_or_default(),
            int(self.bob_outcome),
            fmt_opt(self.probability),
            fmt_f64(self.fidelity),
            fmt_opt(self.stderr),
            int(self.trials),
        ]
    }
}

fn write_records<R: Tabular>(
    format: Format,
    metadata: Metadata,
    records: Vec<R>,
    sink: &mut dyn Write,
) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *sink);
            w.write_record(R::HEADER)?;
            for r in &records {
                w.write_record(r.row())?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *sink, &Document { metadata, records })?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn open_sink<'a>(out: &Option<PathBuf>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn check_grid(g: &Grid) -> std::result::Result<Vec<f64>, String> {
    if g.alpha_min > g.alpha_max {
        return Err(format!(
            "--alpha-min ({}) exceeds --alpha-max ({})",
            g.alpha_min, g.alpha_max
        ));
    }
    let n = g.steps as usize;
    if n == 1 && g.alpha_min != g.alpha_max {
        return Err("a single step needs --alpha-min equal to --alpha-max".into());
    }
    Ok(alpha_grid(g.alpha_min, g.alpha_max, n))
}

fn metadata(seed: u64, tol: Option<f64>, t: Option<&TOperators>) -> Metadata {
    Metadata {
        version: env!("CARGO_PKG_VERSION"),
        seed,
        tol,
        sign_convention: t.map_or("not used", |t| t.convention.describe()),
        kink_alpha: None,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render().ansi());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Sweep(a) => cmd_sweep(a, stdout, stderr),
        Command::Params(a) => cmd_params(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Protocol(a) => cmd_protocol(a, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_SOLVER
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult = std::result::Result<i32, CliError>;

fn cmd_sweep(a: SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let alphas = check_grid(&a.grid).map_err(CliError::Usage)?;
    let has = |m: Mode| a.modes.contains(&m);
    let needs_sdp = has(Mode::Sdp) || has(Mode::SdpPpt);
    let t = if needs_sdp {
        Some(calibrated_operators(DEFAULT_TWIRL_SAMPLES, a.solver.seed)?)
    } else {
        None
    };
    let tol = a.solver.tol;
    let records: Vec<SweepRecord> = alphas
        .par_iter()
        .map(|&x| {
            let al = SchmidtAlpha::new(x).expect("grid inside the domain");
            let mut failures = Vec::new();
            let mut sdp = |ppt: bool| -> Option<f64> {
                let t = t.as_ref()?;
                let r = SdpProblem::cloning(al, ppt, t)
                    .and_then(|p| solve(&p, tol, DEFAULT_MAX_ITER));
                match r {
                    Ok(s) => Some(s.f_star),
                    Err(e) => {
                        failures.push(format!("{}: {e}", if ppt { "sdp-ppt" } else { "sdp" }));
                        None
                    }
                }
            };
            let f_sdp = if has(Mode::Sdp) { sdp(false) } else { None };
            let f_sdp_ppt = if has(Mode::SdpPpt) { sdp(true) } else { None };
            SweepRecord {
                alpha: x,
                f_global: has(Mode::Global).then(|| fidelity_global(al)),
                f_bh: has(Mode::Bh).then(|| fidelity_bh(al)),
                f_locc: has(Mode::Locc).then(|| fidelity_locc(al)),
                f_sdp,
                f_sdp_ppt,
                status: if failures.is_empty() {
                    "ok".into()
                } else {
                    format!("solver_failure ({})", failures.join("; "))
                },
            }
        })
        .collect();

    let failed = records.iter().filter(|r| r.status != "ok").count();
    let mut meta = metadata(a.solver.seed, needs_sdp.then_some(tol), t.as_ref());
    if has(Mode::SdpPpt) && failed == 0 {
        let curve: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| r.f_sdp_ppt.map(|f| (r.alpha, f)))
            .collect();
        match detect_threshold(&curve) {
            Ok(k) => {
                writeln!(stderr, "kink in the PPT optimum at alpha = {k:.5}")?;
                meta.kink_alpha = Some(k);
            }
            Err(e) => writeln!(stderr, "{e}")?,
        }
    }
    let mut sink = open_sink(&a.output.out, stdout)?;
    write_records(a.output.format, meta, records, &mut sink)?;
    if failed > 0 {
        writeln!(stderr, "error: solver failed on {failed} grid point(s)")?;
        return Ok(EXIT_SOLVER);
    }
    Ok(EXIT_OK)
}

fn cmd_params(a: ParamsArgs, stdout: &mut dyn Write) -> CliResult {
    let alphas = check_grid(&a.grid).map_err(CliError::Usage)?;
    let mut records = Vec::with_capacity(alphas.len());
    for x in alphas {
        let p = params_for(CloneFamily::LoccOptimal, SchmidtAlpha::new(x)?);
        let mut entries = [None; 5];
        for (label, value) in p.nonzero_entries() {
            let k = PARAM_LABELS
                .iter()
                .position(|l| *l == label)
                .ok_or_else(|| Error::UnknownLabel(label.clone()))?;
            entries[k] = Some(value);
        }
        let [a11, a12, a21, a22, a44] = entries;
        records.push(ParamRecord { alpha: x, a11, a12, a21, a22, a44 });
    }
    let mut sink = open_sink(&a.output.out, stdout)?;
    write_records(a.output.format, metadata(DEFAULT_TWIRL_SEED, None, None), records, &mut sink)?;
    Ok(EXIT_OK)
}

fn cmd_verify(a: VerifyArgs, stdout: &mut dyn Write) -> CliResult {
    let cfg = VerifyConfig { tol: a.solver.tol, seed: a.solver.seed };
    let results = run_all(&cfg)?;
    for c in &results {
        writeln!(stdout, "{}", format_line(c))?;
    }
    let passed = results.iter().filter(|c| c.passed).count();
    writeln!(stdout, "{passed}/{} checks passed", results.len())?;
    Ok(if passed == results.len() { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_protocol(a: ProtocolArgs, stdout: &mut dyn Write) -> CliResult {
    let al = SchmidtAlpha::new(a.alpha)?;
    let rho = representative_state(al).projector();
    let branches = run_protocol_exact(al, &rho)?;
    let mut records: Vec<ProtocolRecord> = branches
        .iter()
        .map(|b| ProtocolRecord {
            kind: "branch",
            alice_outcome: Some(b.alice_outcome),
            classical_bit: Some(b.classical_bit),
            bob_outcome: Some(b.bob_outcome),
            probability: Some(b.joint_probability),
            fidelity: b.clone_fidelity,
            stderr: None,
            trials: None,
        })
        .collect();
    let blank = |kind, fidelity| ProtocolRecord {
        kind,
        alice_outcome: None,
        classical_bit: None,
        bob_outcome: None,
        probability: None,
        fidelity,
        stderr: None,
        trials: None,
    };
    records.push(blank("exact_average", average_fidelity(&branches)));
    if a.trials > 0 {
        let (f, se) = run_protocol_sampled(al, &rho, a.trials, a.solver.seed)?;
        records.push(ProtocolRecord {
            stderr: Some(se),
            trials: Some(a.trials),
            ..blank("sampled_average", f)
        });
    }
    let meta = metadata(a.solver.seed, None, None);
    let mut sink = open_sink(&a.output.out, stdout)?;
    write_records(a.output.format, meta, records, &mut sink)?;
    Ok(EXIT_OK)
}
