//! The `npt` command line. [`run`] parses arguments, executes one subcommand
//! and returns the process exit code.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use npt_core::np_assembly::{assemble_block, Convention};
use npt_core::spectral_solver::{
    block_spectrum, block_spectrum_with_convergence, SpectrumReport, SPECTRUM_CSV_HEADER,
};
use npt_core::toroidal_functions::{ring_p, ring_q, RingFunctionValue, RingKind};
use npt_core::validation::{run_suites, Suite, ValidationConfig};
use npt_core::{NptError, TorusShape};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "npt",
    version,
    about = "Neumann-Poincaré spectra on a ring torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate ring functions P or Q of half-integer degree.
    Eval(EvalArgs),
    /// Assemble one azimuthal block and export it.
    Matrix(MatrixArgs),
    /// Eigenvalues of one or more blocks.
    Spectrum(SpectrumArgs),
    /// Run validation suites; exits 1 if any gating check fails.
    Validate(ValidateArgs),
    /// Spectra over a grid of tau0 values, as long-format CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Output {
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: RingKind,
    /// Order, a single value or a list such as `-2..2` or `0,3`.
    #[arg(long, allow_hyphen_values = true)]
    m: String,
    /// Degree index n of P/Q_{n-1/2}, same syntax as `--m`.
    #[arg(long, allow_hyphen_values = true)]
    n: String,
    /// Argument z > 1, a single value or `start:stop:count`.
    #[arg(long)]
    z: String,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct MatrixArgs {
    #[arg(long, allow_hyphen_values = true)]
    m: i64,
    #[arg(long = "N")]
    n_trunc: usize,
    #[arg(long)]
    tau0: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value = "operator", value_parser = parse_convention)]
    convention: Convention,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[arg(long, allow_hyphen_values = true)]
    m: String,
    #[arg(long = "N")]
    n_trunc: usize,
    #[arg(long)]
    tau0: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Also report the top-eigenvalue change against N-2.
    #[arg(long)]
    convergence: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// wronskian, symmetry, deriv, geometry, assembly, theorem-delta,
    /// spectrum, convergence, jump, oracle or all. May be repeated.
    #[arg(long, default_value = "all")]
    suite: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    tau0: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Quadrature nodes in sigma (poloidal).
    #[arg(long, default_value_t = 256)]
    n_sigma: usize,
    /// Quadrature nodes in phi (azimuthal).
    #[arg(long, default_value_t = 128)]
    n_phi: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// `start:stop:count` with inclusive endpoints, or a single value.
    #[arg(long)]
    tau0: String,
    #[arg(long, allow_hyphen_values = true)]
    m: String,
    #[arg(long = "N")]
    n_trunc: usize,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[command(flatten)]
    output: Output,
}

/// Settings shared by every subcommand, checked before any work starts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub a: f64,
    pub tau0: Vec<f64>,
    pub m_list: Vec<i64>,
    pub n_trunc: usize,
    pub n_sigma: usize,
    pub n_phi: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    fn new(a: f64, tau0: Vec<f64>, m_list: Vec<i64>, n_trunc: usize) -> Self {
        Self {
            a,
            tau0,
            m_list,
            n_trunc,
            n_sigma: 256,
            n_phi: 128,
            out: None,
            format: Format::Csv,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(format!("a must be positive, got {}", self.a));
        }
        if let Some(t) = self.tau0.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(format!("tau0 must be positive, got {t}"));
        }
        if self.n_trunc < 1 {
            return Err("N must be at least 1".into());
        }
        for (name, v) in [("n-sigma", self.n_sigma), ("n-phi", self.n_phi)] {
            if v < 32 || !v.is_power_of_two() {
                return Err(format!("{name} must be a power of two >= 32, got {v}"));
            }
        }
        Ok(())
    }
}

enum Failure {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl From<NptError> for Failure {
    fn from(e: NptError) -> Self {
        match e {
            NptError::InvalidArgument(msg) => Failure::Usage(msg),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

fn parse_kind(s: &str) -> Result<RingKind, String> {
    s.parse().map_err(|e: NptError| e.to_string())
}

fn parse_convention(s: &str) -> Result<Convention, String> {
    s.parse().map_err(|e: NptError| e.to_string())
}

/// `start:stop:count` with both endpoints included, or a single number.
pub fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number {t:?} in {s:?}"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [one] => Ok(vec![num(one)?]),
        [start, stop, count] => {
            let (start, stop) = (num(start)?, num(stop)?);
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| format!("bad count in {s:?}"))?;
            match count {
                0 => Err(format!("empty range {s:?}")),
                1 if start == stop => Ok(vec![start]),
                1 => Err(format!("a count of 1 needs start == stop in {s:?}")),
                _ => {
                    let step = (stop - start) / (count - 1) as f64;
                    Ok((0..count)
                        .map(|k| {
                            if k + 1 == count {
                                stop
                            } else {
                                start + k as f64 * step
                            }
                        })
                        .collect())
                }
            }
        }
        _ => Err(format!("expected start:stop:count, got {s:?}")),
    }
}

/// An inclusive `lo..hi`, a comma list, or a single integer.
pub fn parse_int_list(s: &str) -> Result<Vec<i64>, String> {
    let int = |t: &str| {
        t.trim()
            .parse::<i64>()
            .map_err(|_| format!("bad integer {t:?} in {s:?}"))
    };
    if let Some((lo, hi)) = s.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let (lo, hi) = (int(lo)?, int(hi)?);
        if lo > hi {
            return Err(format!("empty range {s:?}"));
        }
        return Ok((lo..=hi).collect());
    }
    let v = s.split(',').map(int).collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err(format!("empty list {s:?}"));
    }
    Ok(v)
}

pub fn parse_suites(names: &[String]) -> Result<Vec<Suite>, String> {
    let mut suites = Vec::new();
    for name in names {
        if name == "all" {
            suites.extend(Suite::ALL);
        } else {
            suites.push(name.parse().map_err(|e: NptError| e.to_string())?);
        }
    }
    let mut seen = Vec::new();
    suites.retain(|s| {
        let fresh = !seen.contains(s);
        seen.push(*s);
        fresh
    });
    Ok(suites)
}

/// Sets the global worker count from `NPT_THREADS`, if present.
fn configure_threads(var: Option<String>) -> Result<(), Failure> {
    let Some(raw) = var else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Usage(format!(
            "NPT_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    // A second call in the same process keeps the first pool, which is harmless.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports are plain data");
    s.push('\n');
    s
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome =
        configure_threads(std::env::var("NPT_THREADS").ok()).and_then(|()| dispatch(cli.command));
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            eprintln!("usage: npt <eval|matrix|spectrum|validate|sweep> [OPTIONS]; see npt --help");
            EXIT_USAGE
        }
        Err(Failure::Numerical(msg)) | Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Eval(args) => eval(args),
        Command::Matrix(args) => matrix(args),
        Command::Spectrum(args) => spectrum(args),
        Command::Validate(args) => validate(args),
        Command::Sweep(args) => sweep(args),
    }
}

#[derive(Serialize)]
struct EvalRow {
    kind: RingKind,
    m: i64,
    n: i64,
    z: f64,
    value: f64,
    est_abs_error: f64,
}

fn eval(args: EvalArgs) -> Result<i32, Failure> {
    let ms = parse_int_list(&args.m).map_err(Failure::Usage)?;
    let ns = parse_int_list(&args.n).map_err(Failure::Usage)?;
    let zs = parse_range(&args.z).map_err(Failure::Usage)?;
    let mut cases = Vec::new();
    for &m in &ms {
        for &n in &ns {
            for &z in &zs {
                cases.push((m, n, z));
            }
        }
    }
    let rows = cases
        .par_iter()
        .map(|&(m, n, z)| {
            let v: RingFunctionValue = match args.kind {
                RingKind::P => ring_p(m, n, z),
                RingKind::Q => ring_q(m, n, z),
            }
            .map_err(|e| Failure::Numerical(format!("{:?} m={m} n={n} z={z}: {e}", args.kind)))?;
            Ok(EvalRow {
                kind: args.kind,
                m,
                n,
                z,
                value: v.value,
                est_abs_error: v.est_abs_error,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let text = match args.format {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut s = String::from("kind,m,n,z,value,est_abs_error\n");
            for r in &rows {
                let kind = if r.kind == RingKind::P { "P" } else { "Q" };
                writeln!(
                    s,
                    "{kind},{},{},{:.16e},{:.16e},{:.3e}",
                    r.m, r.n, r.z, r.value, r.est_abs_error
                )
                .expect("writing to a String");
            }
            s
        }
    };
    emit(&args.output.out, &text)?;
    Ok(EXIT_OK)
}

fn matrix(args: MatrixArgs) -> Result<i32, Failure> {
    let cfg = RunConfig::new(args.a, vec![args.tau0], vec![args.m], args.n_trunc);
    cfg.validate().map_err(Failure::Usage)?;
    let shape = TorusShape::new(cfg.a, args.tau0)?;
    let block = assemble_block(args.m, args.n_trunc, &shape, args.convention)?;
    let text = match args.format {
        Format::Json => {
            let mut s = block.to_json();
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("m,N,n,l,value\n");
            let idx: Vec<i64> = block.indices().collect();
            for (i, &n) in idx.iter().enumerate() {
                for (j, &l) in idx.iter().enumerate() {
                    writeln!(
                        s,
                        "{},{},{n},{l},{:.16e}",
                        block.m,
                        block.n_trunc,
                        block.entries[(i, j)]
                    )
                    .expect("writing to a String");
                }
            }
            s
        }
    };
    emit(&args.output.out, &text)?;
    Ok(EXIT_OK)
}

fn spectra(
    ms: &[i64],
    n_trunc: usize,
    shape: &TorusShape,
    convergence: bool,
) -> Result<Vec<SpectrumReport>, Failure> {
    ms.par_iter()
        .map(|&m| {
            let r = if convergence {
                block_spectrum_with_convergence(m, n_trunc, shape)
            } else {
                block_spectrum(m, n_trunc, shape)
            };
            r.map_err(|e| {
                Failure::Numerical(format!(
                    "spectrum m={m} N={n_trunc} tau0={}: {e}",
                    shape.tau0()
                ))
            })
        })
        .collect()
}

fn spectrum(args: SpectrumArgs) -> Result<i32, Failure> {
    let ms = parse_int_list(&args.m).map_err(Failure::Usage)?;
    let cfg = RunConfig::new(args.a, vec![args.tau0], ms, args.n_trunc);
    cfg.validate().map_err(Failure::Usage)?;
    let shape = TorusShape::new(cfg.a, args.tau0)?;
    let reports = spectra(&cfg.m_list, cfg.n_trunc, &shape, args.convergence)?;
    let text = match args.format {
        Format::Json => json(&reports),
        Format::Csv => {
            let mut s = format!("{SPECTRUM_CSV_HEADER}\n");
            for r in &reports {
                r.write_csv_rows(&mut s);
            }
            s
        }
    };
    emit(&args.output.out, &text)?;
    Ok(EXIT_OK)
}

fn validate(args: ValidateArgs) -> Result<i32, Failure> {
    let suites = parse_suites(&args.suite).map_err(Failure::Usage)?;
    let mut run = RunConfig::new(args.a, vec![args.tau0], vec![0], 1);
    run.n_sigma = args.n_sigma;
    run.n_phi = args.n_phi;
    run.validate().map_err(Failure::Usage)?;
    let mut cfg = ValidationConfig {
        a: args.a,
        tau0: args.tau0,
        n_sigma: args.n_sigma,
        n_phi: args.n_phi,
        ..Default::default()
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let report = run_suites(&suites, &cfg)?;
    emit(&args.output.out, &json(&report))?;

    let mut summary = String::new();
    for s in &report.suites {
        writeln!(
            summary,
            "{:<14} {}",
            s.suite.name(),
            if s.passed { "ok" } else { "FAILED" }
        )
        .expect("String");
        for c in &s.checks {
            let status = match (c.gating, c.passed) {
                (false, _) => "recorded",
                (true, true) => "ok",
                (true, false) => "FAILED",
            };
            let op = if c.above { ">" } else { "<" };
            writeln!(
                summary,
                "  {status:<8} {}: {:.3e} ({op} {:.0e})",
                c.name, c.value, c.threshold
            )
            .expect("String");
        }
    }
    eprint!("{summary}");
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILURE })
}

fn sweep(args: SweepArgs) -> Result<i32, Failure> {
    let tau0 = parse_range(&args.tau0).map_err(Failure::Usage)?;
    let ms = parse_int_list(&args.m).map_err(Failure::Usage)?;
    let cfg = RunConfig::new(args.a, tau0, ms, args.n_trunc);
    cfg.validate().map_err(Failure::Usage)?;
    let mut cases = Vec::new();
    for &t in &cfg.tau0 {
        for &m in &cfg.m_list {
            cases.push((t, m));
        }
    }
    let mut rows = cases
        .par_iter()
        .map(|&(t, m)| {
            let shape = TorusShape::new(cfg.a, t)?;
            let r = spectra(&[m], cfg.n_trunc, &shape, false)?.remove(0);
            Ok(r.eigenvalues
                .iter()
                .enumerate()
                .map(|(k, e)| (t, m, k, e.re, e.im))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, Failure>>()?
        .concat();
    rows.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut s = String::from("tau0,m,index,re,im\n");
    for (t, m, k, re, im) in rows {
        writeln!(s, "{t:.16e},{m},{k},{re:.16e},{im:.16e}").expect("writing to a String");
    }
    emit(&args.output.out, &s)?;
    Ok(EXIT_OK)
}
