//! `mbvp` command-line driver: `solve`, `check`, `lambda1`, `matrix` and
//! `study`.
//!
//! Exit codes: 0 on success, 1 when the solver does not converge, 2 for
//! configuration, parse and I/O errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use mbvp_core::analysis::{lambda1_estimate, lambda1_reference, Lambda1Method};
use mbvp_core::boundary::{build_boundary, BoundaryKind, BoundaryParams};
use mbvp_core::collocation::{Grid, SolveError};
use mbvp_core::matrices::{
    apriori_bound_iv, eigenvalue_test, inverse_i_minus_m, is_convergent_to_zero, neumann_series_test,
    nonnegative_inverse_test, power_test, ConvMatrix,
};
use mbvp_core::nonlinear::{solve_system, verify_report, SolveOptions};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigDocument, ConfigError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_CONVERGENCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Environment variable overriding the sampling seed.
pub const SEED_VAR: &str = "MBVP_SEED";

#[derive(Debug, Parser)]
#[command(name = "mbvp", version, about = "Relativistic-operator boundary value problems with monotone boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a problem; writes solution.csv and report.json.
    Solve {
        config: PathBuf,
        /// Output directory (overrides the config's "output").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify the hypotheses of a problem without solving; writes report.json.
    Check {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First eigenvalue-like constant of a boundary condition.
    Lambda1 {
        #[arg(long)]
        bc: String,
        #[arg(long = "T")]
        t_end: f64,
        #[arg(long = "N", default_value_t = 400)]
        intervals: usize,
        #[arg(long, default_value_t = 1)]
        q: usize,
    },
    /// Convergence-to-zero diagnostics of a nonnegative 2x2 matrix.
    Matrix {
        /// Row-major entries a,b,c,d.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        entries: Vec<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long = "T")]
        t_end: Option<f64>,
    },
    /// Grid-refinement study against a fine reference; writes study.csv.
    Study {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error("{0}")]
    Solve(SolveError),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Solve(_) => EXIT_NO_CONVERGENCE,
            _ => EXIT_CONFIG,
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let seed = match std::env::var(SEED_VAR) {
        Ok(s) => match s.trim().parse::<u64>() {
            Ok(v) => Some(v),
            Err(_) => {
                eprintln!("error: {SEED_VAR}={s:?} is not an unsigned integer");
                return EXIT_CONFIG;
            }
        },
        Err(_) => None,
    };
    match dispatch(cli.command, seed) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, seed: Option<u64>) -> Result<(), CliError> {
    match command {
        Command::Solve { config, out } => solve(&config, out, seed),
        Command::Check { config, out } => check(&config, out, seed),
        Command::Lambda1 { bc, t_end, intervals, q } => lambda1(&bc, t_end, intervals, q),
        Command::Matrix { entries, delta, t_end } => matrix(&entries, delta, t_end),
        Command::Study { config, out } => study(&config, out),
    }
}

fn output_dir(doc: &ConfigDocument, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = flag.or_else(|| doc.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Output { path: dir.clone(), message: e.to_string() })?;
    Ok(dir)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Output { path: path.into(), message: e.to_string() })
}

fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn solve(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let doc = config::load(path)?;
    let prob = doc.problem()?;
    let opts = doc.solve_options();
    let sbox = doc.sample_box(seed);
    let cert = report::certify(&doc, &prob, &sbox)?;
    let dir = output_dir(&doc, out)?;

    let solved = solve_system(&prob, &opts).map_err(CliError::Solve)?;
    let checklist = verify_report(&prob, &solved, cert.constants.as_ref(), opts.tol);
    let csv_path = dir.join("solution.csv");
    report::write_solution_csv(&csv_path, &solved)
        .map_err(|e| CliError::Output { path: csv_path.clone(), message: e.to_string() })?;
    let rep = report::SolveSummary::new(&doc, &sbox, &solved, &checklist, cert.summary);
    write_file(&dir.join("report.json"), &to_json(&rep))?;
    println!(
        "converged ({}, {} iterations): residual {:.2e}, |(u,v)| = {:.6}, case {}{}",
        solved.strategy.name(),
        solved.iterations,
        solved.ode_res.max(solved.bc_res),
        solved.norms.total,
        checklist.case.name(),
        checklist.bound.map(|b| format!(" bound {b:.6} ({})", if checklist.bound_ok { "ok" } else { "VIOLATED" })).unwrap_or_default()
    );
    Ok(())
}

fn check(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let doc = config::load(path)?;
    let prob = doc.problem()?;
    let sbox = doc.sample_box(seed);
    let cert = report::certify(&doc, &prob, &sbox)?;
    let dir = output_dir(&doc, out)?;
    let rep = report::CheckSummary::new(&doc, &sbox, cert.summary);
    write_file(&dir.join("report.json"), &to_json(&rep))?;
    println!(
        "case {}{}",
        rep.certification.case,
        rep.certification.bound.map(|b| format!(", bound {b:.6}")).unwrap_or_default()
    );
    Ok(())
}

#[derive(Serialize)]
struct Lambda1Output {
    bc: String,
    #[serde(rename = "T")]
    t_end: f64,
    #[serde(rename = "N")]
    intervals: usize,
    value: f64,
    method: &'static str,
    reference: Option<f64>,
}

fn lambda1(bc: &str, t_end: f64, intervals: usize, q: usize) -> Result<(), CliError> {
    let kind = BoundaryKind::from_name(bc).ok_or_else(|| CliError::Usage(format!("--bc: unknown boundary kind '{bc}'")))?;
    if !(t_end > 0.0) || intervals < 2 || q == 0 {
        return Err(CliError::Usage("need --T > 0, --N >= 2 and --q >= 1".into()));
    }
    let bop = build_boundary(kind, q, BoundaryParams::None)
        .map_err(|e| CliError::Usage(format!("--bc {bc}: {e}; parameterized kinds need a config file")))?;
    let est = lambda1_estimate(&bop, t_end, intervals).map_err(|e| CliError::Usage(e.to_string()))?;
    let out = Lambda1Output {
        bc: kind.name().into(),
        t_end,
        intervals,
        value: est.value,
        method: method_name(est.method),
        reference: lambda1_reference(bop.domain(), t_end),
    };
    println!("{}", serde_json::to_string(&out).expect("serializable"));
    Ok(())
}

pub(crate) fn method_name(m: Lambda1Method) -> &'static str {
    match m {
        Lambda1Method::Analytic => "Analytic",
        Lambda1Method::EigFd => "EigFD",
    }
}

#[derive(Serialize)]
struct MatrixOutput {
    entries: [[f64; 2]; 2],
    spectral_radius: f64,
    convergent: bool,
    power: bool,
    neumann_series: bool,
    eigenvalue: bool,
    nonnegative_inverse: bool,
    inverse_i_minus_m: Option<[[f64; 2]; 2]>,
    bound: Option<BoundOutput>,
}

#[derive(Serialize)]
struct BoundOutput {
    beta_u: f64,
    beta_v: f64,
    total: f64,
}

fn matrix(entries: &[f64], delta: Option<f64>, t_end: Option<f64>) -> Result<(), CliError> {
    let [a, b, c, d] = entries else {
        return Err(CliError::Usage(format!("--entries needs 4 values, got {}", entries.len())));
    };
    let m = ConvMatrix::new([[*a, *b], [*c, *d]]).map_err(|e| CliError::Usage(format!("--entries: {e}")))?;
    let (convergent, rho) = is_convergent_to_zero(&m);
    let bound = match (delta, t_end) {
        (Some(delta), Some(t)) if convergent => {
            let r = apriori_bound_iv(&m, delta, t).map_err(|e| CliError::Usage(e.to_string()))?;
            Some(BoundOutput { beta_u: r.beta_u, beta_v: r.beta_v, total: r.total })
        }
        (None, None) => None,
        (Some(_), Some(_)) => None,
        _ => return Err(CliError::Usage("--delta and --T go together".into())),
    };
    let out = MatrixOutput {
        entries: *m.entries(),
        spectral_radius: rho,
        convergent,
        power: power_test(&m),
        neumann_series: neumann_series_test(&m),
        eigenvalue: eigenvalue_test(&m),
        nonnegative_inverse: nonnegative_inverse_test(&m),
        inverse_i_minus_m: inverse_i_minus_m(&m).ok(),
        bound,
    };
    println!("{}", serde_json::to_string(&out).expect("serializable"));
    Ok(())
}

fn study(path: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let doc = config::load(path)?;
    let prob = doc.problem()?;
    let spec = &doc.study;
    if spec.levels.is_empty() {
        return Err(ConfigError::Invalid { key: "study.levels".into(), message: "empty".into() }.into());
    }
    for &n in spec.levels.iter().chain([&spec.reference]) {
        Grid::new(doc.t_end, n)
            .map_err(|e| ConfigError::Invalid { key: "study".into(), message: e.to_string() })?;
        if spec.reference % n != 0 {
            return Err(ConfigError::Invalid {
                key: "study.reference".into(),
                message: format!("{} is not a multiple of level {n}", spec.reference),
            }
            .into());
        }
    }
    let dir = output_dir(&doc, out)?;
    let base = doc.solve_options();
    let mut all: Vec<usize> = spec.levels.clone();
    all.push(spec.reference);
    let solved: Vec<_> = all
        .par_iter()
        .map(|&n| solve_system(&prob, &SolveOptions { intervals: n, ..base }))
        .collect();
    let mut solved = solved.into_iter().collect::<Result<Vec<_>, _>>().map_err(CliError::Solve)?;
    let reference = solved.pop().expect("reference level");

    let rows = report::study_rows(&spec.levels, &solved, &reference);
    let csv_path = dir.join("study.csv");
    report::write_study_csv(&csv_path, &rows).map_err(|e| CliError::Output { path: csv_path, message: e.to_string() })?;
    for r in &rows {
        println!(
            "N={:<6} error={:.3e}{}",
            r.intervals,
            r.error,
            r.order.map(|p| format!("  order={p:.3}")).unwrap_or_default()
        );
    }
    Ok(())
}
