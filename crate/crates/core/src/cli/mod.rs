//! Command-line front end.
//!
//! `solve <file>` runs one algorithm on a problem file, `oracle <file>`
//! enumerates its binary assignments and `bench <suite>` compares the
//! algorithms on a built-in suite. Exit status is 0 on success, 1 when no
//! solution was found or a limit stopped the search, and 2 for usage, file
//! and parse errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::bench::{brute_force_solve, run_benchmark, BenchError, BenchOptions, OracleResult, StartStrategy, Suite};
use crate::bnb::{solve_minlp, Algorithm, BnbError, BnbOptions, SolveReport, SolveStatus};
use crate::model::{parse_problem, MinlpProblem, ParseError};
use crate::nlp::NlpStatus;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_SOLUTION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("invalid start point in `{path}`: {reason}")]
    StartFile { path: PathBuf, reason: String },
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Bnb(#[from] BnbError),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Bnb(BnbError::StartLength { .. } | BnbError::Options(_)) => EXIT_USAGE,
            CliError::Bnb(_) | CliError::Output(_) => EXIT_NO_SOLUTION,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hcbb", version, about = "Homotopy-continuation branch and bound for MINLP")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file.
    Solve {
        file: PathBuf,
        #[arg(long, default_value = "hcbb-rb", value_parser = parse_algorithm)]
        algorithm: Algorithm,
        #[command(flatten)]
        knobs: Knobs,
        #[command(flatten)]
        common: Common,
        /// Include the per-node trace in the report.
        #[arg(long)]
        trace: bool,
    },
    /// Enumerate every binary assignment of a problem file.
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        multistarts: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Compare algorithms on a built-in suite.
    Bench {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
        /// Comma-separated list.
        #[arg(long, default_value = "bb,hcbb-fp,hcbb-rb", value_delimiter = ',', value_parser = parse_algorithm)]
        algorithm: Vec<Algorithm>,
        #[command(flatten)]
        knobs: Knobs,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        multistarts: u64,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct Common {
    /// `midpoint`, `file:<path>` or `random:<seed>`; repeatable for bench.
    #[arg(long, default_value = "midpoint", value_parser = parse_start)]
    start: Vec<StartArg>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    output: OutputFormat,
}

#[derive(Debug, Args)]
pub struct Knobs {
    /// Smallest homotopy step before a path stalls.
    #[arg(long, default_value_t = 0.01, value_parser = open_unit)]
    dt_min: f64,
    /// Parent-value gap for reusing an earlier step schedule.
    #[arg(long, default_value_t = 0.1, value_parser = positive)]
    delta_match: f64,
    #[arg(long, default_value_t = 1e-5, value_parser = integrality)]
    int_tol: f64,
    /// Step budget of one homotopy path.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(2..))]
    max_steps: u64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    node_limit: u64,
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 3600.0, value_parser = positive)]
    time_limit: f64,
}

impl Knobs {
    pub fn to_options(&self) -> BnbOptions {
        let mut opts = BnbOptions {
            int_tol: self.int_tol,
            node_limit: self.node_limit as usize,
            time_limit_seconds: self.time_limit,
            post_time_limit_seconds: self.time_limit,
            ..BnbOptions::default()
        };
        opts.homotopy.dt_min = self.dt_min;
        opts.homotopy.delta = self.delta_match;
        opts.homotopy.n_max = self.max_steps as usize;
        opts
    }
}

#[derive(Debug, Clone, PartialEq)]
enum StartArg {
    Midpoint,
    File(PathBuf),
    Random(u64),
}

fn parse_start(s: &str) -> Result<StartArg, String> {
    if s == "midpoint" {
        return Ok(StartArg::Midpoint);
    }
    if let Some(path) = s.strip_prefix("file:") {
        return Ok(StartArg::File(PathBuf::from(path)));
    }
    if let Some(seed) = s.strip_prefix("random:") {
        return seed.parse().map(StartArg::Random).map_err(|e| format!("bad seed `{seed}`: {e}"));
    }
    Err(format!("expected midpoint, file:<path> or random:<seed>, got `{s}`"))
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse::<Algorithm>().map_err(|e| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse::<Suite>().map_err(|e| e.to_string())
}

fn number(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"))
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v < 1.0 { Ok(v) } else { Err(format!("{v} must lie strictly between 0 and 1")) }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v.is_finite() { Ok(v) } else { Err(format!("{v} must be positive")) }
}

fn integrality(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v < 0.5 { Ok(v) } else { Err(format!("{v} must lie strictly between 0 and 0.5")) }
}

fn read_problem(path: &Path) -> Result<MinlpProblem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    parse_problem(&text).map_err(|source| CliError::Parse { path: path.into(), source })
}

/// Reads whitespace- or comma-separated numbers.
fn read_point(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|e| CliError::StartFile { path: path.into(), reason: format!("`{t}`: {e}") })
        })
        .collect()
}

fn resolve_start(arg: &StartArg) -> Result<StartStrategy, CliError> {
    Ok(match arg {
        StartArg::Midpoint => StartStrategy::Midpoint,
        StartArg::File(p) => StartStrategy::Point(read_point(p)?),
        StartArg::Random(seed) => StartStrategy::Random(*seed),
    })
}

fn single_start(common: &Common, prob: &MinlpProblem) -> Result<Vec<f64>, CliError> {
    let arg = common.start.last().unwrap_or(&StartArg::Midpoint);
    Ok(resolve_start(arg)?.resolve(prob)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.9}"))
}

pub fn solve_table(report: &SolveReport, prob: &MinlpProblem) -> String {
    let mut out = String::new();
    let rows = [
        ("algorithm", report.algorithm.to_string()),
        ("status", format!("{:?}", report.status).to_lowercase()),
        ("objective", fmt_opt(report.objective)),
        ("found_at_node", report.found_at_node.map_or_else(|| "-".into(), |n| n.to_string())),
        ("n_node", report.n_node.to_string()),
        ("n_inf", report.n_inf.to_string()),
        ("n_nlp", report.n_nlp.to_string()),
        ("n_nlp_post", report.n_nlp_post.to_string()),
        ("n_inf_post", report.n_inf_post.to_string()),
        ("t_post", format!("{:.3}", report.t_post_seconds)),
        ("wall", format!("{:.3}", report.wall_seconds)),
    ];
    for (k, v) in rows {
        out.push_str(&format!("{k:<14}{v}\n"));
    }
    if let Some(point) = &report.point {
        let width = prob.names().iter().map(String::len).max().unwrap_or(0);
        for (name, value) in prob.names().iter().zip(point) {
            out.push_str(&format!("  {name:<width$}  {value:.9}\n"));
        }
    }
    out
}

pub fn oracle_table(result: &OracleResult) -> String {
    let mut out = format!("objective   {}\n", fmt_opt(result.objective));
    let assignment = result
        .assignment
        .as_ref()
        .map_or_else(|| "-".into(), |a| a.iter().map(u8::to_string).collect::<Vec<_>>().join(""));
    out.push_str(&format!("assignment  {assignment}\nnlp_solves  {}\n", result.nlp_solves));
    for a in &result.assignments {
        let bits: String = a.assignment.iter().map(u8::to_string).collect();
        out.push_str(&format!("  {bits:<8}  {:<15}  {}\n", format!("{:?}", a.status), fmt_opt(a.objective)));
    }
    out
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve { file, algorithm, knobs, common, trace } => {
            let prob = read_problem(&file)?;
            let start = single_start(&common, &prob)?;
            let opts = BnbOptions { record_trace: trace, ..knobs.to_options() };
            let report = solve_minlp(&prob, algorithm, &start, &opts)?;
            match common.output {
                OutputFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))?,
                OutputFormat::Table => write!(out, "{}", solve_table(&report, &prob))?,
            }
            Ok(if report.status == SolveStatus::Optimal { EXIT_OK } else { EXIT_NO_SOLUTION })
        }
        Command::Oracle { file, multistarts, common } => {
            let prob = read_problem(&file)?;
            let result = brute_force_solve(&prob, multistarts as usize, &Default::default())?;
            match common.output {
                OutputFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&result).expect("result serializes"))?,
                OutputFormat::Table => write!(out, "{}", oracle_table(&result))?,
            }
            let any_optimal = result.assignments.iter().any(|a| a.status == NlpStatus::Optimal);
            Ok(if any_optimal { EXIT_OK } else { EXIT_NO_SOLUTION })
        }
        Command::Bench { suite, algorithm, knobs, common, multistarts, jobs } => {
            let starts = common.start.iter().map(resolve_start).collect::<Result<Vec<_>, _>>()?;
            let opts = BenchOptions { bnb: knobs.to_options(), multistarts: multistarts as usize, starts, jobs };
            let report = run_benchmark(&suite.instances(), &algorithm, &opts)?;
            match common.output {
                OutputFormat::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))?,
                OutputFormat::Table => write!(out, "{}", report.to_table())?,
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{rendered}") } else { write!(out, "{rendered}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
