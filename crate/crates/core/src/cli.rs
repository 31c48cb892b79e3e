//! Command-line front end.
//!
//! Three subcommands share one set of options: `simulate` writes Euler
//! trajectories, `compare-exact` writes the per-node MSE against the closed
//! form and `convergence` writes terminal MSEs across step sizes with the
//! fitted order. Options may also come from a `key=value` file given with
//! `--config`; flags on the command line win.
//!
//! Every CSV starts with a `#` line recording the command and its parameters.
//! Floats use Rust's shortest round-trip formatting.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::euler::euler_solve;
use crate::grid::build_grid;
use crate::model::BuiltinProblem;
use crate::montecarlo::{convergence_study, estimate_mse_with, MseOptions, Reference};
use crate::paths::sample_path;

/// Environment variable capping the worker threads; `0` or unset means automatic.
pub const THREADS_ENV: &str = "NOISYMEM_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "noisymem", version, about = "Euler–Maruyama simulation of SDEs with noisy memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate Euler trajectories and write time,path_id,euler_x,euler_z.
    Simulate(Options),
    /// Per-node mean-square error of the Euler scheme against the closed form.
    CompareExact(Options),
    /// Terminal mean-square error across step sizes and the fitted order.
    Convergence(Options),
}

#[derive(Debug, Args, Default)]
struct Options {
    /// key=value file with default option values
    #[arg(long)]
    config: Option<PathBuf>,
    /// paper-example or pure-memory-drift
    #[arg(long)]
    problem: Option<String>,
    /// memory span δ
    #[arg(long)]
    delta: Option<f64>,
    /// terminal time T (defaults to δ)
    #[arg(long)]
    horizon: Option<f64>,
    /// number of Euler steps N (Δt = T/N)
    #[arg(long)]
    n_steps: Option<usize>,
    /// step counts for the convergence study, e.g. 512,256,128 for Δt = T/512, …
    #[arg(long, value_delimiter = ',')]
    dts: Option<Vec<usize>>,
    /// number of Monte Carlo paths
    #[arg(long)]
    paths: Option<usize>,
    /// base seed; path p uses seed + p
    #[arg(long)]
    seed: Option<u64>,
    /// output CSV (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// also write a gnuplot script plotting the CSV
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    CompareExact,
    Convergence,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::CompareExact => "compare-exact",
            CommandKind::Convergence => "convergence",
        }
    }
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub problem: BuiltinProblem,
    pub delta: f64,
    pub horizon: f64,
    pub n_steps: Option<usize>,
    pub step_counts: Option<Vec<usize>>,
    pub n_paths: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub plot_path: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NumericalBlowup { .. } => CliError::Runtime(e.to_string()),
            Error::Parameter(_) | Error::Model(_) => CliError::Usage(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

const CONFIG_KEYS: &[&str] =
    &["problem", "delta", "horizon", "n-steps", "dts", "paths", "seed", "out", "plot"];

/// Parses the flat `key=value` format: one pair per line, `#` starts a comment
/// line, keys may use `-` or `_`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, got '{line}'", lineno + 1))?;
        let key = key.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(format!("line {}: unknown key '{key}'", lineno + 1));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn from_config<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, CliError> {
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|_| usage(format!("config: invalid value '{v}' for '{key}'"))))
        .transpose()
}

fn resolve(command: CommandKind, opts: Options) -> Result<ExperimentConfig, CliError> {
    let file = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?
        }
        None => BTreeMap::new(),
    };
    let config_dts = match file.get("dts") {
        Some(v) => Some(
            v.split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| usage(format!("config: invalid value '{v}' for 'dts'")))?,
        ),
        None => None,
    };

    let problem_name = opts.problem.or_else(|| file.get("problem").cloned());
    let problem = match problem_name {
        Some(name) => name.parse::<BuiltinProblem>()?,
        None => BuiltinProblem::PaperExample,
    };
    let delta = opts
        .delta
        .or(from_config(&file, "delta")?)
        .ok_or_else(|| usage("--delta is required"))?;
    let horizon = opts.horizon.or(from_config(&file, "horizon")?).unwrap_or(delta);
    let n_steps = opts.n_steps.or(from_config(&file, "n-steps")?);
    let step_counts = opts.dts.or(config_dts);
    let n_paths = opts.paths.or(from_config(&file, "paths")?).unwrap_or(1);
    let seed = opts.seed.or(from_config(&file, "seed")?).unwrap_or(0);
    let output_path = opts.out.or(from_config(&file, "out")?);
    let plot_path = opts.plot.or(from_config(&file, "plot")?);

    match command {
        CommandKind::Simulate | CommandKind::CompareExact if n_steps.is_none() => {
            return Err(usage(format!("{} requires --n-steps", command.name())))
        }
        CommandKind::Convergence if step_counts.as_ref().is_none_or(|d| d.len() < 2) => {
            return Err(usage("convergence requires --dts with at least two step counts"))
        }
        _ => {}
    }
    if command != CommandKind::Simulate {
        if problem != BuiltinProblem::PaperExample {
            return Err(usage(format!("{} is only available for paper-example", command.name())));
        }
        if horizon != delta {
            return Err(usage("the closed-form reference needs --horizon equal to --delta"));
        }
    }
    if n_paths == 0 || (command != CommandKind::Simulate && n_paths < 2) {
        return Err(usage(format!("{} needs more paths, got {n_paths}", command.name())));
    }
    Ok(ExperimentConfig {
        command,
        problem,
        delta,
        horizon,
        n_steps,
        step_counts,
        n_paths,
        seed,
        output_path,
        plot_path,
    })
}

fn provenance(cfg: &ExperimentConfig) -> String {
    let mut line = format!(
        "# command={} problem={} delta={} horizon={}",
        cfg.command.name(),
        cfg.problem,
        cfg.delta,
        cfg.horizon
    );
    if let Some(n) = cfg.n_steps {
        let _ = write!(line, " n_steps={n}");
    }
    if let Some(d) = &cfg.step_counts {
        let joined: Vec<String> = d.iter().map(|n| n.to_string()).collect();
        let _ = write!(line, " dts={}", joined.join(","));
    }
    let _ = write!(line, " paths={} seed={}", cfg.n_paths, cfg.seed);
    line.push('\n');
    line
}

fn simulate_csv(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let problem = cfg.problem.realize(cfg.delta, cfg.horizon)?;
    let n = cfg.n_steps.expect("validated");
    let grid = build_grid(problem.delay(), problem.horizon(), n)?;
    let mut out = provenance(cfg);
    out.push_str("time,path_id,euler_x,euler_z\n");
    for p in 0..cfg.n_paths {
        let path = sample_path(&grid, cfg.seed.wrapping_add(p as u64));
        let tr = euler_solve(&problem, &grid, &path)?;
        for ((t, x), z) in grid.positive_times().iter().zip(tr.positive_states()).zip(tr.memories()) {
            let _ = writeln!(out, "{t},{p},{x},{z}");
        }
    }
    Ok(out)
}

fn compare_exact_csv(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let problem = cfg.problem.realize(cfg.delta, cfg.horizon)?;
    let grid = build_grid(cfg.delta, cfg.delta, cfg.n_steps.expect("validated"))?;
    let curve = estimate_mse_with(&problem, &grid, cfg.n_paths, cfg.seed, &Reference::Exact, &MseOptions::default())?;
    let mut out = provenance(cfg);
    out.push_str("time,mse,std_err\n");
    for ((t, m), s) in curve.times.iter().zip(&curve.mse).zip(&curve.std_errors) {
        let _ = writeln!(out, "{t},{m},{s}");
    }
    Ok(out)
}

fn convergence_csv(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let problem = cfg.problem.realize(cfg.delta, cfg.horizon)?;
    let counts = cfg.step_counts.as_ref().expect("validated");
    let report = convergence_study(&problem, counts, cfg.n_paths, cfg.seed)?;
    let mut out = provenance(cfg);
    out.push_str("dt,mse,std_err\n");
    for ((dt, m), s) in report.dts.iter().zip(&report.terminal_mse).zip(&report.std_errors) {
        let _ = writeln!(out, "{dt},{m},{s}");
    }
    let _ = writeln!(
        out,
        "# fitted_order_mse={} slope_std_err={} fitted_order_rms={}",
        report.fitted_order_mse, report.confidence, report.fitted_order_rms
    );
    Ok(out)
}

/// Gnuplot script for the CSV written by `command`.
pub fn gnuplot_script(command: CommandKind, data: &Path) -> String {
    let data = data.display();
    let body = match command {
        CommandKind::Simulate => format!(
            "set xlabel 't'\nset ylabel 'X'\nplot '{data}' using 1:3 with dots title 'Euler paths'\n"
        ),
        CommandKind::CompareExact => format!(
            "set xlabel 't'\nset ylabel 'mean-square error'\n\
             plot '{data}' using 1:2 with lines dashtype 2 title 'MSE', \\\n     \
             '' using 1:2:3 with yerrorbars notitle\n"
        ),
        CommandKind::Convergence => format!(
            "set logscale xy\nset xlabel 'dt'\nset ylabel 'terminal MSE'\n\
             plot '{data}' using 1:2:3 with yerrorlines title 'Euler', x title 'slope 1'\n"
        ),
    };
    format!("set datafile separator ','\nset key autotitle columnhead\n{body}")
}

fn thread_count() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'"))),
        _ => Ok(0),
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let threads = thread_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    let csv = pool.install(|| match cfg.command {
        CommandKind::Simulate => simulate_csv(cfg),
        CommandKind::CompareExact => compare_exact_csv(cfg),
        CommandKind::Convergence => convergence_csv(cfg),
    })?;

    match &cfg.output_path {
        Some(path) => fs::write(path, csv)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    if let Some(plot) = &cfg.plot_path {
        let data = cfg.output_path.as_deref().unwrap_or(Path::new("-"));
        fs::write(plot, gnuplot_script(cfg.command, data))
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", plot.display())))?;
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code: 0 on success, 2 for usage errors, 1 for runtime failures.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (kind, opts) = match cli.command {
        Command::Simulate(o) => (CommandKind::Simulate, o),
        Command::CompareExact(o) => (CommandKind::CompareExact, o),
        Command::Convergence(o) => (CommandKind::Convergence, o),
    };
    match resolve(kind, opts).and_then(|cfg| execute(&cfg)) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("noisymem: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("noisymem: {msg}");
            EXIT_RUNTIME
        }
    }
}
