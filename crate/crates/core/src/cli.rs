//! Command-line front end: `simulate`, `converge` and `verify`.
//!
//! Every option may also come from a `--config` file of newline-separated
//! `key=value` pairs (keys are the long option names, `#` starts a comment);
//! options given on the command line win. Exit codes: 0 success, 1 usage
//! error, 2 solver failure.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::converge::converge;
use crate::error::{Error, Result};
use crate::driver::{simulate, InitialData};
use crate::problems::MechanicalProblem;
use crate::hamiltonian::PhasePoint;
use crate::record::Scheme;
use crate::solver::{Method, SolverConfig};
use crate::time_grid::TimeGrid;
use crate::verify::{run_verify, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "midpoint-vi", version, about = "Mid-point variational integrators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory and write it as CSV.
    Simulate(SimulateArgs),
    /// Measure the global error at t_final over a list of step sizes.
    Converge(ConvergeArgs),
    /// Run the randomized identity and equivalence checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Residual tolerance of the implicit solves.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// newton or fixed_point.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// free_particle, harmonic or pendulum.
    #[arg(long)]
    problem: Option<String>,
    /// midpoint_lagrangian, midpoint_hamiltonian or order1.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
    /// Initial position, comma-separated components.
    #[arg(long, allow_hyphen_values = true)]
    q0: Option<String>,
    /// Initial momentum, comma-separated components.
    #[arg(long, allow_hyphen_values = true)]
    p0: Option<String>,
    /// Second position, alternative to --p0.
    #[arg(long, allow_hyphen_values = true)]
    q1: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    q0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    p0: Option<String>,
    /// Comma-separated step sizes.
    #[arg(long)]
    h_list: Option<String>,
    /// Final time.
    #[arg(long)]
    tmax: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Grid sizes: a list `4,8,16` or a range `2..32`.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Parsed `key=value` config file.
#[derive(Debug, Default)]
struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, allowed)
    }

    fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("config line {}: expected key=value, got '{raw}'", lineno + 1))
            })?;
            let key = k.trim().trim_start_matches("--").replace('_', "-");
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Parse(format!("config line {}: unknown key '{}'", lineno + 1, k.trim())));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    /// The flag value if given, else the config value, parsed.
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|s| s.parse::<T>().map_err(|_| Error::Parse(format!("invalid value '{s}' for {key}"))))
            .transpose()
    }
}

fn solver_config(args: SolverArgs, file: &ConfigFile) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::default();
    if let Some(tol) = file.pick(args.tol, "tol")? {
        cfg.tol = tol;
    }
    if let Some(m) = file.pick(args.max_iter, "max-iter")? {
        cfg.max_iter = m;
    }
    if let Some(m) = file.pick::<String>(args.method, "method")? {
        cfg.method = m.parse::<Method>()?;
    }
    cfg.validate().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(cfg)
}

fn parse_vector(s: &str, what: &str) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Parse(format!("{what}: expected comma-separated numbers, got '{s}'")))?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parse(format!("{what}: components must be finite")));
    }
    Ok(v)
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Parse(format!("sizes: expected a list like 4,8,16 or a range like 2..32, got '{s}'"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn grid_from(h: Option<f64>, n: Option<usize>, tmax: Option<f64>) -> Result<TimeGrid> {
    let grid = match (h, n, tmax) {
        (Some(_), Some(_), Some(_)) => {
            return Err(Error::Parse("give at most two of --h, --n and --tmax".into()))
        }
        (Some(h), Some(n), None) => TimeGrid::with_step(0.0, h, n),
        (None, Some(n), Some(t)) => TimeGrid::new(0.0, t, n),
        (Some(h), None, Some(t)) => TimeGrid::new(0.0, t, crate::converge::steps_for(h, t)?),
        (Some(h), None, None) => TimeGrid::with_step(0.0, h, 1000),
        (None, Some(n), None) => TimeGrid::with_step(0.0, 0.01, n),
        (None, None, Some(t)) => TimeGrid::new(0.0, t, crate::converge::steps_for(0.01, t)?),
        (None, None, None) => TimeGrid::with_step(0.0, 0.01, 1000),
    };
    grid.map_err(|e| Error::Parse(e.to_string()))
}

fn initial_state(q0: Option<String>, p0: Option<String>) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let q0 = q0.map(|s| parse_vector(&s, "q0")).transpose()?.unwrap_or_else(|| vec![1.0]);
    let p0 = p0.map(|s| parse_vector(&s, "p0")).transpose()?;
    if let Some(p) = &p0 {
        if p.len() != q0.len() {
            return Err(Error::Parse(format!("p0 has {} components, q0 has {}", p.len(), q0.len())));
        }
    }
    Ok((q0, p0))
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let file = ConfigFile::load(
        args.config.as_deref(),
        &["problem", "scheme", "h", "n", "tmax", "q0", "p0", "q1", "out", "tol", "max-iter", "method"],
    )?;
    let problem = MechanicalProblem::by_name(&file.pick(args.problem, "problem")?.unwrap_or_else(|| "harmonic".into()))?;
    let scheme: Scheme = file
        .pick::<String>(args.scheme, "scheme")?
        .unwrap_or_else(|| "midpoint_hamiltonian".into())
        .parse()?;
    let grid = grid_from(file.pick(args.h, "h")?, file.pick(args.n, "n")?, file.pick(args.tmax, "tmax")?)?;
    let (q0, p0) = initial_state(file.pick(args.q0, "q0")?, file.pick(args.p0, "p0")?)?;
    let q1 = file.pick::<String>(args.q1, "q1")?.map(|s| parse_vector(&s, "q1")).transpose()?;
    let out = file.pick::<PathBuf>(args.out, "out")?;
    let cfg = solver_config(args.solver, &file)?;
    let init = InitialData::new(q0, p0, q1)?;
    let (record, failure) = simulate(&problem, scheme, &init, &grid, &cfg);
    emit(out.as_deref(), &record.to_csv_string(), stdout)?;
    writeln!(
        stderr,
        "problem={} scheme={} h={} n={} rows={} max_energy_deviation={:.6e}",
        record.problem,
        record.scheme,
        record.h,
        record.n,
        record.rows.len(),
        record.max_energy_deviation()
    )?;
    match failure {
        None => Ok(EXIT_OK),
        Some(e) => {
            writeln!(stderr, "error: {e}")?;
            Ok(if e.is_solver_failure() { EXIT_SOLVER } else { EXIT_USAGE })
        }
    }
}

fn cmd_converge(args: ConvergeArgs, stdout: &mut dyn Write) -> Result<i32> {
    let file = ConfigFile::load(
        args.config.as_deref(),
        &["problem", "scheme", "q0", "p0", "h-list", "tmax", "out", "tol", "max-iter", "method"],
    )?;
    let problem = MechanicalProblem::by_name(&file.pick(args.problem, "problem")?.unwrap_or_else(|| "harmonic".into()))?;
    let scheme: Scheme = file
        .pick::<String>(args.scheme, "scheme")?
        .unwrap_or_else(|| "midpoint_hamiltonian".into())
        .parse()?;
    let (q0, p0) = initial_state(file.pick(args.q0, "q0")?, file.pick(args.p0, "p0")?)?;
    let p0 = p0.unwrap_or_else(|| vec![0.0; q0.len()]);
    let h_list = match file.pick::<String>(args.h_list, "h-list")? {
        Some(s) => parse_vector(&s, "h-list")?,
        None => vec![0.1, 0.05, 0.025, 0.0125],
    };
    let t_final = file.pick(args.tmax, "tmax")?.unwrap_or(1.0);
    let out = file.pick::<PathBuf>(args.out, "out")?;
    let cfg = solver_config(args.solver, &file)?;
    let init = PhasePoint { q: q0, p: p0 };
    let table = converge(&problem, scheme, &init, &h_list, t_final, &cfg)?;
    emit(out.as_deref(), &format!("{table}\n"), stdout)?;
    Ok(EXIT_OK)
}

fn cmd_verify(args: VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let file = ConfigFile::load(args.config.as_deref(), &["seed", "sizes", "instances"])?;
    let mut cfg = VerifyConfig::default();
    if let Some(seed) = file.pick(args.seed, "seed")? {
        cfg.seed = seed;
    }
    if let Some(s) = file.pick::<String>(args.sizes, "sizes")? {
        cfg.sizes = parse_sizes(&s)?;
    }
    if let Some(k) = file.pick(args.instances, "instances")? {
        cfg.instances = k;
    }
    let report = run_verify(&cfg).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(stdout, "{report}")?;
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_USAGE })
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a, stdout, stderr),
        Command::Converge(a) => cmd_converge(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_solver_failure() {
                EXIT_SOLVER
            } else {
                EXIT_USAGE
            }
        }
    }
}
