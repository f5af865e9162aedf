//! Trajectory records and their CSV form.
//!
//! ```text
//! # problem=harmonic
//! # scheme=midpoint_hamiltonian
//! # h=1.0000000000000000e-2
//! # n=1000
//! # iterations=2003
//! # max_residual=1.1102230246251565e-16
//! i,t,q0,p0,H
//! 0,0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0,5.0000000000000000e-1
//! ...
//! # failure=step 17 failed: ...        (only for partial runs)
//! ```
//!
//! Floats carry 17 significant digits, so a parse reproduces every `f64`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::solver::Solution;
use crate::time_grid::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    MidpointLagrangian,
    MidpointHamiltonian,
    Order1,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [
        Scheme::MidpointLagrangian,
        Scheme::MidpointHamiltonian,
        Scheme::Order1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::MidpointLagrangian => "midpoint_lagrangian",
            Scheme::MidpointHamiltonian => "midpoint_hamiltonian",
            Scheme::Order1 => "order1",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown scheme '{s}' (expected midpoint_lagrangian, midpoint_hamiltonian or order1)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverStats {
    pub solves: usize,
    pub total_iterations: usize,
    pub max_residual: f64,
}

impl SolverStats {
    pub(crate) fn record(&mut self, sol: &Solution) {
        self.solves += 1;
        self.total_iterations += sol.iterations;
        self.max_residual = self.max_residual.max(sol.residual_norm);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub i: usize,
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub problem: String,
    pub scheme: Scheme,
    pub h: f64,
    pub n: usize,
    pub dim: usize,
    pub stats: SolverStats,
    pub rows: Vec<TrajectoryRow>,
    pub failure: Option<String>,
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid number '{s}'")))
}

impl TrajectoryRecord {
    pub fn new(scheme: Scheme, grid: &TimeGrid, dim: usize) -> Self {
        Self {
            problem: "custom".to_string(),
            scheme,
            h: grid.step(),
            n: grid.n_intervals(),
            dim,
            stats: SolverStats::default(),
            rows: Vec::with_capacity(grid.n_intervals() + 1),
            failure: None,
        }
    }

    pub(crate) fn push(&mut self, i: usize, t: f64, q: Vec<f64>, p: Vec<f64>, energy: f64) {
        self.rows.push(TrajectoryRow { i, t, q, p, energy });
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none() && self.rows.len() == self.n + 1
    }

    pub fn positions(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.q.clone()).collect()
    }

    pub fn momenta(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.p.clone()).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.energy).collect()
    }

    /// `max_i |H_i - H_0|`.
    pub fn max_energy_deviation(&self) -> f64 {
        let e0 = self.rows.first().map(|r| r.energy).unwrap_or(f64::NAN);
        self.rows.iter().fold(0.0f64, |m, r| m.max((r.energy - e0).abs()))
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["i".to_string(), "t".to_string()];
        cols.extend((0..self.dim).map(|c| format!("q{c}")));
        cols.extend((0..self.dim).map(|c| format!("p{c}")));
        cols.push("H".to_string());
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# problem={}", self.problem)?;
        writeln!(out, "# scheme={}", self.scheme)?;
        writeln!(out, "# h={}", fmt_f64(self.h))?;
        writeln!(out, "# n={}", self.n)?;
        writeln!(out, "# iterations={}", self.stats.total_iterations)?;
        writeln!(out, "# max_residual={}", fmt_f64(self.stats.max_residual))?;
        writeln!(out, "{}", self.header())?;
        for row in &self.rows {
            let mut line = format!("{},{}", row.i, fmt_f64(row.t));
            for x in row.q.iter().chain(&row.p) {
                line.push(',');
                line.push_str(&fmt_f64(*x));
            }
            line.push(',');
            line.push_str(&fmt_f64(row.energy));
            writeln!(out, "{line}")?;
        }
        if let Some(f) = &self.failure {
            writeln!(out, "# failure={}", f.replace('\n', " "))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rec = TrajectoryRecord {
            problem: String::new(),
            scheme: Scheme::MidpointHamiltonian,
            h: f64::NAN,
            n: 0,
            dim: 0,
            stats: SolverStats::default(),
            rows: Vec::new(),
            failure: None,
        };
        let mut saw_header = false;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            if let Some(meta) = line.strip_prefix('#') {
                let (key, value) = meta
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("bad metadata line '{line}'")))?;
                match key {
                    "problem" => rec.problem = value.to_string(),
                    "scheme" => rec.scheme = value.parse()?,
                    "h" => rec.h = parse_f64(value)?,
                    "n" => {
                        rec.n = value
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad n '{value}'")))?
                    }
                    "iterations" => {
                        rec.stats.total_iterations = value
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad iterations '{value}'")))?
                    }
                    "max_residual" => rec.stats.max_residual = parse_f64(value)?,
                    "failure" => rec.failure = Some(value.to_string()),
                    _ => {}
                }
                continue;
            }
            if !saw_header {
                let cols = line.split(',').count();
                if cols < 5 || (cols - 3) % 2 != 0 || !line.starts_with("i,t,") {
                    return Err(Error::Parse(format!("bad header '{line}'")));
                }
                rec.dim = (cols - 3) / 2;
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 2 * rec.dim + 3 {
                return Err(Error::Parse(format!("row has {} fields: '{line}'", fields.len())));
            }
            let i = fields[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad index '{}'", fields[0])))?;
            let nums = fields[1..]
                .iter()
                .map(|f| parse_f64(f))
                .collect::<Result<Vec<_>>>()?;
            let d = rec.dim;
            rec.rows.push(TrajectoryRow {
                i,
                t: nums[0],
                q: nums[1..1 + d].to_vec(),
                p: nums[1 + d..1 + 2 * d].to_vec(),
                energy: nums[1 + 2 * d],
            });
        }
        if !saw_header {
            return Err(Error::Parse("missing CSV header".to_string()));
        }
        Ok(rec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_csv(&fs::read_to_string(path)?)
    }
}
