//! Global-error convergence studies over a list of step sizes.
//!
//! The error at `t_final` is the max-norm position error against the
//! problem's exact solution or, without one, against the mid-point
//! Hamiltonian scheme run at `h/64`. The Lagrangian scheme is seeded with
//! `q_1` from one Hamiltonian step so that every scheme starts from the same
//! `(q_0, p_0)`.

use std::fmt;
use std::thread;

use crate::error::{Error, Result};
use crate::hamiltonian::{integrate_hamiltonian, integrate_order1_hamiltonian, step_midpoint_hamiltonian, PhasePoint};
use crate::lagrangian::integrate_lagrangian;
use crate::problems::MechanicalProblem;
use crate::record::{Scheme, TrajectoryRecord};
use crate::solver::SolverConfig;
use crate::time_grid::TimeGrid;

/// Refinement factor of the reference run for problems without an exact
/// solution.
pub const REFERENCE_REFINEMENT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub n: usize,
    pub error: f64,
    /// `log(e_prev/e)/log(h_prev/h)` against the previous row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub problem: String,
    pub scheme: Scheme,
    pub t_final: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log e` against `log h`; `None` when every
    /// error is at rounding level.
    pub slope: Option<f64>,
}

impl ConvergenceTable {
    pub fn is_exact(&self) -> bool {
        self.slope.is_none()
    }
}

impl fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# problem={} scheme={} t_final={}", self.problem, self.scheme, self.t_final)?;
        writeln!(f, "h,N,error,order")?;
        for r in &self.rows {
            let order = r.order.map(|o| format!("{o:.4}")).unwrap_or_else(|| "-".into());
            writeln!(f, "{:.6e},{},{:.6e},{}", r.h, r.n, r.error, order)?;
        }
        match self.slope {
            Some(s) => write!(f, "slope={s:.4}"),
            None => write!(f, "slope=exact"),
        }
    }
}

/// Number of steps of size `h` reaching `t_final`; `h` must divide it.
pub fn steps_for(h: f64, t_final: f64) -> Result<usize> {
    if !(h > 0.0 && t_final > 0.0 && h.is_finite() && t_final.is_finite()) {
        return Err(Error::domain(format!("need h > 0 and t_final > 0, got h={h}, t_final={t_final}")));
    }
    let n = (t_final / h).round();
    if n < 1.0 || (n * h - t_final).abs() > 1e-9 * t_final {
        return Err(Error::domain(format!("step {h} does not divide t_final {t_final}")));
    }
    Ok(n as usize)
}

/// Runs `scheme` from `(q_0, p_0)` over `grid`.
pub fn run_scheme(
    problem: &MechanicalProblem,
    scheme: Scheme,
    init: &PhasePoint,
    grid: &TimeGrid,
    cfg: &SolverConfig,
) -> Result<TrajectoryRecord> {
    let model = problem.lagrangian(init.q.len());
    let mut rec = match scheme {
        Scheme::MidpointHamiltonian => integrate_hamiltonian(&model, init, grid, cfg)?,
        Scheme::Order1 => integrate_order1_hamiltonian(&model, init, grid, cfg)?,
        Scheme::MidpointLagrangian => {
            let first = step_midpoint_hamiltonian(&model, init, grid.step(), cfg)?;
            integrate_lagrangian(&model, &init.q, &first.q, grid, cfg)?
        }
    };
    rec.problem = problem.name().to_string();
    Ok(rec)
}

fn reference_position(
    problem: &MechanicalProblem,
    init: &PhasePoint,
    h: f64,
    t_final: f64,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    if let Some(exact) = problem.exact_solution(t_final, init) {
        return Ok(exact.q);
    }
    let n = steps_for(h, t_final)? * REFERENCE_REFINEMENT;
    let grid = TimeGrid::new(0.0, t_final, n)?;
    let rec = run_scheme(problem, Scheme::MidpointHamiltonian, init, &grid, cfg)?;
    Ok(rec.rows.last().expect("complete run").q.clone())
}

fn error_at(
    problem: &MechanicalProblem,
    scheme: Scheme,
    init: &PhasePoint,
    h: f64,
    t_final: f64,
    cfg: &SolverConfig,
) -> Result<(usize, f64, f64)> {
    let n = steps_for(h, t_final)?;
    let grid = TimeGrid::new(0.0, t_final, n)?;
    let rec = run_scheme(problem, scheme, init, &grid, cfg)?;
    let q = &rec.rows.last().expect("complete run").q;
    let reference = reference_position(problem, init, h, t_final, cfg)?;
    let err = q.iter().zip(&reference).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let size = reference.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    Ok((n, err, size))
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Measures the error at `t_final` for every `h`, one thread per step size.
pub fn converge(
    problem: &MechanicalProblem,
    scheme: Scheme,
    init: &PhasePoint,
    h_list: &[f64],
    t_final: f64,
    cfg: &SolverConfig,
) -> Result<ConvergenceTable> {
    if h_list.len() < 2 {
        return Err(Error::domain("a convergence study needs at least two step sizes"));
    }
    let results: Vec<Result<(usize, f64, f64)>> = thread::scope(|s| {
        let handles: Vec<_> = h_list
            .iter()
            .map(|&h| s.spawn(move || error_at(problem, scheme, init, h, t_final, cfg)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(h_list.len());
    let mut rounding = true;
    for (&h, res) in h_list.iter().zip(results) {
        let (n, error, size) = res?;
        // errors this small are rounding accumulated over n steps
        rounding &= error <= 1e3 * f64::EPSILON * size * n as f64;
        let order = rows.last().map(|prev| (prev.error / error).ln() / (prev.h / h).ln());
        rows.push(ConvergenceRow { h, n, error, order });
    }
    let slope = if rounding {
        for r in &mut rows {
            r.order = None;
        }
        None
    } else {
        let xs: Vec<f64> = rows.iter().map(|r| r.h.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.error.ln()).collect();
        Some(fit_slope(&xs, &ys))
    };
    Ok(ConvergenceTable {
        problem: problem.name().to_string(),
        scheme,
        t_final,
        rows,
        slope,
    })
}
