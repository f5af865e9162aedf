//! Runs a named scheme from user-facing initial data.

use crate::error::{Error, Result};
use crate::hamiltonian::{momentum_from_positions, run_hamiltonian, run_order1_hamiltonian, step_midpoint_hamiltonian, PhasePoint};
use crate::lagrangian::run_lagrangian;
use crate::problems::MechanicalProblem;
use crate::record::{Scheme, TrajectoryRecord};
use crate::solver::SolverConfig;
use crate::time_grid::TimeGrid;

/// Initial data as given on the command line: `q_0` plus at most one of
/// `p_0` and `q_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub q0: Vec<f64>,
    pub p0: Option<Vec<f64>>,
    pub q1: Option<Vec<f64>>,
}

impl InitialData {
    pub fn new(q0: Vec<f64>, p0: Option<Vec<f64>>, q1: Option<Vec<f64>>) -> Result<Self> {
        if q0.is_empty() {
            return Err(Error::Parse("q0 needs at least one component".into()));
        }
        if p0.is_some() && q1.is_some() {
            return Err(Error::Parse("give either p0 or q1, not both".into()));
        }
        for (name, v) in [("p0", &p0), ("q1", &q1)] {
            if let Some(v) = v {
                if v.len() != q0.len() {
                    return Err(Error::Parse(format!("{name} has {} components, q0 has {}", v.len(), q0.len())));
                }
            }
        }
        Ok(Self { q0, p0, q1 })
    }
}

/// Runs `scheme` over `grid`; the record is partial when the error is set.
///
/// The Lagrangian scheme takes `q_1` as given or from one Hamiltonian step
/// out of `(q_0, p_0)`. The Hamiltonian schemes take `p_0` as given, or the
/// discrete momentum at `t_0` of `(q_0, q_1)`, or zero.
pub fn simulate(
    problem: &MechanicalProblem,
    scheme: Scheme,
    init: &InitialData,
    grid: &TimeGrid,
    cfg: &SolverConfig,
) -> (TrajectoryRecord, Option<Error>) {
    let q0 = &init.q0;
    let model = problem.lagrangian(q0.len());
    let h = grid.step();
    let zeros = || vec![0.0; q0.len()];

    let (mut record, failure) = match scheme {
        Scheme::MidpointLagrangian => {
            let q1 = match &init.q1 {
                Some(q1) => Ok(q1.clone()),
                None => {
                    let p0 = init.p0.clone().unwrap_or_else(zeros);
                    step_midpoint_hamiltonian(&model, &PhasePoint { q: q0.clone(), p: p0 }, h, cfg).map(|s| s.q)
                }
            };
            match q1 {
                Ok(q1) => run_lagrangian(&model, q0, &q1, grid, cfg),
                Err(e) => {
                    let e = e.at_step(1);
                    let mut rec = TrajectoryRecord::new(scheme, grid, q0.len());
                    rec.failure = Some(e.to_string());
                    (rec, Some(e))
                }
            }
        }
        Scheme::MidpointHamiltonian | Scheme::Order1 => {
            let p0 = match (&init.p0, &init.q1) {
                (Some(p0), _) => p0.clone(),
                (None, Some(q1)) => momentum_from_positions(&model, &[q0.clone(), q1.clone()], h).swap_remove(0),
                (None, None) => zeros(),
            };
            let state = PhasePoint { q: q0.clone(), p: p0 };
            if scheme == Scheme::Order1 {
                run_order1_hamiltonian(&model, &state, grid, cfg)
            } else {
                run_hamiltonian(&model, &state, grid, cfg)
            }
        }
    };
    record.problem = problem.name().to_string();
    (record, failure)
}
