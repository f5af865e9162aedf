//! Discrete momentum, the Legendre-derived Hamiltonian and the mid-point
//! Hamiltonian system.
//!
//! The momentum of a trajectory is stored at all `N + 1` nodes of `T`:
//!
//! ```text
//! p(t_0) = ∂_vL(⋆_{1/2})   - (h/2)·∂_qL(⋆_{1/2})
//! p(t_i) = ∂_vL(⋆_{i-1/2}) + (h/2)·∂_qL(⋆_{i-1/2}),   i = 1..N
//! ```
//!
//! so that its mid-point extension satisfies `p∘ = ∂L/∂v(q∘, Δ∘,₊[q∘])` on
//! every half node of a critical trajectory. One step of the Hamiltonian
//! scheme solves
//!
//! ```text
//! p₁ = p₀ + h·∂_qL((q₀+q₁)/2, (q₁-q₀)/h)
//! q₁ = q₀ + h·g((p₀+p₁)/2, (q₀+q₁)/2)
//! ```
//!
//! for `(q₁, p₁)`, `g` being the inverse of `v ↦ ∂L/∂v(q, v)`.

use crate::calculus::{
    avg_half_minus, delta_minus, extend, integral_midpoint, GridFunction,
};
use crate::error::{check_dim, Error, Result};
use crate::lagrangian::{star_points, LagrangianModel};
use crate::record::{Scheme, SolverStats, TrajectoryRecord};
use crate::solver::{inf_norm, solve_root, Solution, SolverConfig};
use crate::time_grid::{NodeKind, TimeGrid};

/// A point of phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        check_dim(q.len(), p.len())?;
        if q.iter().chain(&p).any(|x| !x.is_finite()) {
            return Err(Error::domain("phase point has non-finite components"));
        }
        Ok(Self { q, p })
    }
}

/// `g(p, q)`: the velocity `v` with `∂L/∂v(q, v) = p`.
///
/// Uses the model's analytic inverse when present, otherwise Newton from
/// `v = p`.
pub fn legendre_inverse(
    model: &LagrangianModel,
    p: &[f64],
    q: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    model.check_point(p)?;
    model.check_point(q)?;
    if let Some(g) = model.analytic_legendre_inverse() {
        return Ok(g(p, q));
    }
    let sol = solve_root(
        |v| Ok(model.grad_v(q, v).iter().zip(p).map(|(a, b)| a - b).collect()),
        p,
        cfg,
    )?;
    Ok(sol.x)
}

/// `H(p, q) = p·g(p, q) - L(q, g(p, q))`.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    lagrangian: LagrangianModel,
    cfg: SolverConfig,
}

impl HamiltonianModel {
    pub fn new(lagrangian: LagrangianModel, cfg: SolverConfig) -> Self {
        Self { lagrangian, cfg }
    }

    pub fn lagrangian(&self) -> &LagrangianModel {
        &self.lagrangian
    }

    pub fn dim(&self) -> usize {
        self.lagrangian.dim()
    }

    pub fn velocity(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        legendre_inverse(&self.lagrangian, p, q, &self.cfg)
    }

    pub fn energy(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        let v = self.velocity(p, q)?;
        let pv: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
        Ok(pv - self.lagrangian.eval(q, &v))
    }

    /// `∂H/∂p = g(p, q)`.
    pub fn grad_p(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        self.velocity(p, q)
    }

    /// `∂H/∂q = -∂L/∂q(q, g(p, q))`.
    pub fn grad_q(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        let v = self.velocity(p, q)?;
        Ok(self.lagrangian.grad_q(q, &v).into_iter().map(|x| -x).collect())
    }
}

/// Legendre transform of `model`.
pub fn build_hamiltonian(model: &LagrangianModel, cfg: &SolverConfig) -> HamiltonianModel {
    HamiltonianModel::new(model.clone(), *cfg)
}

/// Discrete momentum of a position sequence with uniform step `h` (at least
/// two positions).
pub fn momentum_from_positions(model: &LagrangianModel, qs: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
    assert!(qs.len() >= 2, "momentum needs at least two positions");
    let grads: Vec<(Vec<f64>, Vec<f64>)> = qs
        .windows(2)
        .map(|w| {
            let qh: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            let vh: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| (b - a) / h).collect();
            (model.grad_q(&qh, &vh), model.grad_v(&qh, &vh))
        })
        .collect();
    let combine = |(gq, gv): &(Vec<f64>, Vec<f64>), sign: f64| -> Vec<f64> {
        gv.iter().zip(gq).map(|(v, q)| v + sign * 0.5 * h * q).collect()
    };
    let mut out = Vec::with_capacity(qs.len());
    out.push(combine(&grads[0], -1.0));
    out.extend(grads.iter().map(|g| combine(g, 1.0)));
    out
}

/// Discrete momentum of a trajectory on `T`.
pub fn discrete_momentum(model: &LagrangianModel, q: &GridFunction) -> Result<GridFunction> {
    if q.kind() != NodeKind::T {
        return Err(Error::domain(format!("trajectory must live on T, got {}", q.kind())));
    }
    check_dim(model.dim(), q.dim())?;
    let rows = momentum_from_positions(model, &q.to_rows(), q.grid().step());
    GridFunction::from_rows(*q.set(), &rows)
}

/// `p∘ - ∂L/∂v(q∘, Δ∘,₊[q∘])` on `T_half`.
pub fn momentum_constraint_residual(
    model: &LagrangianModel,
    q: &GridFunction,
    p: &GridFunction,
) -> Result<GridFunction> {
    check_same_trajectory_grid(q, p, model.dim())?;
    let (qh, vh) = star_points(q)?;
    let ph = extend(p)?.restrict(NodeKind::THalf)?;
    let mut values = Vec::with_capacity(ph.values().len());
    for k in 0..ph.len() {
        let gv = model.grad_v(qh.at(k), vh.at(k));
        values.extend(ph.at(k).iter().zip(&gv).map(|(a, b)| a - b));
    }
    GridFunction::new(*ph.set(), model.dim(), values)
}

fn check_same_trajectory_grid(q: &GridFunction, p: &GridFunction, dim: usize) -> Result<()> {
    if q.kind() != NodeKind::T || q.set() != p.set() {
        return Err(Error::domain("q and p must both live on T of the same grid"));
    }
    check_dim(dim, q.dim())?;
    check_dim(dim, p.dim())
}

pub(crate) fn step_hamiltonian_solution(
    model: &LagrangianModel,
    state: &PhasePoint,
    h: f64,
    cfg: &SolverConfig,
) -> Result<Solution> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("step h must be positive, got {h}")));
    }
    model.check_point(&state.q)?;
    model.check_point(&state.p)?;
    let d = model.dim();
    let (q0, p0) = (&state.q, &state.p);
    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        let (q1, p1) = x.split_at(d);
        let qh: Vec<f64> = q0.iter().zip(q1).map(|(a, b)| 0.5 * (a + b)).collect();
        let vh: Vec<f64> = q0.iter().zip(q1).map(|(a, b)| (b - a) / h).collect();
        let ph: Vec<f64> = p0.iter().zip(p1).map(|(a, b)| 0.5 * (a + b)).collect();
        let g = legendre_inverse(model, &ph, &qh, cfg)?;
        let gq = model.grad_q(&qh, &vh);
        let mut r = Vec::with_capacity(2 * d);
        r.extend((0..d).map(|c| q1[c] - q0[c] - h * g[c]));
        r.extend((0..d).map(|c| p1[c] - p0[c] - h * gq[c]));
        Ok(r)
    };
    let v0 = legendre_inverse(model, p0, q0, cfg)?;
    let mut guess: Vec<f64> = q0.iter().zip(&v0).map(|(q, v)| q + h * v).collect();
    guess.extend_from_slice(p0);
    solve_root(residual, &guess, cfg)
}

/// One step `(q_i, p_i) ↦ (q_{i+1}, p_{i+1})` of the mid-point Hamiltonian scheme.
pub fn step_midpoint_hamiltonian(
    model: &LagrangianModel,
    state: &PhasePoint,
    h: f64,
    cfg: &SolverConfig,
) -> Result<PhasePoint> {
    let sol = step_hamiltonian_solution(model, state, h, cfg)?;
    let (q, p) = sol.x.split_at(model.dim());
    Ok(PhasePoint { q: q.to_vec(), p: p.to_vec() })
}

fn run_one_step_scheme<F>(
    model: &LagrangianModel,
    initial: &PhasePoint,
    grid: &TimeGrid,
    cfg: &SolverConfig,
    scheme: Scheme,
    mut step: F,
) -> (TrajectoryRecord, Option<Error>)
where
    F: FnMut(&PhasePoint) -> Result<(PhasePoint, Option<Solution>)>,
{
    let ham = HamiltonianModel::new(model.clone(), *cfg);
    let mut record = TrajectoryRecord::new(scheme, grid, model.dim());
    let mut stats = SolverStats::default();
    let mut failure = model
        .check_point(&initial.q)
        .and(model.check_point(&initial.p))
        .err();
    let mut state = initial.clone();
    if failure.is_none() {
        for i in 0..=grid.n_intervals() {
            let energy = match ham.energy(&state.p, &state.q) {
                Ok(e) => e,
                Err(e) => {
                    failure = Some(e.at_step(i));
                    break;
                }
            };
            record.push(i, grid.node(i), state.q.clone(), state.p.clone(), energy);
            if i == grid.n_intervals() {
                break;
            }
            match step(&state) {
                Ok((next, sol)) => {
                    if let Some(sol) = sol {
                        stats.record(&sol);
                    }
                    state = next;
                }
                Err(e) => {
                    failure = Some(e.at_step(i + 1));
                    break;
                }
            }
        }
    }
    record.stats = stats;
    if let Some(e) = &failure {
        record.failure = Some(e.to_string());
    }
    (record, failure)
}

/// Runs the mid-point Hamiltonian scheme from `initial`; partial on failure.
pub fn run_hamiltonian(
    model: &LagrangianModel,
    initial: &PhasePoint,
    grid: &TimeGrid,
    cfg: &SolverConfig,
) -> (TrajectoryRecord, Option<Error>) {
    let h = grid.step();
    run_one_step_scheme(model, initial, grid, cfg, Scheme::MidpointHamiltonian, |s| {
        let sol = step_hamiltonian_solution(model, s, h, cfg)?;
        let (q, p) = sol.x.split_at(model.dim());
        Ok((PhasePoint { q: q.to_vec(), p: p.to_vec() }, Some(sol)))
    })
}

/// Full `(q, p, H)` trajectory of the mid-point Hamiltonian scheme.
pub fn integrate_hamiltonian(
    model: &LagrangianModel,
    initial: &PhasePoint,
    grid: &TimeGrid,
    cfg: &SolverConfig,
) -> Result<TrajectoryRecord> {
    match run_hamiltonian(model, initial, grid, cfg) {
        (record, None) => Ok(record),
        (_, Some(e)) => Err(e),
    }
}

/// One step of the order-one scheme `Δ₊[q] = ∂H/∂p`, `Δ₋[p] = -∂H/∂q`:
/// `q_{i+1} = q_i + h·g(p_i, q_i)`, then `p_{i+1}` solves
/// `p_{i+1} = p_i + h·∂_qL(q_{i+1}, g(p_{i+1}, q_{i+1}))`.
pub fn step_order1_hamiltonian(
    model: &LagrangianModel,
    state: &PhasePoint,
    h: f64,
    cfg: &SolverConfig,
) -> Result<(PhasePoint, Solution)> {
    model.check_point(&state.q)?;
    model.check_point(&state.p)?;
    let v = legendre_inverse(model, &state.p, &state.q, cfg)?;
    let q1: Vec<f64> = state.q.iter().zip(&v).map(|(q, v)| q + h * v).collect();
    let residual = |p1: &[f64]| -> Result<Vec<f64>> {
        let v1 = legendre_inverse(model, p1, &q1, cfg)?;
        let gq = model.grad_q(&q1, &v1);
        Ok((0..p1.len()).map(|c| p1[c] - state.p[c] - h * gq[c]).collect())
    };
    let sol = solve_root(residual, &state.p, cfg)?;
    Ok((PhasePoint { q: q1, p: sol.x.clone() }, sol))
}

pub fn run_order1_hamiltonian(
    model: &LagrangianModel,
    initial: &PhasePoint,
    grid: &TimeGrid,
    cfg: &SolverConfig,
) -> (TrajectoryRecord, Option<Error>) {
    let h = grid.step();
    run_one_step_scheme(model, initial, grid, cfg, Scheme::Order1, |s| {
        let (next, sol) = step_order1_hamiltonian(model, s, h, cfg)?;
        Ok((next, Some(sol)))
    })
}

/// Order-one discrete Hamiltonian trajectory; `p_N` continues the same
/// recursion one node past `T⁺`.
pub fn integrate_order1_hamiltonian(
    model: &LagrangianModel,
    initial: &PhasePoint,
    grid: &TimeGrid,
    cfg: &SolverConfig,
) -> Result<TrajectoryRecord> {
    match run_order1_hamiltonian(model, initial, grid, cfg) {
        (record, None) => Ok(record),
        (_, Some(e)) => Err(e),
    }
}

/// Residuals of the mid-point Hamiltonian system for a candidate `(q, p)`.
#[derive(Debug, Clone)]
pub struct ShResidual {
    /// `Δ_{1/2,-}[p∘] - [-∂H/∂q(p∘, q∘)]_{1/2,-}` on `T_half⁻`.
    pub momentum: GridFunction,
    /// `Δ∘,₊[q∘] - ∂H/∂p(p∘, q∘)` on `T_half`.
    pub position: GridFunction,
    /// The position equation at `t_{1/2}` and `t_{N-1/2}`.
    pub boundary: [Vec<f64>; 2],
}

impl ShResidual {
    pub fn max_abs(&self) -> f64 {
        self.momentum.max_abs().max(self.position.max_abs())
    }
}

struct HalfNodeData {
    q: GridFunction,
    v: GridFunction,
    p: GridFunction,
}

fn half_node_data(q: &GridFunction, p: &GridFunction) -> Result<HalfNodeData> {
    let (qh, vh) = star_points(q)?;
    let ph = extend(p)?.restrict(NodeKind::THalf)?;
    Ok(HalfNodeData { q: qh, v: vh, p: ph })
}

pub fn sh_residual(ham: &HamiltonianModel, q: &GridFunction, p: &GridFunction) -> Result<ShResidual> {
    check_same_trajectory_grid(q, p, ham.dim())?;
    if q.grid().n_intervals() < 2 {
        return Err(Error::domain("the Hamiltonian residual needs N >= 2"));
    }
    let data = half_node_data(q, p)?;
    let set = *data.q.set();
    let d = ham.dim();
    let mut minus_hq = Vec::with_capacity(set.len() * d);
    let mut position = Vec::with_capacity(set.len() * d);
    for k in 0..set.len() {
        let (pk, qk) = (data.p.at(k), data.q.at(k));
        minus_hq.extend(ham.grad_q(pk, qk)?.into_iter().map(|x| -x));
        let hp = ham.grad_p(pk, qk)?;
        position.extend(data.v.at(k).iter().zip(&hp).map(|(a, b)| a - b));
    }
    let minus_hq = GridFunction::new(set, d, minus_hq)?;
    let position = GridFunction::new(set, d, position)?;
    let momentum = delta_minus(&data.p)?.sub(&avg_half_minus(&minus_hq)?)?;
    let boundary = [position.at(0).to_vec(), position.at(set.len() - 1).to_vec()];
    Ok(ShResidual { momentum, position, boundary })
}

/// `∫ (p∘·Δ∘,₊[q∘] - H(p∘, q∘)) Δ_{1/2} t`.
pub fn action_h(ham: &HamiltonianModel, p: &GridFunction, q: &GridFunction) -> Result<f64> {
    check_same_trajectory_grid(q, p, ham.dim())?;
    let data = half_node_data(q, p)?;
    let mut values = Vec::with_capacity(data.q.len());
    for k in 0..data.q.len() {
        let pv: f64 = data.p.at(k).iter().zip(data.v.at(k)).map(|(a, b)| a * b).sum();
        values.push(pv - ham.energy(data.p.at(k), data.q.at(k))?);
    }
    let integrand = GridFunction::scalar(*data.q.set(), values)?;
    Ok(integral_midpoint(&integrand, 0, q.grid().n_intervals())?[0])
}

/// Finite-difference stationarity test of [`action_h`].
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityReport {
    /// Largest `|∂action/∂x|` over interior `q` components and all `p`
    /// components, by central differences.
    pub max_directional_derivative: f64,
    pub max_residual: f64,
}

impl CriticalityReport {
    pub fn is_critical(&self, tol: f64) -> bool {
        self.max_directional_derivative <= tol && self.max_residual <= tol
    }
}

/// Directional derivatives of the discrete action along the canonical basis
/// variations: `q` perturbed at interior nodes only, `p` at every node.
pub fn criticality_check(
    ham: &HamiltonianModel,
    q: &GridFunction,
    p: &GridFunction,
    fd_step: f64,
) -> Result<CriticalityReport> {
    let residual = sh_residual(ham, q, p)?;
    let n = q.grid().n_intervals();
    let d = ham.dim();
    let mut max_dd = 0.0f64;
    let mut probe = |target_is_q: bool, node: usize, c: usize| -> Result<()> {
        let (mut qp, mut pp) = (q.clone(), p.clone());
        let (mut qm, mut pm) = (q.clone(), p.clone());
        if target_is_q {
            qp.at_mut(node)[c] += fd_step;
            qm.at_mut(node)[c] -= fd_step;
        } else {
            pp.at_mut(node)[c] += fd_step;
            pm.at_mut(node)[c] -= fd_step;
        }
        let dd = (action_h(ham, &pp, &qp)? - action_h(ham, &pm, &qm)?) / (2.0 * fd_step);
        max_dd = if dd.is_nan() { f64::NAN } else { max_dd.max(dd.abs()) };
        Ok(())
    };
    for node in 1..n {
        for c in 0..d {
            probe(true, node, c)?;
        }
    }
    for node in 0..=n {
        for c in 0..d {
            probe(false, node, c)?;
        }
    }
    Ok(CriticalityReport {
        max_directional_derivative: max_dd,
        max_residual: residual.max_abs(),
    })
}

/// `max |v|` helper for residual vectors.
pub fn max_abs(v: &[f64]) -> f64 {
    inf_norm(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::integrate_lagrangian;
    use crate::problems::MechanicalProblem;

    fn harmonic() -> LagrangianModel {
        MechanicalProblem::harmonic_oscillator().lagrangian(1)
    }

    fn on_t(grid: &TimeGrid, rows: Vec<Vec<f64>>) -> GridFunction {
        GridFunction::from_rows(grid.node_set(NodeKind::T), &rows).unwrap()
    }

    #[test]
    fn legendre_examples() {
        let cfg = SolverConfig::default();
        let mech = harmonic();
        assert_eq!(legendre_inverse(&mech, &[0.7], &[3.0], &cfg).unwrap(), vec![0.7]);

        let massive = LagrangianModel::new(1, |q, v| v[0] * v[0] - 0.5 * q[0] * q[0])
            .with_gradients(|q, _v| vec![-q[0]], |_q, v| vec![2.0 * v[0]]);
        let v = legendre_inverse(&massive, &[0.7], &[3.0], &cfg).unwrap();
        assert!((v[0] - 0.35).abs() < 1e-12);

        // synthesized gradients carry a finite-difference floor near 1e-10
        let massive = LagrangianModel::new(1, |q, v| v[0] * v[0] - 0.5 * q[0] * q[0]);
        let v = legendre_inverse(&massive, &[0.7], &[3.0], &cfg.with_tol(1e-8)).unwrap();
        assert!((v[0] - 0.35).abs() < 1e-8);

        let cosh = LagrangianModel::new(1, |_q, v| v[0].cosh())
            .with_gradients(|_q, _v| vec![0.0], |_q, v| vec![v[0].sinh()]);
        let v = legendre_inverse(&cosh, &[1.0], &[0.0], &cfg).unwrap();
        assert!((v[0] - 0.881_373_587_019_543).abs() < 1e-12);
    }

    #[test]
    fn legendre_failure_is_a_convergence_error() {
        // ∂L/∂v = tanh(v) never reaches 2
        let bounded = LagrangianModel::new(1, |_q, v| v[0].cosh().ln())
            .with_gradients(|_q, _v| vec![0.0], |_q, v| vec![v[0].tanh()]);
        let err = legendre_inverse(&bounded, &[2.0], &[0.0], &SolverConfig::default()).unwrap_err();
        assert!(err.is_solver_failure(), "{err}");
    }

    #[test]
    fn hamiltonian_examples() {
        let cfg = SolverConfig::default();
        let h = build_hamiltonian(&harmonic(), &cfg);
        assert!((h.energy(&[0.05], &[1.0]).unwrap() - 0.50125).abs() < 1e-15);
        let pend = build_hamiltonian(&MechanicalProblem::pendulum().lagrangian(1), &cfg);
        let e = pend.energy(&[0.4], &[0.3]).unwrap();
        assert!((e - (0.08 - 0.3f64.cos())).abs() < 1e-15);
        let free = build_hamiltonian(&MechanicalProblem::free_particle().lagrangian(2), &cfg);
        assert_eq!(free.grad_q(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(free.energy(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 2.5);
    }

    #[test]
    fn momentum_examples() {
        let g = TimeGrid::new(0.0, 0.1, 1).unwrap();
        let p = discrete_momentum(&harmonic(), &on_t(&g, vec![vec![1.0], vec![1.0]])).unwrap();
        assert!((p.at(0)[0] - 0.05).abs() < 1e-16);
        assert!((p.at(1)[0] + 0.05).abs() < 1e-16);

        let g = TimeGrid::new(0.0, 2.0, 4).unwrap();
        let free = MechanicalProblem::free_particle().lagrangian(1);
        let line = GridFunction::sample(g.node_set(NodeKind::T), 1, |t| vec![0.2 - 1.5 * t]).unwrap();
        let p = discrete_momentum(&free, &line).unwrap();
        assert!(p.values().iter().all(|&x| (x + 1.5).abs() < 1e-14));
        let r = momentum_constraint_residual(&free, &line, &p).unwrap();
        assert!(r.max_abs() < 1e-14);
    }

    #[test]
    fn momentum_residual_is_linear_in_p() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let free = MechanicalProblem::free_particle().lagrangian(1);
        let line = GridFunction::sample(g.node_set(NodeKind::T), 1, |t| vec![t]).unwrap();
        let mut p = discrete_momentum(&free, &line).unwrap();
        p.at_mut(2)[0] += 0.3;
        let r = momentum_constraint_residual(&free, &line, &p).unwrap();
        let expect = [0.0, 0.15, 0.15, 0.0];
        for (a, b) in r.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn hamiltonian_steps() {
        let cfg = SolverConfig::default();
        let s = step_midpoint_hamiltonian(&harmonic(), &PhasePoint { q: vec![1.0], p: vec![0.05] }, 0.1, &cfg)
            .unwrap();
        assert!((s.q[0] - 1.0).abs() < 1e-12 && (s.p[0] + 0.05).abs() < 1e-12);

        for prob in [MechanicalProblem::free_particle(), MechanicalProblem::constant_potential(3.0)] {
            let s = step_midpoint_hamiltonian(&prob.lagrangian(1), &PhasePoint { q: vec![0.0], p: vec![1.0] }, 0.25, &cfg)
                .unwrap();
            assert!((s.q[0] - 0.25).abs() < 1e-15 && (s.p[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn free_particle_run() {
        let cfg = SolverConfig::default();
        let g = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let free = MechanicalProblem::free_particle().lagrangian(1);
        let init = PhasePoint { q: vec![0.0], p: vec![1.0] };
        for rec in [
            integrate_hamiltonian(&free, &init, &g, &cfg).unwrap(),
            integrate_order1_hamiltonian(&free, &init, &g, &cfg).unwrap(),
        ] {
            assert_eq!(rec.rows.len(), 11);
            assert!((rec.rows[10].q[0] - 1.0).abs() < 1e-14);
            assert!(rec.rows.iter().all(|r| r.p[0] == 1.0));
        }
    }

    #[test]
    fn hamiltonian_and_lagrangian_runs_agree() {
        let cfg = SolverConfig::default();
        let g = TimeGrid::with_step(0.0, 0.1, 2).unwrap();
        let init = PhasePoint { q: vec![1.0], p: vec![0.05] };
        let ham = integrate_hamiltonian(&harmonic(), &init, &g, &cfg).unwrap();
        let lag = integrate_lagrangian(&harmonic(), &[1.0], &[1.0], &g, &cfg).unwrap();
        let q2 = 99.25 / 100.25;
        assert!((ham.rows[2].q[0] - q2).abs() < 1e-12);
        assert!((lag.rows[2].q[0] - q2).abs() < 1e-12);
    }

    #[test]
    fn action_h_examples() {
        let cfg = SolverConfig::default();
        let free = build_hamiltonian(&MechanicalProblem::free_particle().lagrangian(1), &cfg);
        let g = TimeGrid::new(0.0, 3.0, 6).unwrap();
        let q = GridFunction::sample(g.node_set(NodeKind::T), 1, |t| vec![t]).unwrap();
        let p = GridFunction::scalar(g.node_set(NodeKind::T), vec![1.0; 7]).unwrap();
        assert!((action_h(&free, &p, &q).unwrap() - 1.5).abs() < 1e-14);
        let zero = GridFunction::scalar(g.node_set(NodeKind::T), vec![0.0; 7]).unwrap();
        let c = GridFunction::scalar(g.node_set(NodeKind::T), vec![2.0; 7]).unwrap();
        assert_eq!(action_h(&free, &zero, &c).unwrap(), 0.0);

        let h = build_hamiltonian(&harmonic(), &cfg);
        let g = TimeGrid::new(0.0, 0.1, 1).unwrap();
        let q = on_t(&g, vec![vec![1.0], vec![1.0]]);
        let p = on_t(&g, vec![vec![0.05], vec![-0.05]]);
        assert!((action_h(&h, &p, &q).unwrap() + 0.05).abs() < 1e-15);
    }

    #[test]
    fn sh_residual_of_random_data_is_nonzero() {
        let cfg = SolverConfig::default();
        let h = build_hamiltonian(&harmonic(), &cfg);
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let q = on_t(&g, vec![vec![0.1], vec![-0.4], vec![0.9], vec![0.3], vec![0.0]]);
        let p = on_t(&g, vec![vec![1.0], vec![0.2], vec![-0.7], vec![0.5], vec![0.6]]);
        let r = sh_residual(&h, &q, &p).unwrap();
        assert!(r.max_abs() > 1e-3);
        assert_eq!(r.momentum.len(), 3);
        assert_eq!(r.position.len(), 4);
        let crit = criticality_check(&h, &q, &p, 1e-6).unwrap();
        assert!(!crit.is_critical(1e-8));
    }
}
