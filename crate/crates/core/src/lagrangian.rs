//! Mid-point discrete Lagrangian mechanics.
//!
//! A trajectory `q` on `T` is mapped to its star points
//! `⋆∘(t_{i+1/2}) = (q∘(t_{i+1/2}), Δ∘,₊[q∘](t_{i+1/2}))`, the Lagrangian is
//! evaluated there and integrated with the mid-point rule. Critical points of
//! this action solve the mid-point Euler–Lagrange equation
//!
//! ```text
//! [∂L/∂q(⋆∘)]_{1/2,-} = Δ_{1/2,-}[∂L/∂v(⋆∘)]   on T_half⁻
//! ```
//!
//! which, given `(q_{i-1}, q_i)`, is an implicit equation for `q_{i+1}`.
//! The two-point discrete Lagrangian `h·L((x+y)/2, (y-x)/h)` form of the same
//! scheme is provided for cross-checking.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::calculus::{
    avg_half_minus, delta_minus, delta_plus, extend, integral_lambda, integral_midpoint,
    GridFunction,
};
use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::{momentum_from_positions, HamiltonianModel};
use crate::record::{Scheme, SolverStats, TrajectoryRecord};
use crate::solver::{inf_norm, solve_root, Method, Solution, SolverConfig};
use crate::time_grid::{NodeKind, TimeGrid};

/// `(q, v) ↦ scalar`.
pub type ScalarFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
/// `(x, y) ↦ d-vector`; argument meaning depends on the slot (`(q, v)` for
/// gradients, `(p, q)` for the Legendre inverse).
pub type VectorFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// An autonomous Lagrangian `L(q, v)` on `ℝᵈ × ℝᵈ`.
///
/// Gradients not supplied analytically are synthesized by central
/// differences with step `max(1e-6, 1e-6·|x|)`.
#[derive(Clone)]
pub struct LagrangianModel {
    dim: usize,
    lagrangian: ScalarFn,
    grad_q: Option<VectorFn>,
    grad_v: Option<VectorFn>,
    legendre_inverse: Option<VectorFn>,
}

impl fmt::Debug for LagrangianModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LagrangianModel")
            .field("dim", &self.dim)
            .field("analytic_grad_q", &self.grad_q.is_some())
            .field("analytic_grad_v", &self.grad_v.is_some())
            .field("legendre_inverse", &self.legendre_inverse.is_some())
            .finish()
    }
}

fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|j| {
            let step = (1e-6 * x[j].abs()).max(1e-6);
            xp[j] = x[j] + step;
            let fp = f(&xp);
            xp[j] = x[j] - step;
            let fm = f(&xp);
            xp[j] = x[j];
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

impl LagrangianModel {
    pub fn new<F>(dim: usize, lagrangian: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            lagrangian: Arc::new(lagrangian),
            grad_q: None,
            grad_v: None,
            legendre_inverse: None,
        }
    }

    pub fn with_gradients<GQ, GV>(mut self, grad_q: GQ, grad_v: GV) -> Self
    where
        GQ: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        GV: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.grad_q = Some(Arc::new(grad_q));
        self.grad_v = Some(Arc::new(grad_v));
        self
    }

    /// Supplies `g(p, q)` with `∂L/∂v(q, g(p, q)) = p`.
    pub fn with_legendre_inverse<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.legendre_inverse = Some(Arc::new(g));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, q: &[f64], v: &[f64]) -> f64 {
        (self.lagrangian)(q, v)
    }

    pub fn grad_q(&self, q: &[f64], v: &[f64]) -> Vec<f64> {
        match &self.grad_q {
            Some(g) => g(q, v),
            None => central_gradient(|x| self.eval(x, v), q),
        }
    }

    pub fn grad_v(&self, q: &[f64], v: &[f64]) -> Vec<f64> {
        match &self.grad_v {
            Some(g) => g(q, v),
            None => central_gradient(|x| self.eval(q, x), v),
        }
    }

    pub fn analytic_legendre_inverse(&self) -> Option<&VectorFn> {
        self.legendre_inverse.as_ref()
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim, x.len())
    }

    /// Compares the gradients with central differences of `L`, and the
    /// Legendre inverse (when present) with `∂L/∂v`, at `samples` random
    /// points in `[-radius, radius]^{2d}`.
    pub fn self_check<R: Rng>(&self, rng: &mut R, samples: usize, radius: f64) -> GradientCheck {
        let mut report = GradientCheck::default();
        let d = self.dim;
        let draw = |rng: &mut R| -> Vec<f64> {
            (0..d).map(|_| rng.random_range(-radius..radius)).collect()
        };
        for _ in 0..samples {
            let q = draw(rng);
            let v = draw(rng);
            let fd_q = central_gradient(|x| self.eval(x, &v), &q);
            let fd_v = central_gradient(|x| self.eval(&q, x), &v);
            report.max_grad_rel_error = report
                .max_grad_rel_error
                .max(rel_diff(&self.grad_q(&q, &v), &fd_q))
                .max(rel_diff(&self.grad_v(&q, &v), &fd_v));
            if let Some(g) = &self.legendre_inverse {
                let p = draw(rng);
                let back = self.grad_v(&q, &g(&p, &q));
                let err = back.iter().zip(&p).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                report.max_legendre_error = Some(report.max_legendre_error.unwrap_or(0.0).max(err));
            }
        }
        report
    }
}

/// Outcome of [`LagrangianModel::self_check`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradientCheck {
    pub max_grad_rel_error: f64,
    pub max_legendre_error: Option<f64>,
}

impl GradientCheck {
    pub fn passes(&self) -> bool {
        self.max_grad_rel_error <= 1e-6 && self.max_legendre_error.is_none_or(|e| e <= 1e-10)
    }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = inf_norm(a).max(inf_norm(b)).max(1.0);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// `(q∘, Δ∘,₊[q∘])` at one half node.
#[derive(Debug, Clone, PartialEq)]
pub struct StarPoint {
    pub q_half: Vec<f64>,
    pub v_half: Vec<f64>,
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("step h must be positive, got {h}")))
    }
}

/// `(q_i, q_{i+1}) ↦ ((q_i + q_{i+1})/2, (q_{i+1} - q_i)/h)`.
pub fn reconstruct_star(q_i: &[f64], q_ip1: &[f64], h: f64) -> Result<StarPoint> {
    check_step(h)?;
    check_dim(q_i.len(), q_ip1.len())?;
    Ok(star_unchecked(q_i, q_ip1, h))
}

fn star_unchecked(q_i: &[f64], q_ip1: &[f64], h: f64) -> StarPoint {
    StarPoint {
        q_half: q_i.iter().zip(q_ip1).map(|(a, b)| 0.5 * (a + b)).collect(),
        v_half: q_i.iter().zip(q_ip1).map(|(a, b)| (b - a) / h).collect(),
    }
}

/// Inverse of [`reconstruct_star`].
pub fn reconstruct_q(star: &StarPoint, h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_step(h)?;
    check_dim(star.q_half.len(), star.v_half.len())?;
    let lo = star.q_half.iter().zip(&star.v_half).map(|(q, v)| q - 0.5 * h * v).collect();
    let hi = star.q_half.iter().zip(&star.v_half).map(|(q, v)| q + 0.5 * h * v).collect();
    Ok((lo, hi))
}

fn expect_on_t(q: &GridFunction, model: &LagrangianModel) -> Result<()> {
    if q.kind() != NodeKind::T {
        return Err(Error::domain(format!("trajectory must live on T, got {}", q.kind())));
    }
    check_dim(model.dim(), q.dim())
}

/// Star points of `q` as two functions on `T_half`.
pub fn star_points(q: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    let qc = extend(q)?;
    let q_half = qc.restrict(NodeKind::THalf)?;
    let v_half = delta_plus(&qc)?.restrict(NodeKind::THalf)?;
    Ok((q_half, v_half))
}

/// `(∂L/∂q(⋆∘), ∂L/∂v(⋆∘))` on `T_half`.
fn star_gradients(model: &LagrangianModel, q: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    let (qh, vh) = star_points(q)?;
    let set = *qh.set();
    let d = model.dim();
    let mut gq = Vec::with_capacity(set.len() * d);
    let mut gv = Vec::with_capacity(set.len() * d);
    for k in 0..set.len() {
        gq.extend(model.grad_q(qh.at(k), vh.at(k)));
        gv.extend(model.grad_v(qh.at(k), vh.at(k)));
    }
    Ok((GridFunction::new(set, d, gq)?, GridFunction::new(set, d, gv)?))
}

/// `Σ_i L((q_i + q_{i+1})/2, (q_{i+1} - q_i)/h)·h`.
pub fn action_midpoint(model: &LagrangianModel, q: &GridFunction) -> Result<f64> {
    expect_on_t(q, model)?;
    let (qh, vh) = star_points(q)?;
    let values = (0..qh.len()).map(|k| model.eval(qh.at(k), vh.at(k))).collect();
    let integrand = GridFunction::scalar(*qh.set(), values)?;
    Ok(integral_midpoint(&integrand, 0, q.grid().n_intervals())?[0])
}

/// Order-one action `Σ_i L(q_i, Δ₊q(t_i))·h`.
pub fn action_order1(model: &LagrangianModel, q: &GridFunction) -> Result<f64> {
    expect_on_t(q, model)?;
    let v = delta_plus(q)?;
    let qp = q.restrict(NodeKind::TPlus)?;
    let values = (0..v.len()).map(|k| model.eval(qp.at(k), v.at(k))).collect();
    let integrand = GridFunction::scalar(*v.set(), values)?;
    Ok(integral_lambda(&integrand, 0.0, 0, q.grid().n_intervals())?[0])
}

/// `[∂L/∂q(⋆∘)]_{1/2,-} - Δ_{1/2,-}[∂L/∂v(⋆∘)]` on `T_half⁻`.
///
/// The value at `t_{i+1/2}` (`i = 1..N-1`) is the equation attached to the
/// interior node `q_i`; it vanishes for all `i` iff `q` is critical.
pub fn el_residual_midpoint(model: &LagrangianModel, q: &GridFunction) -> Result<GridFunction> {
    expect_on_t(q, model)?;
    if q.grid().n_intervals() < 2 {
        return Err(Error::domain("the Euler-Lagrange residual needs N >= 2"));
    }
    let (gq, gv) = star_gradients(model, q)?;
    avg_half_minus(&gq)?.sub(&delta_minus(&gv)?)
}

/// Directional derivative of [`action_midpoint`] at `q` along `v ∈ 𝓥`:
/// `∫ ([∂L/∂q(⋆∘)]_{1/2,-} - Δ_{1/2,-}[∂L/∂v(⋆∘)])(σ∘(t))·v(t) Δt`.
pub fn frechet_midpoint(model: &LagrangianModel, q: &GridFunction, v: &GridFunction) -> Result<f64> {
    expect_on_t(q, model)?;
    if v.set() != q.set() || v.dim() != q.dim() {
        return Err(Error::domain("variation must live on the same grid as q"));
    }
    let n = q.grid().n_intervals();
    if v.at(0).iter().chain(v.at(n)).any(|&x| x != 0.0) {
        return Err(Error::domain("variation must vanish at both end points"));
    }
    if n < 2 {
        return Ok(0.0);
    }
    let el = el_residual_midpoint(model, q)?.compose_sigma_circ(NodeKind::TPm)?;
    let integrand = el.dot(&v.restrict(NodeKind::TPm)?)?.zero_extend()?;
    Ok(integral_lambda(&integrand, 0.0, 0, n)?[0])
}

/// Residual of the scheme at the half node between `q_curr` and `q_next`.
pub fn el_residual_local(
    model: &LagrangianModel,
    q_prev: &[f64],
    q_curr: &[f64],
    q_next: &[f64],
    h: f64,
) -> Vec<f64> {
    let lo = star_unchecked(q_prev, q_curr, h);
    let hi = star_unchecked(q_curr, q_next, h);
    let gq_lo = model.grad_q(&lo.q_half, &lo.v_half);
    let gq_hi = model.grad_q(&hi.q_half, &hi.v_half);
    let gv_lo = model.grad_v(&lo.q_half, &lo.v_half);
    let gv_hi = model.grad_v(&hi.q_half, &hi.v_half);
    (0..q_curr.len())
        .map(|c| 0.5 * (gq_hi[c] + gq_lo[c]) - (gv_hi[c] - gv_lo[c]) / h)
        .collect()
}

pub(crate) fn step_lagrangian_solution(
    model: &LagrangianModel,
    q_prev: &[f64],
    q_curr: &[f64],
    h: f64,
    cfg: &SolverConfig,
) -> Result<Solution> {
    check_step(h)?;
    model.check_point(q_prev)?;
    model.check_point(q_curr)?;
    let guess: Vec<f64> = q_prev.iter().zip(q_curr).map(|(a, b)| 2.0 * b - a).collect();
    match cfg.method {
        Method::Newton => solve_root(
            |x| Ok(el_residual_local(model, q_prev, q_curr, x, h)),
            &guess,
            cfg,
        ),
        // Position form -h²·r = x - Φ(x), contractive for small h.
        Method::FixedPoint => solve_root(
            |x| {
                Ok(el_residual_local(model, q_prev, q_curr, x, h)
                    .into_iter()
                    .map(|r| -h * h * r)
                    .collect())
            },
            &guess,
            cfg,
        ),
    }
}

/// Solves the scheme for `q_{i+1}` given `(q_{i-1}, q_i)`.
///
/// Newton drives the residual at the bridging half node below `cfg.tol`, or
/// to its rounding floor (`~ulp(q)/h²`) when that is larger. The fixed-point
/// variant measures the residual in position units (`h²·r`).
pub fn step_midpoint_lagrangian(
    model: &LagrangianModel,
    q_prev: &[f64],
    q_curr: &[f64],
    h: f64,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    step_lagrangian_solution(model, q_prev, q_curr, h, cfg).map(|s| s.x)
}

/// Runs the two-step recursion from `(q_0, q_1)` over `grid`.
///
/// On failure the record holds the nodes computed so far and `failure`
/// describes the failing step.
pub fn run_lagrangian(
    model: &LagrangianModel,
    q0: &[f64],
    q1: &[f64],
    grid: &TimeGrid,
    cfg: &SolverConfig,
) -> (TrajectoryRecord, Option<Error>) {
    let h = grid.step();
    let mut stats = SolverStats::default();
    let mut qs = vec![q0.to_vec(), q1.to_vec()];
    let mut failure = model.check_point(q0).and(model.check_point(q1)).err();
    if failure.is_none() {
        for i in 1..grid.n_intervals() {
            match step_lagrangian_solution(model, &qs[i - 1], &qs[i], h, cfg) {
                Ok(sol) => {
                    stats.record(&sol);
                    qs.push(sol.x);
                }
                Err(e) => {
                    failure = Some(e.at_step(i + 1));
                    break;
                }
            }
        }
    }
    let ps = if qs.len() >= 2 {
        momentum_from_positions(model, &qs, h)
    } else {
        vec![vec![f64::NAN; model.dim()]; qs.len()]
    };
    let ham = HamiltonianModel::new(model.clone(), *cfg);
    let mut record = TrajectoryRecord::new(Scheme::MidpointLagrangian, grid, model.dim());
    record.stats = stats;
    for (i, (q, p)) in qs.into_iter().zip(ps).enumerate() {
        let energy = ham.energy(&p, &q).unwrap_or(f64::NAN);
        record.push(i, grid.node(i), q, p, energy);
    }
    if let Some(e) = &failure {
        record.failure = Some(e.to_string());
    }
    (record, failure)
}

/// [`run_lagrangian`] as a `Result`; `p` is the discrete momentum of the
/// computed positions and `H` is evaluated at `(p_i, q_i)`.
pub fn integrate_lagrangian(
    model: &LagrangianModel,
    q0: &[f64],
    q1: &[f64],
    grid: &TimeGrid,
    cfg: &SolverConfig,
) -> Result<TrajectoryRecord> {
    match run_lagrangian(model, q0, q1, grid, cfg) {
        (record, None) => Ok(record),
        (_, Some(e)) => Err(e),
    }
}

/// Two-point discrete Lagrangian `𝕃_h(x, y) = h·L((x+y)/2, (y-x)/h)`.
pub fn wm_lagrangian(model: &LagrangianModel, x: &[f64], y: &[f64], h: f64) -> Result<f64> {
    let star = reconstruct_star(x, y, h)?;
    Ok(h * model.eval(&star.q_half, &star.v_half))
}

/// `(∂_x 𝕃_h(x, y), ∂_y 𝕃_h(x, y))`.
pub fn wm_partials(model: &LagrangianModel, x: &[f64], y: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let star = reconstruct_star(x, y, h)?;
    let gq = model.grad_q(&star.q_half, &star.v_half);
    let gv = model.grad_v(&star.q_half, &star.v_half);
    let dx = gq.iter().zip(&gv).map(|(a, b)| h * (0.5 * a - b / h)).collect();
    let dy = gq.iter().zip(&gv).map(|(a, b)| h * (0.5 * a + b / h)).collect();
    Ok((dx, dy))
}

/// `∂_x 𝕃_h(q_i, q_{i+1}) + ∂_y 𝕃_h(q_{i-1}, q_i)`.
///
/// Equals `h` times [`el_residual_local`] on the same triple.
pub fn wm_el_residual(
    model: &LagrangianModel,
    q_prev: &[f64],
    q_curr: &[f64],
    q_next: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let (dx, _) = wm_partials(model, q_curr, q_next, h)?;
    let (_, dy) = wm_partials(model, q_prev, q_curr, h)?;
    Ok(dx.iter().zip(&dy).map(|(a, b)| a + b).collect())
}

/// `∂L/∂q(q, Δ₊q) - Δ₋[∂L/∂v(q, Δ₊q)]` at the interior nodes `T_pm`.
pub fn el_residual_order1(model: &LagrangianModel, q: &GridFunction) -> Result<GridFunction> {
    expect_on_t(q, model)?;
    let n = q.grid().n_intervals();
    if n < 2 {
        return Err(Error::domain("the Euler-Lagrange residual needs N >= 2"));
    }
    let h = q.grid().step();
    let v = delta_plus(q)?;
    let d = model.dim();
    let mut values = Vec::with_capacity((n - 1) * d);
    for i in 1..n {
        let gq = model.grad_q(q.at(i), v.at(i));
        let gv = model.grad_v(q.at(i), v.at(i));
        let gv_prev = model.grad_v(q.at(i - 1), v.at(i - 1));
        values.extend((0..d).map(|c| gq[c] - (gv[c] - gv_prev[c]) / h));
    }
    GridFunction::new(q.grid().node_set(NodeKind::TPm), d, values)
}
