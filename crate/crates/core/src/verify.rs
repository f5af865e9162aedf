//! Seeded randomized checks of the calculus identities, the scheme
//! equivalences and the Hamiltonian coherence properties.
//!
//! Every check reports the largest observed error (relative to the largest
//! intermediate term unless noted) against its tolerance. Runs are fully
//! determined by the seed.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{
    antiderivative, average_swap_boundary, avg_circ, delta_minus, delta_plus,
    extend, integral_lambda, total_scalar, GridFunction,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_hamiltonian, criticality_check, integrate_hamiltonian, momentum_constraint_residual,
    step_midpoint_hamiltonian, PhasePoint,
};
use crate::lagrangian::{
    action_midpoint, el_residual_local, el_residual_midpoint, frechet_midpoint,
    integrate_lagrangian, wm_el_residual, wm_lagrangian, wm_partials, LagrangianModel,
};
use crate::problems::MechanicalProblem;
use crate::solver::SolverConfig;
use crate::time_grid::{NodeKind, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Grid sizes `N` drawn from for the calculus identities (each ≥ 2).
    pub sizes: Vec<usize>,
    /// Random instances per identity.
    pub instances: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 20_240_601, sizes: (2..=32).collect(), instances: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
    pub instances: usize,
    pub note: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<34} max_error={:.3e} tol={:.1e} n={}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.max_error,
            self.tolerance,
            self.instances
        )?;
        if let Some(note) = &self.note {
            write!(f, "  ({note})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed={}", self.seed)?;
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// `L = Σ (v²/2 + v⁴/12 + 0.3·q·v) - Σ (1 - cos q)`, a non-mechanical
/// admissible Lagrangian (`∂L/∂v = v + v³/3 + 0.3q` is increasing in `v`)
/// without an analytic Legendre inverse.
pub fn quartic_model(dim: usize) -> LagrangianModel {
    LagrangianModel::new(dim, |q, v| {
        q.iter()
            .zip(v)
            .map(|(q, v)| 0.5 * v * v + v.powi(4) / 12.0 + 0.3 * q * v - (1.0 - q.cos()))
            .sum()
    })
    .with_gradients(
        |q, v| q.iter().zip(v).map(|(q, v)| 0.3 * v - q.sin()).collect(),
        |q, v| q.iter().zip(v).map(|(q, v)| v + v.powi(3) / 3.0 + 0.3 * q).collect(),
    )
}

struct Ctx {
    rng: ChaCha8Rng,
    cfg: VerifyConfig,
    solver: SolverConfig,
}

impl Ctx {
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    fn vector(&mut self, d: usize, radius: f64) -> Vec<f64> {
        (0..d).map(|_| self.uniform(-radius, radius)).collect()
    }

    fn grid(&mut self) -> TimeGrid {
        let n = self.cfg.sizes[self.rng.random_range(0..self.cfg.sizes.len())];
        let a = self.uniform(-1.0, 1.0);
        let len = self.uniform(0.5, 3.0);
        TimeGrid::new(a, a + len, n).expect("valid random grid")
    }

    fn dim(&mut self) -> usize {
        self.rng.random_range(1..=3)
    }

    fn function(&mut self, grid: &TimeGrid, kind: NodeKind, d: usize) -> GridFunction {
        let set = grid.node_set(kind);
        let values = self.vector(set.len() * d, 1.0);
        GridFunction::new(set, d, values).expect("sized to the set")
    }

    /// Random function on `T` vanishing at both ends.
    fn variation(&mut self, grid: &TimeGrid, d: usize) -> GridFunction {
        let mut v = self.function(grid, NodeKind::T, d);
        let n = grid.n_intervals();
        v.at_mut(0).fill(0.0);
        v.at_mut(n).fill(0.0);
        v
    }
}

fn rel(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff.abs() / scale.abs().max(f64::MIN_POSITIVE)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn abs_sum(f: &GridFunction) -> f64 {
    f.values().iter().map(|x| x.abs()).sum()
}

struct Acc {
    name: &'static str,
    tolerance: f64,
    max_error: f64,
    instances: usize,
    note: Option<String>,
}

impl Acc {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, tolerance, max_error: 0.0, instances: 0, note: None }
    }

    fn add(&mut self, err: f64) {
        self.instances += 1;
        self.max_error = if err.is_nan() || self.max_error.is_nan() {
            f64::NAN
        } else {
            self.max_error.max(err)
        };
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            max_error: self.max_error,
            tolerance: self.tolerance,
            instances: self.instances,
            note: self.note,
        }
    }
}

/// Runs every check and collects the results; errors only on an invalid
/// configuration or an unexpected internal failure.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    if cfg.sizes.is_empty() || cfg.sizes.iter().any(|&n| n < 2) {
        return Err(Error::domain("verify sizes must be a non-empty list of N >= 2"));
    }
    if cfg.instances == 0 {
        return Err(Error::domain("verify needs at least one instance per check"));
    }
    let mut ctx = Ctx {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg: cfg.clone(),
        solver: SolverConfig::default(),
    };
    let checks = vec![
        check_extension_difference(&mut ctx)?,
        check_integration_by_parts(&mut ctx)?,
        check_average_swap(&mut ctx)?,
        check_average_swap_boundary(&mut ctx)?,
        check_dubois_raymond(&mut ctx)?,
        check_fundamental_theorem(&mut ctx)?,
        check_frechet(&mut ctx)?,
        check_wm_functional(&mut ctx)?,
        check_mechanical_form(&mut ctx)?,
        check_wm_residual(&mut ctx)?,
        check_seeding_equivalence(&mut ctx)?,
        check_momentum_constraint(&mut ctx)?,
        check_wm_momentum(&mut ctx)?,
        check_hamiltonian_gradients(&mut ctx)?,
        check_criticality(&mut ctx)?,
        check_quadratic_invariant(&mut ctx)?,
        check_time_reversal(&mut ctx)?,
    ];
    Ok(VerifyReport { seed: cfg.seed, checks })
}

fn check_extension_difference(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("extension_difference", 1e-14);
    for _ in 0..ctx.cfg.instances {
        let g = ctx.grid();
        let d = ctx.dim();
        let f = ctx.function(&g, NodeKind::T, d);
        let lhs = delta_plus(&extend(&f)?)?.restrict(NodeKind::THalf)?;
        let rhs = delta_plus(&f)?;
        acc.add(rel(max_diff(lhs.values(), rhs.values()), rhs.max_abs()));
    }
    Ok(acc.finish())
}

/// `∫ f·Δ∘,₊[v∘] Δ_{1/2}t` and the right-hand side of the summation by
/// parts, plus the largest term magnitude.
fn ibp_sides(f: &GridFunction, v: &GridFunction) -> Result<(f64, f64, f64)> {
    let n = v.grid().n_intervals();
    let dv = delta_plus(&extend(v)?)?.restrict(NodeKind::THalf)?;
    let left_integrand = f.dot(&dv)?;
    let lhs = total_scalar(&left_integrand, 0.5)?;
    let right_integrand = delta_minus(f)?
        .compose_sigma_circ(NodeKind::TPm)?
        .dot(&v.restrict(NodeKind::TPm)?)?
        .zero_extend()?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let boundary = dot(f.at(n - 1), v.at(n)) - dot(f.at(0), v.at(0));
    let rhs = -total_scalar(&right_integrand, 0.0)? + boundary;
    let h = v.grid().step();
    let scale = (abs_sum(&left_integrand) + abs_sum(&right_integrand)) * h + boundary.abs();
    Ok((lhs, rhs, scale))
}

fn check_integration_by_parts(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("integration_by_parts", 1e-12);
    for _ in 0..ctx.cfg.instances {
        let g = ctx.grid();
        let d = ctx.dim();
        let f = ctx.function(&g, NodeKind::THalf, d);
        let v = ctx.function(&g, NodeKind::T, d);
        let (lhs, rhs, scale) = ibp_sides(&f, &v)?;
        acc.add(rel(lhs - rhs, scale));
    }
    Ok(acc.finish())
}

/// `(∫ f·v∘ Δ_{1/2}t, ∫ [f]∘·v Δt, scale)`, the right integral over the
/// interior nodes.
fn average_swap_sides(f: &GridFunction, v: &GridFunction) -> Result<(f64, f64, f64)> {
    let left = f.dot(&extend(v)?.restrict(NodeKind::THalf)?)?;
    let right = avg_circ(f)?.dot(&v.restrict(NodeKind::TPm)?)?.zero_extend()?;
    let h = v.grid().step();
    let scale = (abs_sum(&left) + abs_sum(&right)) * h;
    Ok((total_scalar(&left, 0.5)?, total_scalar(&right, 0.0)?, scale))
}

fn check_average_swap(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("average_swap", 1e-12);
    for _ in 0..ctx.cfg.instances {
        let g = ctx.grid();
        let d = ctx.dim();
        let f = ctx.function(&g, NodeKind::THalf, d);
        let v = ctx.variation(&g, d);
        let (lhs, rhs, scale) = average_swap_sides(&f, &v)?;
        acc.add(rel(lhs - rhs, scale));
    }
    Ok(acc.finish())
}

/// Measures which boundary coefficient, `h/2` or `h`, closes the average
/// swap when `v` does not vanish at the ends. Passes on the implemented
/// `h/2`; the note carries both residuals.
fn check_average_swap_boundary(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("average_swap_boundary_coefficient", 1e-12);
    let mut worst_full_h = 0.0f64;
    for _ in 0..ctx.cfg.instances {
        let g = ctx.grid();
        let d = ctx.dim();
        let f = ctx.function(&g, NodeKind::THalf, d);
        let v = ctx.function(&g, NodeKind::T, d);
        let (lhs, rhs, scale) = average_swap_sides(&f, &v)?;
        let half = average_swap_boundary(&f, &v)?;
        let scale = scale + 2.0 * half.abs();
        acc.add(rel(lhs - rhs - half, scale));
        worst_full_h = worst_full_h.max(rel(lhs - rhs - 2.0 * half, scale));
    }
    let winner = if acc.max_error <= acc.tolerance && worst_full_h > acc.tolerance {
        "h/2"
    } else if worst_full_h <= acc.tolerance {
        "h"
    } else {
        "neither"
    };
    acc.note = Some(format!(
        "coefficient closing the identity: {winner}; residual with h/2 {:.1e}, with h {:.1e}",
        acc.max_error, worst_full_h
    ));
    Ok(acc.finish())
}

/// Contrapositive: for `g` nonzero on the interior some canonical variation
/// detects it, and the largest pairing equals `h·max|g(T±)|`.
fn check_dubois_raymond(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("dubois_raymond", 1e-12);
    for _ in 0..ctx.cfg.instances {
        let grid = ctx.grid();
        let d = ctx.dim();
        let n = grid.n_intervals();
        let g = ctx.function(&grid, NodeKind::T, d);
        let mut largest = 0.0f64;
        for node in 1..n {
            for c in 0..d {
                let mut e = GridFunction::zeros(grid.node_set(NodeKind::T), d);
                e.at_mut(node)[c] = 1.0;
                let pairing = total_scalar(&g.dot(&e)?, 0.0)?;
                largest = largest.max(pairing.abs());
            }
        }
        let interior = g.restrict(NodeKind::TPm)?.max_abs();
        let expected = grid.step() * interior;
        acc.add(if interior > 0.0 && largest == 0.0 { 1.0 } else { rel(largest - expected, expected) });
    }
    Ok(acc.finish())
}

fn check_fundamental_theorem(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("fundamental_theorem", 1e-12);
    for _ in 0..ctx.cfg.instances {
        let g = ctx.grid();
        let d = ctx.dim();
        let n = g.n_intervals();
        let f = ctx.function(&g, NodeKind::T, d);
        let total = integral_lambda(&delta_plus(&f)?, 0.0, 0, n)?;
        let exact: Vec<f64> = f.at(n).iter().zip(f.at(0)).map(|(b, a)| b - a).collect();
        acc.add(rel(max_diff(&total, &exact), f.max_abs()));

        let fp = f.restrict(NodeKind::TPlus)?;
        let back = delta_plus(&antiderivative(&fp, 0.0)?)?;
        acc.add(rel(max_diff(back.values(), fp.values()), fp.max_abs()));
    }
    Ok(acc.finish())
}

fn models_for_frechet() -> Vec<(&'static str, LagrangianModel)> {
    vec![
        ("harmonic", MechanicalProblem::harmonic_oscillator().lagrangian(1)),
        ("pendulum", MechanicalProblem::pendulum().lagrangian(2)),
        ("quartic", quartic_model(2)),
    ]
}

/// Richardson-extrapolated central difference of `action_midpoint` along `v`.
fn action_directional_fd(model: &LagrangianModel, q: &GridFunction, v: &GridFunction) -> Result<f64> {
    let central = |eps: f64| -> Result<f64> {
        let plus = GridFunction::new(
            *q.set(),
            q.dim(),
            q.values().iter().zip(v.values()).map(|(a, b)| a + eps * b).collect(),
        )?;
        let minus = GridFunction::new(
            *q.set(),
            q.dim(),
            q.values().iter().zip(v.values()).map(|(a, b)| a - eps * b).collect(),
        )?;
        Ok((action_midpoint(model, &plus)? - action_midpoint(model, &minus)?) / (2.0 * eps))
    };
    let (coarse, fine) = (central(1e-3)?, central(5e-4)?);
    Ok((4.0 * fine - coarse) / 3.0)
}

fn check_frechet(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("frechet_derivative", 1e-6);
    let per_model = ctx.cfg.instances.div_ceil(2);
    for (_, model) in models_for_frechet() {
        for _ in 0..per_model {
            let n = [4, 8, 16][ctx.rng.random_range(0..3)];
            let len = ctx.uniform(0.5, 2.0);
            let g = TimeGrid::new(0.0, len, n)?;
            let q = ctx.function(&g, NodeKind::T, model.dim());
            let v = ctx.variation(&g, model.dim());
            let exact = frechet_midpoint(&model, &q, &v)?;
            let fd = action_directional_fd(&model, &q, &v)?;
            let r = el_residual_midpoint(&model, &q)?.compose_sigma_circ(NodeKind::TPm)?;
            let scale = abs_sum(&r.dot(&v.restrict(NodeKind::TPm)?)?) * g.step();
            acc.add(rel(exact - fd, scale));
        }
    }
    Ok(acc.finish())
}

fn check_wm_functional(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("wm_functional_equality", 1e-14);
    for (_, model) in models_for_frechet() {
        for _ in 0..ctx.cfg.instances.div_ceil(3) {
            let g = ctx.grid();
            let q = ctx.function(&g, NodeKind::T, model.dim());
            let rows = q.to_rows();
            let mut sum = 0.0;
            let mut scale = 0.0;
            for w in rows.windows(2) {
                let term = wm_lagrangian(&model, &w[0], &w[1], g.step())?;
                sum += term;
                scale += term.abs();
            }
            acc.add(rel(sum - action_midpoint(&model, &q)?, scale));
        }
    }
    Ok(acc.finish())
}

fn check_mechanical_form(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("mechanical_form", 1e-12);
    for prob in [
        MechanicalProblem::harmonic_oscillator(),
        MechanicalProblem::pendulum(),
        MechanicalProblem::free_particle(),
    ] {
        for _ in 0..ctx.cfg.instances {
            let d = ctx.dim();
            let h = ctx.uniform(0.01, 0.5);
            let (a, b, c) = (ctx.vector(d, 2.0), ctx.vector(d, 2.0), ctx.vector(d, 2.0));
            let model = prob.lagrangian(d);
            let general = el_residual_local(&model, &a, &b, &c, h);
            let mech = prob.scheme_residual(&a, &b, &c, h);
            let scale = (0..d)
                .map(|j| (a[j].abs() + 2.0 * b[j].abs() + c[j].abs()) / (h * h) + 2.0)
                .fold(0.0, f64::max);
            let diff = general.iter().zip(&mech).fold(0.0f64, |m, (x, y)| m.max((x + y).abs()));
            acc.add(rel(diff, scale));
        }
    }
    acc.note = Some("general residual = -(mechanical form)".into());
    Ok(acc.finish())
}

fn check_wm_residual(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("wm_residual_constant", 1e-12);
    let (mut num, mut den) = (0.0, 0.0);
    for (_, model) in models_for_frechet() {
        for _ in 0..ctx.cfg.instances {
            let d = model.dim();
            let h = ctx.uniform(0.01, 0.5);
            let (a, b, c) = (ctx.vector(d, 2.0), ctx.vector(d, 2.0), ctx.vector(d, 2.0));
            let wm = wm_el_residual(&model, &a, &b, &c, h)?;
            let el = el_residual_local(&model, &a, &b, &c, h);
            let scale = el.iter().fold(0.0f64, |m, x| m.max(h * x.abs())).max(
                wm_partials(&model, &b, &c, h)?.0.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            );
            let diff = wm.iter().zip(&el).fold(0.0f64, |m, (w, e)| m.max((w - h * e).abs()));
            acc.add(rel(diff, scale));
            for (w, e) in wm.iter().zip(&el) {
                num += w * e / h;
                den += e * e;
            }
        }
    }
    acc.note = Some(format!("measured wm = c·h·r with c = {:+.12}", num / den));
    Ok(acc.finish())
}

fn harmonic_or_pendulum(ctx: &mut Ctx) -> MechanicalProblem {
    if ctx.rng.random_bool(0.5) {
        MechanicalProblem::harmonic_oscillator()
    } else {
        MechanicalProblem::pendulum()
    }
}

/// Hamiltonian run and the Lagrangian run seeded by its first step.
fn paired_runs(
    model: &LagrangianModel,
    init: &PhasePoint,
    grid: &TimeGrid,
    cfg: &SolverConfig,
) -> Result<(crate::record::TrajectoryRecord, crate::record::TrajectoryRecord)> {
    let first = step_midpoint_hamiltonian(model, init, grid.step(), cfg)?;
    let ham = integrate_hamiltonian(model, init, grid, cfg)?;
    let lag = integrate_lagrangian(model, &init.q, &first.q, grid, cfg)?;
    Ok((ham, lag))
}

fn max_row_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max(max_diff(x, y)))
}

fn check_seeding_equivalence(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("seeding_equivalence", 1e-10);
    for _ in 0..ctx.cfg.instances.div_ceil(20) {
        let prob = harmonic_or_pendulum(ctx);
        let d = ctx.dim();
        let model = prob.lagrangian(d);
        let init = PhasePoint { q: ctx.vector(d, 1.0), p: ctx.vector(d, 1.0) };
        let grid = TimeGrid::with_step(0.0, 0.05, 100)?;
        let (ham, lag) = paired_runs(&model, &init, &grid, &ctx.solver)?;
        acc.add(max_row_diff(&ham.positions(), &lag.positions()));
        acc.add(max_row_diff(&ham.momenta(), &lag.momenta()));
    }
    acc.note = Some("absolute, q and p over N=100, h=0.05".into());
    Ok(acc.finish())
}

fn on_t(grid: &TimeGrid, rows: &[Vec<f64>]) -> Result<GridFunction> {
    GridFunction::from_rows(grid.node_set(NodeKind::T), rows)
}

fn critical_trajectory(ctx: &mut Ctx, model: &LagrangianModel, n: usize, h: f64) -> Result<(TimeGrid, GridFunction, GridFunction)> {
    let d = model.dim();
    let grid = TimeGrid::with_step(0.0, h, n)?;
    let q0 = ctx.vector(d, 1.0);
    let q1: Vec<f64> = q0.iter().map(|x| x + h * ctx.uniform(-1.0, 1.0)).collect();
    let rec = integrate_lagrangian(model, &q0, &q1, &grid, &ctx.solver)?;
    Ok((grid, on_t(&grid, &rec.positions())?, on_t(&grid, &rec.momenta())?))
}

fn check_momentum_constraint(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("momentum_constraint", 1e-10);
    for _ in 0..ctx.cfg.instances.div_ceil(5) {
        let model = if ctx.rng.random_bool(0.5) {
            harmonic_or_pendulum(ctx).lagrangian(2)
        } else {
            quartic_model(2)
        };
        let n = ctx.rng.random_range(2..=40);
        let (_, q, p) = critical_trajectory(ctx, &model, n, 0.1)?;
        acc.add(momentum_constraint_residual(&model, &q, &p)?.max_abs());
    }
    acc.note = Some("absolute, on critical trajectories".into());
    Ok(acc.finish())
}

fn check_wm_momentum(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("wm_momentum", 1e-10);
    for _ in 0..ctx.cfg.instances.div_ceil(5) {
        let model = quartic_model(1);
        let n = ctx.rng.random_range(2..=40);
        let h = 0.1;
        let (_, q, p) = critical_trajectory(ctx, &model, n, h)?;
        for i in 0..=n {
            if i >= 1 {
                let (_, dy) = wm_partials(&model, q.at(i - 1), q.at(i), h)?;
                acc.add(max_diff(p.at(i), &dy));
            }
            if i < n {
                let (dx, _) = wm_partials(&model, q.at(i), q.at(i + 1), h)?;
                let minus_dx: Vec<f64> = dx.iter().map(|x| -x).collect();
                acc.add(max_diff(p.at(i), &minus_dx));
            }
        }
    }
    acc.note = Some("p_i = +∂_y L_h(q_{i-1}, q_i) = -∂_x L_h(q_i, q_{i+1})".into());
    Ok(acc.finish())
}

fn check_hamiltonian_gradients(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("hamiltonian_gradients", 1e-6);
    let models = [
        MechanicalProblem::pendulum().lagrangian(2),
        MechanicalProblem::harmonic_oscillator().lagrangian(2),
        quartic_model(2),
    ];
    let eps = 1e-4;
    for model in &models {
        let ham = build_hamiltonian(model, &ctx.solver);
        for _ in 0..ctx.cfg.instances.div_ceil(3) {
            let (p, q) = (ctx.vector(2, 1.5), ctx.vector(2, 1.5));
            let (gp, gq) = (ham.grad_p(&p, &q)?, ham.grad_q(&p, &q)?);
            for j in 0..2 {
                let bump = |x: &[f64], s: f64| {
                    let mut y = x.to_vec();
                    y[j] += s;
                    y
                };
                let fd_p = (ham.energy(&bump(&p, eps), &q)? - ham.energy(&bump(&p, -eps), &q)?) / (2.0 * eps);
                let fd_q = (ham.energy(&p, &bump(&q, eps))? - ham.energy(&p, &bump(&q, -eps))?) / (2.0 * eps);
                acc.add(rel(fd_p - gp[j], gp[j].abs().max(1.0)));
                acc.add(rel(fd_q - gq[j], gq[j].abs().max(1.0)));
            }
        }
    }
    Ok(acc.finish())
}

/// Solutions must be critical (≤ 1e-8); perturbed solutions must not be.
fn check_criticality(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("action_h_criticality", 1e-8);
    let mut undetected = 0usize;
    for _ in 0..ctx.cfg.instances.div_ceil(10) {
        let model = if ctx.rng.random_bool(0.5) {
            harmonic_or_pendulum(ctx).lagrangian(1)
        } else {
            quartic_model(1)
        };
        let ham = build_hamiltonian(&model, &ctx.solver);
        let n = ctx.rng.random_range(2..=12);
        let grid = TimeGrid::with_step(0.0, 0.1, n)?;
        let init = PhasePoint { q: ctx.vector(1, 1.0), p: ctx.vector(1, 1.0) };
        let rec = integrate_hamiltonian(&model, &init, &grid, &ctx.solver)?;
        let q = on_t(&grid, &rec.positions())?;
        let mut p = on_t(&grid, &rec.momenta())?;
        let report = criticality_check(&ham, &q, &p, 1e-6)?;
        acc.add(report.max_directional_derivative.max(report.max_residual));
        let node = ctx.rng.random_range(0..=n);
        p.at_mut(node)[0] += 1e-3;
        if criticality_check(&ham, &q, &p, 1e-6)?.is_critical(acc.tolerance) {
            undetected += 1;
        }
    }
    if undetected > 0 {
        acc.max_error = f64::INFINITY;
    }
    acc.note = Some(format!("absolute; perturbed solutions flagged non-critical, {undetected} missed"));
    Ok(acc.finish())
}

fn check_quadratic_invariant(ctx: &mut Ctx) -> Result<CheckResult> {
    let n = 200;
    let mut acc = Acc::new("quadratic_invariant", n as f64 * 10.0 * ctx.solver.tol);
    for _ in 0..ctx.cfg.instances.div_ceil(20) {
        let model = MechanicalProblem::harmonic_oscillator().lagrangian(1);
        let init = PhasePoint { q: ctx.vector(1, 1.0), p: ctx.vector(1, 1.0) };
        let grid = TimeGrid::with_step(0.0, ctx.uniform(0.01, 0.2), n)?;
        let rec = integrate_hamiltonian(&model, &init, &grid, &ctx.solver)?;
        let r0 = init.q[0].powi(2) + init.p[0].powi(2);
        for row in &rec.rows {
            acc.add((row.q[0].powi(2) + row.p[0].powi(2) - r0).abs());
        }
    }
    acc.note = Some("absolute |q²+p² - (q₀²+p₀²)|, bound N·10·tol".into());
    Ok(acc.finish())
}

fn check_time_reversal(ctx: &mut Ctx) -> Result<CheckResult> {
    let mut acc = Acc::new("time_reversal", 1e-10);
    for _ in 0..ctx.cfg.instances.div_ceil(10) {
        let model = harmonic_or_pendulum(ctx).lagrangian(2);
        let n = ctx.rng.random_range(2..=30);
        let (grid, q, _) = critical_trajectory(ctx, &model, n, 0.1)?;
        let mut rows = q.to_rows();
        acc.add(el_residual_midpoint(&model, &q)?.max_abs());
        rows.reverse();
        acc.add(el_residual_midpoint(&model, &on_t(&grid, &rows)?)?.max_abs());
    }
    acc.note = Some("absolute residual of the reversed sequence".into());
    Ok(acc.finish())
}
