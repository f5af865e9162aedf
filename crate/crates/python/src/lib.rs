//! Python bindings: grids, the mid-point calculus on plain lists, the
//! built-in mechanical problems, the three integrators, convergence studies
//! and the seeded verification suite.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use midpoint_vi::calculus::{self, GridFunction};
use midpoint_vi::converge::converge as run_converge;
use midpoint_vi::driver::{simulate as run_simulate, InitialData};
use midpoint_vi::hamiltonian::{self as ham, build_hamiltonian};
use midpoint_vi::lagrangian;
use midpoint_vi::solver::{Method, SolverConfig};
use midpoint_vi::verify::{run_verify, VerifyConfig};
use midpoint_vi::{Error, MechanicalProblem, NodeKind, PhasePoint, Scheme, TrajectoryRecord};

fn to_py(e: Error) -> PyErr {
    if e.is_solver_failure() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn parse_kind(s: &str) -> PyResult<NodeKind> {
    use NodeKind::*;
    let kind = match s {
        "T" => T,
        "T_plus" => TPlus,
        "T_minus" => TMinus,
        "T_pm" => TPm,
        "T_half" => THalf,
        "T_half_plus" => THalfPlus,
        "T_half_minus" => THalfMinus,
        "T_half_pm" => THalfPm,
        "T_circ" => TCirc,
        "T_circ_plus" => TCircPlus,
        "T_circ_minus" => TCircMinus,
        _ => {
            let lambda = s
                .strip_prefix("T_lambda(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|l| l.parse::<f64>().ok())
                .ok_or_else(|| PyValueError::new_err(format!("unknown node kind '{s}'")))?;
            Lambda(lambda)
        }
    };
    Ok(kind)
}

/// Samples on a node set: a flat list for scalar functions, a list of rows
/// otherwise.
#[derive(FromPyObject, IntoPyObject)]
enum Values {
    Scalar(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl Values {
    fn on(self, grid: &TimeGrid, kind: &str) -> PyResult<GridFunction> {
        let set = grid.inner.node_set(parse_kind(kind)?);
        match self {
            Values::Scalar(v) => GridFunction::scalar(set, v),
            Values::Rows(r) => GridFunction::from_rows(set, &r),
        }
        .map_err(to_py)
    }

    fn from_grid(f: &GridFunction, scalar: bool) -> Self {
        if scalar && f.dim() == 1 {
            Values::Scalar(f.values().to_vec())
        } else {
            Values::Rows(f.to_rows())
        }
    }

    fn is_scalar(&self) -> bool {
        matches!(self, Values::Scalar(_))
    }
}

/// Uniform grid `a = t_0 < ... < t_N = b`.
#[pyclass(module = "midpoint_vi", frozen)]
struct TimeGrid {
    inner: midpoint_vi::TimeGrid,
}

#[pymethods]
impl TimeGrid {
    #[new]
    fn new(a: f64, b: f64, n: usize) -> PyResult<Self> {
        Ok(Self { inner: midpoint_vi::TimeGrid::new(a, b, n).map_err(to_py)? })
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a()
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n_intervals()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.step()
    }

    /// Times of the node set `kind` (`"T"`, `"T_half"`, `"T_lambda(0.25)"`, ...).
    #[pyo3(signature = (kind = "T"))]
    fn nodes(&self, kind: &str) -> PyResult<Vec<f64>> {
        Ok(self.inner.node_set(parse_kind(kind)?).times())
    }

    fn __repr__(&self) -> String {
        format!("TimeGrid(a={}, b={}, n={})", self.inner.a(), self.inner.b(), self.inner.n_intervals())
    }
}

/// A built-in problem `L(q, v) = |v|²/2 - V(q)`.
#[pyclass(module = "midpoint_vi", frozen)]
struct Problem {
    inner: MechanicalProblem,
}

#[pymethods]
impl Problem {
    /// `"free_particle"`, `"harmonic"` or `"pendulum"`.
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        Ok(Self { inner: MechanicalProblem::by_name(name).map_err(to_py)? })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn has_exact_solution(&self) -> bool {
        self.inner.has_exact_solution()
    }

    fn potential(&self, q: Vec<f64>) -> f64 {
        self.inner.potential(&q)
    }

    fn potential_grad(&self, q: Vec<f64>) -> Vec<f64> {
        self.inner.potential_grad(&q)
    }

    fn __repr__(&self) -> String {
        format!("Problem('{}')", self.inner.name())
    }
}

/// Rows `(i, t, q, p, H)` of a run; partial when `failure` is set.
#[pyclass(module = "midpoint_vi", frozen)]
struct Trajectory {
    inner: TrajectoryRecord,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn problem(&self) -> &str {
        &self.inner.problem
    }

    #[getter]
    fn scheme(&self) -> &str {
        self.inner.scheme.name()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn t(&self) -> Vec<f64> {
        self.inner.rows.iter().map(|r| r.t).collect()
    }

    #[getter]
    fn q(&self) -> Vec<Vec<f64>> {
        self.inner.positions()
    }

    #[getter]
    fn p(&self) -> Vec<Vec<f64>> {
        self.inner.momenta()
    }

    #[getter]
    fn energy(&self) -> Vec<f64> {
        self.inner.energies()
    }

    #[getter]
    fn failure(&self) -> Option<String> {
        self.inner.failure.clone()
    }

    #[getter]
    fn complete(&self) -> bool {
        self.inner.is_complete()
    }

    #[getter]
    fn newton_iterations(&self) -> usize {
        self.inner.stats.total_iterations
    }

    fn max_energy_deviation(&self) -> f64 {
        self.inner.max_energy_deviation()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv_string()
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(Self { inner: TrajectoryRecord::parse_csv(text).map_err(to_py)? })
    }

    fn __len__(&self) -> usize {
        self.inner.rows.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(problem='{}', scheme='{}', rows={}, complete={})",
            self.inner.problem,
            self.inner.scheme,
            self.inner.rows.len(),
            self.inner.is_complete()
        )
    }
}

fn solver_config(tol: f64, max_iter: usize, method: &str) -> PyResult<SolverConfig> {
    let cfg = SolverConfig {
        tol,
        max_iter,
        method: method.parse::<Method>().map_err(to_py)?,
        ..SolverConfig::default()
    };
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

fn parse_scheme(s: &str) -> PyResult<Scheme> {
    s.parse().map_err(to_py)
}

/// Integrates `problem` with `scheme` over `n` steps of size `h`.
///
/// Give at most one of `p0` and `q1`. A solver failure returns the partial
/// trajectory with `failure` set unless `strict` is true, which raises.
#[pyfunction]
#[pyo3(signature = (problem, scheme = "midpoint_hamiltonian", h = 0.01, n = 1000, q0 = vec![1.0], p0 = None, q1 = None, tol = 1e-12, max_iter = 50, method = "newton", strict = false))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    problem: &Problem,
    scheme: &str,
    h: f64,
    n: usize,
    q0: Vec<f64>,
    p0: Option<Vec<f64>>,
    q1: Option<Vec<f64>>,
    tol: f64,
    max_iter: usize,
    method: &str,
    strict: bool,
) -> PyResult<Trajectory> {
    let scheme = parse_scheme(scheme)?;
    let grid = midpoint_vi::TimeGrid::with_step(0.0, h, n).map_err(to_py)?;
    let cfg = solver_config(tol, max_iter, method)?;
    let init = InitialData::new(q0, p0, q1).map_err(to_py)?;
    let (record, failure) = run_simulate(&problem.inner, scheme, &init, &grid, &cfg);
    match failure {
        Some(e) if strict || !e.is_solver_failure() => Err(to_py(e)),
        _ => Ok(Trajectory { inner: record }),
    }
}

/// Error at `t_final` for each step size; returns `{"rows": [(h, N, error, order)], "slope": float | None}`.
#[pyfunction]
#[pyo3(signature = (problem, scheme = "midpoint_hamiltonian", q0 = vec![1.0], p0 = None, h_list = vec![0.1, 0.05, 0.025, 0.0125], t_final = 1.0))]
fn converge<'py>(
    py: Python<'py>,
    problem: &Problem,
    scheme: &str,
    q0: Vec<f64>,
    p0: Option<Vec<f64>>,
    h_list: Vec<f64>,
    t_final: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let scheme = parse_scheme(scheme)?;
    let p0 = p0.unwrap_or_else(|| vec![0.0; q0.len()]);
    let init = PhasePoint::new(q0, p0).map_err(to_py)?;
    let cfg = SolverConfig::default();
    let table = py
        .detach(|| run_converge(&problem.inner, scheme, &init, &h_list, t_final, &cfg))
        .map_err(to_py)?;
    let rows: Vec<(f64, usize, f64, Option<f64>)> = table.rows.iter().map(|r| (r.h, r.n, r.error, r.order)).collect();
    let out = PyDict::new(py);
    out.set_item("rows", rows)?;
    out.set_item("slope", table.slope)?;
    Ok(out)
}

/// Runs the seeded verification suite; returns `{"seed", "all_passed", "checks"}`.
#[pyfunction]
#[pyo3(signature = (seed = None, sizes = None, instances = None))]
fn verify<'py>(
    py: Python<'py>,
    seed: Option<u64>,
    sizes: Option<Vec<usize>>,
    instances: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let defaults = VerifyConfig::default();
    let cfg = VerifyConfig {
        seed: seed.unwrap_or(defaults.seed),
        sizes: sizes.unwrap_or(defaults.sizes),
        instances: instances.unwrap_or(defaults.instances),
    };
    let report = py.detach(|| run_verify(&cfg)).map_err(to_py)?;
    let checks = report
        .checks
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("name", c.name)?;
            d.set_item("passed", c.passed())?;
            d.set_item("max_error", c.max_error)?;
            d.set_item("tolerance", c.tolerance)?;
            d.set_item("instances", c.instances)?;
            d.set_item("note", &c.note)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let out = PyDict::new(py);
    out.set_item("seed", report.seed)?;
    out.set_item("all_passed", report.all_passed())?;
    out.set_item("checks", checks)?;
    Ok(out)
}

fn unary(
    grid: &TimeGrid,
    kind: &str,
    values: Values,
    op: fn(&GridFunction) -> midpoint_vi::Result<GridFunction>,
) -> PyResult<(String, Values)> {
    let scalar = values.is_scalar();
    let g = op(&values.on(grid, kind)?).map_err(to_py)?;
    Ok((g.kind().to_string(), Values::from_grid(&g, scalar)))
}

/// Extension `f∘` of a function on `T` or `T_half` to `T_circ`; returns `(kind, values)`.
#[pyfunction]
fn extend(grid: &TimeGrid, kind: &str, values: Values) -> PyResult<(String, Values)> {
    unary(grid, kind, values, calculus::extend)
}

/// Forward difference quotient `Δ₊`; returns `(kind, values)`.
#[pyfunction]
fn delta_plus(grid: &TimeGrid, kind: &str, values: Values) -> PyResult<(String, Values)> {
    unary(grid, kind, values, calculus::delta_plus)
}

/// Backward difference quotient `Δ₋`; returns `(kind, values)`.
#[pyfunction]
fn delta_minus(grid: &TimeGrid, kind: &str, values: Values) -> PyResult<(String, Values)> {
    unary(grid, kind, values, calculus::delta_minus)
}

#[pyfunction]
fn avg_half_minus(grid: &TimeGrid, kind: &str, values: Values) -> PyResult<(String, Values)> {
    unary(grid, kind, values, calculus::avg_half_minus)
}

#[pyfunction]
fn avg_circ(grid: &TimeGrid, kind: &str, values: Values) -> PyResult<(String, Values)> {
    unary(grid, kind, values, calculus::avg_circ)
}

/// λ-integral of `f` from `t_i` to `t_j`.
#[pyfunction]
#[pyo3(signature = (grid, kind, values, i, j, lam = 0.5))]
fn integral(grid: &TimeGrid, kind: &str, values: Values, i: usize, j: usize, lam: f64) -> PyResult<Vec<f64>> {
    calculus::integral_lambda(&values.on(grid, kind)?, lam, i, j).map_err(to_py)
}

/// λ-antiderivative `F(t_j) = ∫_{t_0}^{t_j} f` on `T`; returns `(kind, values)`.
#[pyfunction]
#[pyo3(signature = (grid, kind, values, lam = 0.5))]
fn antiderivative(grid: &TimeGrid, kind: &str, values: Values, lam: f64) -> PyResult<(String, Values)> {
    let scalar = values.is_scalar();
    let g = calculus::antiderivative(&values.on(grid, kind)?, lam).map_err(to_py)?;
    Ok((g.kind().to_string(), Values::from_grid(&g, scalar)))
}

/// Mid-point action of positions `q` on `T`.
#[pyfunction]
fn action(problem: &Problem, grid: &TimeGrid, q: Values) -> PyResult<f64> {
    let q = q.on(grid, "T")?;
    lagrangian::action_midpoint(&problem.inner.lagrangian(q.dim()), &q).map_err(to_py)
}

/// Discrete Euler-Lagrange residual of positions `q` on `T`.
#[pyfunction]
fn el_residual(problem: &Problem, grid: &TimeGrid, q: Values) -> PyResult<(String, Values)> {
    let scalar = q.is_scalar();
    let q = q.on(grid, "T")?;
    let r = lagrangian::el_residual_midpoint(&problem.inner.lagrangian(q.dim()), &q).map_err(to_py)?;
    Ok((r.kind().to_string(), Values::from_grid(&r, scalar)))
}

/// Discrete momentum on `T` of positions `q` on `T`.
#[pyfunction]
fn discrete_momentum(problem: &Problem, grid: &TimeGrid, q: Values) -> PyResult<Values> {
    let scalar = q.is_scalar();
    let q = q.on(grid, "T")?;
    let p = ham::discrete_momentum(&problem.inner.lagrangian(q.dim()), &q).map_err(to_py)?;
    Ok(Values::from_grid(&p, scalar))
}

/// Hamiltonian action of `(p, q)`, both on `T`.
#[pyfunction]
fn action_h(problem: &Problem, grid: &TimeGrid, q: Values, p: Values) -> PyResult<f64> {
    let q = q.on(grid, "T")?;
    let p = p.on(grid, "T")?;
    let h = build_hamiltonian(&problem.inner.lagrangian(q.dim()), &SolverConfig::default());
    ham::action_h(&h, &p, &q).map_err(to_py)
}

/// Largest residual of the discrete Hamiltonian system at `(q, p)`, boundary
/// equations included.
#[pyfunction]
fn hamiltonian_residual(problem: &Problem, grid: &TimeGrid, q: Values, p: Values) -> PyResult<f64> {
    let q = q.on(grid, "T")?;
    let p = p.on(grid, "T")?;
    let h = build_hamiltonian(&problem.inner.lagrangian(q.dim()), &SolverConfig::default());
    let r = ham::sh_residual(&h, &q, &p).map_err(to_py)?;
    let boundary = r.boundary.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(r.max_abs().max(boundary))
}

#[pymodule]
#[pyo3(name = "midpoint_vi")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TimeGrid>()?;
    m.add_class::<Problem>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(converge, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(extend, m)?)?;
    m.add_function(wrap_pyfunction!(delta_plus, m)?)?;
    m.add_function(wrap_pyfunction!(delta_minus, m)?)?;
    m.add_function(wrap_pyfunction!(avg_half_minus, m)?)?;
    m.add_function(wrap_pyfunction!(avg_circ, m)?)?;
    m.add_function(wrap_pyfunction!(integral, m)?)?;
    m.add_function(wrap_pyfunction!(antiderivative, m)?)?;
    m.add_function(wrap_pyfunction!(action, m)?)?;
    m.add_function(wrap_pyfunction!(el_residual, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_momentum, m)?)?;
    m.add_function(wrap_pyfunction!(action_h, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian_residual, m)?)?;
    Ok(())
}
