//! Mechanical Lagrangians `L(q, v) = |v|²/2 - V(q)` and their reference solutions.
//!
//! Potentials act componentwise, so every built-in works in any dimension.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hamiltonian::PhasePoint;
use crate::lagrangian::LagrangianModel;

type PotentialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type PotentialGradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type ExactFn = Arc<dyn Fn(f64, &PhasePoint) -> PhasePoint + Send + Sync>;

#[derive(Clone)]
pub struct MechanicalProblem {
    name: String,
    potential: PotentialFn,
    potential_grad: PotentialGradFn,
    exact_solution: Option<ExactFn>,
}

impl fmt::Debug for MechanicalProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MechanicalProblem")
            .field("name", &self.name)
            .field("exact_solution", &self.exact_solution.is_some())
            .finish()
    }
}

pub const BUILTIN_NAMES: [&str; 3] = ["free_particle", "harmonic", "pendulum"];

impl MechanicalProblem {
    pub fn new<V, G>(name: impl Into<String>, potential: V, potential_grad: G) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            potential: Arc::new(potential),
            potential_grad: Arc::new(potential_grad),
            exact_solution: None,
        }
    }

    pub fn with_exact_solution<E>(mut self, exact: E) -> Self
    where
        E: Fn(f64, &PhasePoint) -> PhasePoint + Send + Sync + 'static,
    {
        self.exact_solution = Some(Arc::new(exact));
        self
    }

    /// `V = 0`; `q(t) = q₀ + p₀t`.
    pub fn free_particle() -> Self {
        Self::new("free_particle", |_| 0.0, |q| vec![0.0; q.len()]).with_exact_solution(|t, s| {
            PhasePoint {
                q: s.q.iter().zip(&s.p).map(|(q, p)| q + p * t).collect(),
                p: s.p.clone(),
            }
        })
    }

    /// `V = |q|²/2`; `q(t) = q₀ cos t + p₀ sin t`.
    pub fn harmonic_oscillator() -> Self {
        Self::new(
            "harmonic",
            |q| 0.5 * q.iter().map(|x| x * x).sum::<f64>(),
            |q| q.to_vec(),
        )
        .with_exact_solution(|t, s| {
            let (c, sn) = (t.cos(), t.sin());
            PhasePoint {
                q: s.q.iter().zip(&s.p).map(|(q, p)| q * c + p * sn).collect(),
                p: s.q.iter().zip(&s.p).map(|(q, p)| -q * sn + p * c).collect(),
            }
        })
    }

    /// `V = -Σ cos q_j`. No closed-form solution.
    pub fn pendulum() -> Self {
        Self::new(
            "pendulum",
            |q| -q.iter().map(|x| x.cos()).sum::<f64>(),
            |q| q.iter().map(|x| x.sin()).collect(),
        )
    }

    /// `V ≡ c`: same dynamics as the free particle.
    pub fn constant_potential(c: f64) -> Self {
        Self::new("constant_potential", move |_| c, |q| vec![0.0; q.len()])
            .with_exact_solution(|t, s| MechanicalProblem::free_particle().exact_solution(t, s).unwrap())
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "free_particle" => Ok(Self::free_particle()),
            "harmonic" | "harmonic_oscillator" => Ok(Self::harmonic_oscillator()),
            "pendulum" => Ok(Self::pendulum()),
            _ => Err(Error::Parse(format!(
                "unknown problem '{name}' (expected one of {})",
                BUILTIN_NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn potential(&self, q: &[f64]) -> f64 {
        (self.potential)(q)
    }

    pub fn potential_grad(&self, q: &[f64]) -> Vec<f64> {
        (self.potential_grad)(q)
    }

    pub fn has_exact_solution(&self) -> bool {
        self.exact_solution.is_some()
    }

    pub fn exact_solution(&self, t: f64, initial: &PhasePoint) -> Option<PhasePoint> {
        self.exact_solution.as_ref().map(|f| f(t, initial))
    }

    /// `L(q, v) = |v|²/2 - V(q)` with analytic gradients and `g(p, q) = p`.
    pub fn lagrangian(&self, dim: usize) -> LagrangianModel {
        let v_pot = self.potential.clone();
        let v_grad = self.potential_grad.clone();
        LagrangianModel::new(dim, move |q, v| {
            0.5 * v.iter().map(|x| x * x).sum::<f64>() - v_pot(q)
        })
        .with_gradients(
            move |q, _v| v_grad(q).into_iter().map(|g| -g).collect(),
            |_q, v| v.to_vec(),
        )
        .with_legendre_inverse(|p, _q| p.to_vec())
    }

    /// Mechanical form of the mid-point scheme at `q_curr`:
    /// `(q₊ - 2q + q₋)/h² + ½[V'((q₊+q)/2) + V'((q+q₋)/2)]`.
    pub fn scheme_residual(&self, q_prev: &[f64], q_curr: &[f64], q_next: &[f64], h: f64) -> Vec<f64> {
        let mid = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect::<Vec<_>>();
        let g_hi = self.potential_grad(&mid(q_curr, q_next));
        let g_lo = self.potential_grad(&mid(q_prev, q_curr));
        (0..q_curr.len())
            .map(|c| {
                (q_next[c] - 2.0 * q_curr[c] + q_prev[c]) / (h * h) + 0.5 * (g_hi[c] + g_lo[c])
            })
            .collect()
    }
}

/// Alias matching the catalog vocabulary: the Lagrangian model of a problem.
pub fn make_mechanical(problem: &MechanicalProblem, dim: usize) -> LagrangianModel {
    problem.lagrangian(dim)
}
