//! Small dense root finder used by the implicit steps and the Legendre inverse.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Newton with a forward-difference Jacobian.
    Newton,
    /// `x ← x - r(x)`; the residual must have the form `x - Φ(x)`.
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Damping {
    None,
    /// Halve the Newton step until the residual norm decreases.
    Halving,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Bound on the infinity norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference step, scaled by `max(1, |x_j|)`.
    pub fd_epsilon: f64,
    pub method: Method,
    pub damping: Damping,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            fd_epsilon: 1e-7,
            method: Method::Newton,
            damping: Damping::Halving,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::domain(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be at least 1"));
        }
        if self.fd_epsilon.is_nan() || self.fd_epsilon <= 0.0 {
            return Err(Error::domain(format!(
                "fd_epsilon must be positive, got {}",
                self.fd_epsilon
            )));
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Newton => "newton",
            Method::FixedPoint => "fixed_point",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newton" => Ok(Method::Newton),
            "fixed_point" | "fixed-point" => Ok(Method::FixedPoint),
            _ => Err(Error::Parse(format!("unknown solver method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Finds `x` with `‖residual(x)‖∞ ≤ cfg.tol`, starting from `guess`.
///
/// Newton also stops when a full correction no longer moves any component of
/// the iterate by more than a few ulps: the residual is then at its
/// floating-point floor and `residual_norm` reports that floor.
pub fn solve_root<F>(residual: F, guess: &[f64], cfg: &SolverConfig) -> Result<Solution>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    if guess.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("initial guess has non-finite components"));
    }
    match cfg.method {
        Method::Newton => newton(&residual, guess, cfg),
        Method::FixedPoint => fixed_point(&residual, guess, cfg),
    }
}

fn fixed_point<F>(residual: &F, guess: &[f64], cfg: &SolverConfig) -> Result<Solution>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = guess.to_vec();
    let mut norm = f64::INFINITY;
    for it in 0..=cfg.max_iter {
        let r = residual(&x)?;
        norm = inf_norm(&r);
        if norm <= cfg.tol {
            return Ok(Solution {
                x,
                iterations: it,
                residual_norm: norm,
            });
        }
        if !norm.is_finite() || it == cfg.max_iter {
            break;
        }
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi -= ri;
        }
    }
    Err(Error::Convergence {
        iterations: cfg.max_iter,
        residual: norm,
        iterate: x,
    })
}

fn fd_jacobian<F>(residual: &F, x: &[f64], r0: &[f64], eps: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let m = r0.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let step = eps * x[j].abs().max(1.0);
        xp[j] = x[j] + step;
        let dx = xp[j] - x[j];
        let rp = residual(&xp)?;
        for i in 0..m {
            jac[(i, j)] = (rp[i] - r0[i]) / dx;
        }
        xp[j] = x[j];
    }
    Ok(jac)
}

fn newton<F>(residual: &F, guess: &[f64], cfg: &SolverConfig) -> Result<Solution>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut x = guess.to_vec();
    let mut r = residual(&x)?;
    if r.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: r.len(),
        });
    }
    let mut norm = inf_norm(&r);
    for it in 0..cfg.max_iter {
        if !norm.is_finite() {
            break;
        }
        let jac = fd_jacobian(residual, &x, &r, cfg.fd_epsilon)?;
        let lu = jac.lu();
        let delta = lu
            .solve(&DVector::from_column_slice(&r))
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or(Error::Singular { iteration: it })?;

        if norm <= cfg.tol {
            // One extra correction with the current Jacobian, kept only if
            // it lowers the residual further. Not counted as an iteration.
            let cand: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a - d).collect();
            if let Ok(rc) = residual(&cand) {
                let nc = inf_norm(&rc);
                if nc < norm {
                    return Ok(Solution { x: cand, iterations: it, residual_norm: nc });
                }
            }
            return Ok(Solution { x, iterations: it, residual_norm: norm });
        }

        let scale = inf_norm(&x).max(1.0);
        if inf_norm(delta.as_slice()) <= 4.0 * f64::EPSILON * scale {
            return Ok(Solution { x, iterations: it, residual_norm: norm });
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cand: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a - t * d).collect();
            let rc = residual(&cand);
            let nc = rc.as_ref().map(|v| inf_norm(v)).unwrap_or(f64::NAN);
            let improves = nc.is_finite() && nc < norm;
            if cfg.damping == Damping::None || improves {
                accepted = Some((cand, rc?, nc));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, rc, nc)) => {
                x = cand;
                r = rc;
                norm = nc;
            }
            None => break,
        }
    }
    if norm <= cfg.tol {
        return Ok(Solution { x, iterations: cfg.max_iter, residual_norm: norm });
    }
    Err(Error::Convergence {
        iterations: cfg.max_iter,
        residual: norm,
        iterate: x,
    })
}
