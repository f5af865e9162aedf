//! Uniform time scales on `[a, b]` and the shift maps between them.
//!
//! Every node set used by the mid-point calculus lives on the half-step
//! lattice `a + m·h/2`, `m = 0..=2N`: nodes of `T` sit at even positions,
//! half nodes `t_{i+1/2}` at odd ones. A [`NodeKind`] is a contiguous,
//! uniformly strided run of lattice positions, so shifts, restrictions and
//! the extension map all reduce to index arithmetic.

use std::fmt;

use crate::error::{Error, Result};

/// Uniform partition `t_i = a + i·h`, `h = (b - a)/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    a: f64,
    b: f64,
    n_intervals: usize,
    step: f64,
}

impl TimeGrid {
    /// Builds the grid. `N >= 1` is accepted here; operations needing an
    /// interior node check `N >= 2` themselves.
    pub fn new(a: f64, b: f64, n_intervals: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::domain(format!("invalid interval [{a}, {b}]")));
        }
        if n_intervals == 0 {
            return Err(Error::domain("a time grid needs at least one interval"));
        }
        Ok(Self {
            a,
            b,
            n_intervals,
            step: (b - a) / n_intervals as f64,
        })
    }

    /// Grid `[a, a + N·h]` keeping `h` exactly as given.
    pub fn with_step(a: f64, step: f64, n_intervals: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::domain(format!("step must be positive, got {step}")));
        }
        let grid = Self::new(a, a + step * n_intervals as f64, n_intervals)?;
        Ok(Self { step, ..grid })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `t_i = a + i·h`, never accumulated.
    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.step
    }

    /// `t_{i+1/2} = (t_i + t_{i+1}) / 2`.
    pub fn half_node(&self, i: usize) -> f64 {
        0.5 * (self.node(i) + self.node(i + 1))
    }

    /// Time of half-step lattice position `m` (even: `T`, odd: `T_half`).
    pub fn lattice_time(&self, m: usize) -> f64 {
        if m.is_multiple_of(2) {
            self.node(m / 2)
        } else {
            self.half_node(m / 2)
        }
    }

    pub fn node_set(&self, kind: NodeKind) -> NodeSet {
        NodeSet { kind, grid: *self }
    }

    /// `π(t_i) = t_{i+1/2}`: index into `T_plus` to index into `T_half`.
    pub fn project_half(&self, i: usize) -> Result<usize> {
        if i < self.n_intervals {
            Ok(i)
        } else {
            Err(Error::domain(format!(
                "projection onto T_half undefined at T index {i} (N = {})",
                self.n_intervals
            )))
        }
    }
}

/// Which time scale a grid function is sampled on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    /// All nodes `t_0..t_N`.
    T,
    /// `T \ {b}`.
    TPlus,
    /// `T \ {a}`.
    TMinus,
    /// Interior nodes `t_1..t_{N-1}`.
    TPm,
    /// Half nodes `t_{1/2}..t_{N-1/2}`.
    THalf,
    THalfPlus,
    THalfMinus,
    /// Interior half nodes `t_{3/2}..t_{N-3/2}`.
    THalfPm,
    /// `T ∪ T_half`, spacing `h/2`.
    TCirc,
    TCircPlus,
    TCircMinus,
    /// λ-nodes `(1-λ)t_i + λt_{i+1}`, `i = 0..N-1`, `λ ∈ [0, 1)`.
    Lambda(f64),
}

impl NodeKind {
    /// `(first lattice position, stride)`; `None` for λ-node sets off the lattice.
    fn lattice(&self) -> Option<(usize, usize)> {
        use NodeKind::*;
        Some(match self {
            T | TPlus => (0, 2),
            TMinus | TPm => (2, 2),
            THalf | THalfPlus => (1, 2),
            THalfMinus | THalfPm => (3, 2),
            TCirc | TCircPlus => (0, 1),
            TCircMinus => (1, 1),
            Lambda(_) => return None,
        })
    }

    fn count(&self, n: usize) -> usize {
        use NodeKind::*;
        match self {
            T => n + 1,
            TPlus | TMinus | THalf | Lambda(_) => n,
            TPm | THalfPlus | THalfMinus => n.saturating_sub(1),
            THalfPm => n.saturating_sub(2),
            TCirc => 2 * n + 1,
            TCircPlus | TCircMinus => 2 * n,
        }
    }

    /// The set obtained by dropping the last node (domain of `Δ₊`).
    pub fn plus(&self) -> Option<NodeKind> {
        use NodeKind::*;
        match self {
            T => Some(TPlus),
            THalf => Some(THalfPlus),
            TCirc => Some(TCircPlus),
            _ => None,
        }
    }

    /// The set obtained by dropping the first node (domain of `Δ₋`).
    pub fn minus(&self) -> Option<NodeKind> {
        use NodeKind::*;
        match self {
            T => Some(TMinus),
            THalf => Some(THalfMinus),
            TCirc => Some(TCircMinus),
            _ => None,
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use NodeKind::*;
        match self {
            T => write!(f, "T"),
            TPlus => write!(f, "T_plus"),
            TMinus => write!(f, "T_minus"),
            TPm => write!(f, "T_pm"),
            THalf => write!(f, "T_half"),
            THalfPlus => write!(f, "T_half_plus"),
            THalfMinus => write!(f, "T_half_minus"),
            THalfPm => write!(f, "T_half_pm"),
            TCirc => write!(f, "T_circ"),
            TCircPlus => write!(f, "T_circ_plus"),
            TCircMinus => write!(f, "T_circ_minus"),
            Lambda(l) => write!(f, "T_lambda({l})"),
        }
    }
}

/// A node set of a particular grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSet {
    kind: NodeKind,
    grid: TimeGrid,
}

impl NodeSet {
    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.kind.count(self.grid.n_intervals)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shift `h̃` of the set: `h/2` on the `T_circ` family, `h` otherwise.
    pub fn step(&self) -> f64 {
        match self.kind.lattice() {
            Some((_, 1)) => 0.5 * self.grid.step,
            _ => self.grid.step,
        }
    }

    /// Lattice position of local index `k`, when the set is on the lattice.
    pub fn position(&self, k: usize) -> Option<usize> {
        self.kind.lattice().map(|(start, stride)| start + stride * k)
    }

    /// Local index of lattice position `m`, if the set contains it.
    pub fn index_of_position(&self, m: usize) -> Option<usize> {
        let (start, stride) = self.kind.lattice()?;
        if m < start || !(m - start).is_multiple_of(stride) {
            return None;
        }
        let k = (m - start) / stride;
        (k < self.len()).then_some(k)
    }

    pub fn time(&self, k: usize) -> f64 {
        match self.kind {
            NodeKind::Lambda(l) => {
                (1.0 - l) * self.grid.node(k) + l * self.grid.node(k + 1)
            }
            _ => self
                .grid
                .lattice_time(self.position(k).expect("lattice node set")),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k < self.len() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "index {k} out of range for {} ({} nodes)",
                self.kind,
                self.len()
            )))
        }
    }

    /// `σ(t) = t + h̃`: index of the next node of the same set.
    pub fn sigma(&self, k: usize) -> Result<usize> {
        self.check_index(k)?;
        if k + 1 < self.len() {
            Ok(k + 1)
        } else {
            Err(Error::domain(format!(
                "sigma undefined at index {k} of {}: last node has no successor",
                self.kind
            )))
        }
    }

    /// `ρ(t) = t - h̃`: index of the previous node of the same set.
    pub fn rho(&self, k: usize) -> Result<usize> {
        self.check_index(k)?;
        if k > 0 {
            Ok(k - 1)
        } else {
            Err(Error::domain(format!(
                "rho undefined at index 0 of {}: first node has no predecessor",
                self.kind
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn with_step_keeps_the_step() {
        let g = TimeGrid::with_step(0.0, 0.1, 3).unwrap();
        assert_eq!(g.step(), 0.1);
        assert_eq!(g.node(3), 0.1 * 3.0);
    }
    use proptest::prelude::*;

    fn unit(n: usize) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn cardinalities() {
        let g = unit(5);
        let n = 5;
        let expect = [
            (NodeKind::T, n + 1),
            (NodeKind::TPlus, n),
            (NodeKind::TMinus, n),
            (NodeKind::TPm, n - 1),
            (NodeKind::THalf, n),
            (NodeKind::THalfPm, n - 2),
            (NodeKind::TCirc, 2 * n + 1),
        ];
        for (kind, len) in expect {
            assert_eq!(g.node_set(kind).len(), len, "{kind}");
        }
    }

    #[test]
    fn sigma_and_rho_examples() {
        let g = unit(4);
        let t = g.node_set(NodeKind::T);
        assert_eq!(t.sigma(0).unwrap(), 1);
        assert_eq!(t.time(1), 0.25);
        assert!(t.sigma(4).is_err());
        assert_eq!(t.rho(1).unwrap(), 0);
        assert!(t.rho(0).is_err());

        let circ = g.node_set(NodeKind::TCirc);
        assert_eq!(circ.time(circ.sigma(0).unwrap()), 0.125);

        let half = g.node_set(NodeKind::THalf);
        assert_eq!(half.time(half.rho(1).unwrap()), 0.125);
    }

    #[test]
    fn out_of_range_error_names_set() {
        let err = unit(4).node_set(NodeKind::THalf).sigma(9).unwrap_err();
        assert!(err.to_string().contains("T_half"), "{err}");
    }

    #[test]
    fn projection() {
        let g = unit(4);
        let half = g.node_set(NodeKind::THalf);
        assert_eq!(half.time(g.project_half(0).unwrap()), 0.125);
        assert_eq!(half.time(g.project_half(3).unwrap()), 0.875);
        assert!(g.project_half(4).is_err());
    }

    #[test]
    fn circ_is_ordered_union_with_spacing_h_over_2() {
        let g = TimeGrid::new(-0.3, 1.7, 7).unwrap();
        let circ = g.node_set(NodeKind::TCirc);
        for m in 0..circ.len() {
            let t = circ.time(m);
            if m % 2 == 0 {
                assert_eq!(t, g.node(m / 2));
            } else {
                assert_eq!(t, g.half_node(m / 2));
            }
            if m > 0 {
                let gap = t - circ.time(m - 1);
                assert!((gap - 0.5 * g.step()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(1.0, 0.0, 3).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        assert!(TimeGrid::with_step(0.0, -0.1, 3).is_err());
    }

    proptest! {
        #[test]
        fn last_node_hits_b(a in -100.0f64..100.0, len in 1e-3f64..50.0, n in 1usize..5000) {
            let g = TimeGrid::new(a, a + len, n).unwrap();
            let b = g.b();
            let ulp = f64::EPSILON * b.abs().max(a.abs()).max(f64::MIN_POSITIVE);
            prop_assert!((g.node(n) - b).abs() <= 4.0 * ulp);
        }

        #[test]
        fn sigma_rho_inverse(n in 2usize..40, k in 0usize..100, kind_ix in 0usize..7) {
            let kinds = [NodeKind::T, NodeKind::TPlus, NodeKind::TPm, NodeKind::THalf,
                         NodeKind::THalfMinus, NodeKind::TCirc, NodeKind::TCircPlus];
            let set = unit(n).node_set(kinds[kind_ix]);
            if let Ok(j) = set.sigma(k) {
                prop_assert_eq!(set.rho(j).unwrap(), k);
            }
            if let Ok(j) = set.rho(k) {
                prop_assert_eq!(set.sigma(j).unwrap(), k);
            }
        }
    }
}
