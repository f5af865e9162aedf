//! Discrete derivatives, the mid-point extension, averaging operators and
//! λ-integrals over the node sets of a [`TimeGrid`].
//!
//! The commuting diagrams relating these operators to piecewise-linear
//! interpolation hold by construction: `extend` is the half-node trace of the
//! linear interpolant, `delta_plus` is the restriction of its right
//! derivative, and `integral_lambda` integrates the piecewise-constant
//! function taking the λ-node value on each `[t_i, t_{i+1})`.

use crate::error::{check_dim, Error, Result};
use crate::time_grid::{NodeKind, NodeSet, TimeGrid};

/// A `d`-vector valued function sampled on one node set.
///
/// Values are stored row-major: node `k` occupies `values[k*d..(k+1)*d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    set: NodeSet,
    dim: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(set: NodeSet, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("grid functions need dimension d >= 1"));
        }
        check_dim(set.len() * dim, values.len())?;
        Ok(Self { set, dim, values })
    }

    pub fn from_rows(set: NodeSet, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(1);
        check_dim(set.len(), rows.len())?;
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            check_dim(dim, row.len())?;
            values.extend_from_slice(row);
        }
        Self::new(set, dim, values)
    }

    /// Scalar function from one value per node.
    pub fn scalar(set: NodeSet, values: Vec<f64>) -> Result<Self> {
        Self::new(set, 1, values)
    }

    /// Samples `f(t)` at every node of `set`.
    pub fn sample(set: NodeSet, dim: usize, mut f: impl FnMut(f64) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(set.len() * dim);
        for k in 0..set.len() {
            let v = f(set.time(k));
            check_dim(dim, v.len())?;
            values.extend(v);
        }
        Self::new(set, dim, values)
    }

    pub fn zeros(set: NodeSet, dim: usize) -> Self {
        Self {
            set,
            dim,
            values: vec![0.0; set.len() * dim],
        }
    }

    pub fn set(&self) -> &NodeSet {
        &self.set
    }

    pub fn kind(&self) -> NodeKind {
        self.set.kind()
    }

    pub fn grid(&self) -> &TimeGrid {
        self.set.grid()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn at_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn expect_kind(&self, allowed: &[NodeKind], op: &str) -> Result<()> {
        if allowed.contains(&self.kind()) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{op} is not defined on functions over {}",
                self.kind()
            )))
        }
    }

    fn same_support(&self, other: &GridFunction) -> Result<()> {
        if self.set != other.set {
            return Err(Error::domain(format!(
                "grid functions live on different node sets ({} vs {})",
                self.kind(),
                other.kind()
            )));
        }
        Ok(())
    }

    /// Pointwise Euclidean product, a scalar grid function.
    pub fn dot(&self, other: &GridFunction) -> Result<GridFunction> {
        self.same_support(other)?;
        check_dim(self.dim, other.dim)?;
        let values = self
            .rows()
            .zip(other.rows())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum())
            .collect();
        GridFunction::scalar(self.set, values)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.same_support(other)?;
        check_dim(self.dim, other.dim)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        GridFunction::new(self.set, self.dim, values)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        GridFunction {
            set: self.set,
            dim: self.dim,
            values: self.values.iter().map(|x| c * x).collect(),
        }
    }

    /// Restriction to a node set contained in this one (e.g. `T_circ → T_half`).
    pub fn restrict(&self, kind: NodeKind) -> Result<GridFunction> {
        let target = self.grid().node_set(kind);
        let mut values = Vec::with_capacity(target.len() * self.dim);
        for k in 0..target.len() {
            let src = target
                .position(k)
                .and_then(|m| self.set.index_of_position(m))
                .ok_or_else(|| {
                    Error::domain(format!("{kind} is not contained in {}", self.kind()))
                })?;
            values.extend_from_slice(self.at(src));
        }
        GridFunction::new(target, self.dim, values)
    }

    /// `f ∘ σ∘` as a function on `target`: the value at a node is `f` at the
    /// node `h/2` later.
    pub fn compose_sigma_circ(&self, target: NodeKind) -> Result<GridFunction> {
        let target_set = self.grid().node_set(target);
        let mut values = Vec::with_capacity(target_set.len() * self.dim);
        for k in 0..target_set.len() {
            let src = target_set
                .position(k)
                .and_then(|m| self.set.index_of_position(m + 1))
                .ok_or_else(|| {
                    Error::domain(format!(
                        "sigma_circ maps {target} outside {}",
                        self.kind()
                    ))
                })?;
            values.extend_from_slice(self.at(src));
        }
        GridFunction::new(target_set, self.dim, values)
    }

    /// Extends a function on a subset of `T` by zero to all of `T`.
    pub fn zero_extend(&self) -> Result<GridFunction> {
        self.expect_kind(
            &[NodeKind::T, NodeKind::TPlus, NodeKind::TMinus, NodeKind::TPm],
            "zero extension to T",
        )?;
        let t = self.grid().node_set(NodeKind::T);
        let mut out = GridFunction::zeros(t, self.dim);
        for k in 0..self.len() {
            let m = self.set.position(k).expect("T subsets are on the lattice");
            out.at_mut(m / 2).copy_from_slice(self.at(k));
        }
        Ok(out)
    }
}

/// Mid-point extension `f∘` on `T_circ`: nodal values on `T`, averages of
/// neighbours on `T_half`.
pub fn extend(f: &GridFunction) -> Result<GridFunction> {
    f.expect_kind(&[NodeKind::T], "extend")?;
    let circ = f.grid().node_set(NodeKind::TCirc);
    let mut out = GridFunction::zeros(circ, f.dim());
    for m in 0..circ.len() {
        let i = m / 2;
        if m % 2 == 0 {
            out.at_mut(m).copy_from_slice(f.at(i));
        } else {
            let (lo, hi) = (f.at(i), f.at(i + 1));
            for ((o, x), y) in out.at_mut(m).iter_mut().zip(lo).zip(hi) {
                *o = 0.5 * (x + y);
            }
        }
    }
    Ok(out)
}

fn difference(f: &GridFunction, forward: bool) -> Result<GridFunction> {
    let base = [NodeKind::T, NodeKind::THalf, NodeKind::TCirc];
    let op = if forward { "delta_plus" } else { "delta_minus" };
    f.expect_kind(&base, op)?;
    if f.len() < 2 {
        return Err(Error::domain(format!(
            "{op} needs at least two nodes in {}",
            f.kind()
        )));
    }
    let kind = if forward {
        f.kind().plus()
    } else {
        f.kind().minus()
    }
    .expect("base kinds have plus/minus subsets");
    let set = f.grid().node_set(kind);
    let step = f.set().step();
    let mut values = Vec::with_capacity((f.len() - 1) * f.dim());
    for k in 0..f.len() - 1 {
        values.extend(f.at(k + 1).iter().zip(f.at(k)).map(|(b, a)| (b - a) / step));
    }
    GridFunction::new(set, f.dim(), values)
}

/// Forward difference `Δ₊f(t) = (f(σ(t)) - f(t)) / (σ(t) - t)` on `S⁺`.
pub fn delta_plus(f: &GridFunction) -> Result<GridFunction> {
    difference(f, true)
}

/// Backward difference `Δ₋f(t) = (f(t) - f(ρ(t))) / (t - ρ(t))` on `S⁻`.
pub fn delta_minus(f: &GridFunction) -> Result<GridFunction> {
    difference(f, false)
}

/// `[f]_{1/2,-}(t) = (f(t) + f(ρ_{1/2}(t))) / 2` on `T_half⁻`.
pub fn avg_half_minus(f: &GridFunction) -> Result<GridFunction> {
    f.expect_kind(&[NodeKind::THalf], "avg_half_minus")?;
    if f.grid().n_intervals() < 2 {
        return Err(Error::domain("avg_half_minus needs N >= 2"));
    }
    let set = f.grid().node_set(NodeKind::THalfMinus);
    let mut values = Vec::with_capacity(set.len() * f.dim());
    for k in 1..f.len() {
        values.extend(f.at(k).iter().zip(f.at(k - 1)).map(|(a, b)| 0.5 * (a + b)));
    }
    GridFunction::new(set, f.dim(), values)
}

/// `[f]∘(t_i) = (f(t_{i+1/2}) + f(t_{i-1/2})) / 2` at interior nodes of `T`.
///
/// Accepts `f` on `T_circ` or directly on `T_half` (only half-node values
/// enter).
pub fn avg_circ(f: &GridFunction) -> Result<GridFunction> {
    f.expect_kind(&[NodeKind::TCirc, NodeKind::THalf], "avg_circ")?;
    if f.grid().n_intervals() < 2 {
        return Err(Error::domain("avg_circ needs N >= 2"));
    }
    let half = match f.kind() {
        NodeKind::THalf => f.clone(),
        _ => f.restrict(NodeKind::THalf)?,
    };
    let set = f.grid().node_set(NodeKind::TPm);
    let mut values = Vec::with_capacity(set.len() * f.dim());
    for i in 1..f.grid().n_intervals() {
        values.extend(half.at(i).iter().zip(half.at(i - 1)).map(|(a, b)| 0.5 * (a + b)));
    }
    GridFunction::new(set, f.dim(), values)
}

/// Row `k` of `f` read as a sample at the λ-node `t_{k,λ}`.
fn lambda_offset(f: &GridFunction, lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    let ok = match f.kind() {
        NodeKind::Lambda(l) => l == lambda,
        NodeKind::T | NodeKind::TPlus => lambda == 0.0,
        NodeKind::THalf => lambda == 0.5,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "a function on {} is not sampled at the {lambda}-nodes",
            f.kind()
        )))
    }
}

/// `∫_{t_i}^{t_j} f(t) Δ_λ t = Σ_{k=i}^{j-1} f(t_{k,λ})·h`, zero for `i = j`
/// and antisymmetric in the bounds. Bounds are nodes of `T`.
pub fn integral_lambda(f: &GridFunction, lambda: f64, i: usize, j: usize) -> Result<Vec<f64>> {
    lambda_offset(f, lambda)?;
    let n = f.grid().n_intervals();
    if i > n || j > n {
        return Err(Error::domain(format!(
            "integration bounds ({i}, {j}) outside T indices 0..={n}"
        )));
    }
    let (lo, hi, sign) = if i <= j { (i, j, 1.0) } else { (j, i, -1.0) };
    let h = f.grid().step();
    let mut acc = vec![0.0; f.dim()];
    for k in lo..hi {
        for (a, x) in acc.iter_mut().zip(f.at(k)) {
            *a += x;
        }
    }
    Ok(acc.into_iter().map(|s| sign * s * h).collect())
}

/// Mid-point quadrature: the λ = 1/2 integral of a function on `T_half`.
pub fn integral_midpoint(f: &GridFunction, i: usize, j: usize) -> Result<Vec<f64>> {
    integral_lambda(f, 0.5, i, j)
}

/// Running integral `F(t_j) = ∫_a^{t_j} f Δ_λ t`, a function on `T`.
pub fn antiderivative(f: &GridFunction, lambda: f64) -> Result<GridFunction> {
    lambda_offset(f, lambda)?;
    let grid = *f.grid();
    let h = grid.step();
    let t = grid.node_set(NodeKind::T);
    let mut out = GridFunction::zeros(t, f.dim());
    let mut acc = vec![0.0; f.dim()];
    for k in 0..grid.n_intervals() {
        for (a, x) in acc.iter_mut().zip(f.at(k)) {
            *a += x;
        }
        for (o, a) in out.at_mut(k + 1).iter_mut().zip(&acc) {
            *o = a * h;
        }
    }
    Ok(out)
}

/// Integral of a scalar function over the whole of `[a, b]`.
pub(crate) fn total_scalar(f: &GridFunction, lambda: f64) -> Result<f64> {
    check_dim(1, f.dim())?;
    Ok(integral_lambda(f, lambda, 0, f.grid().n_intervals())?[0])
}

/// Boundary defect of the average swap `∫ f·v∘ Δ_{1/2}t = ∫ [f]∘·v Δt`
/// (right integral at λ = 0 over the interior) for `v` not vanishing at the
/// ends: `(h/2)·(f(t_{1/2})·v(a) + f(t_{N-1/2})·v(b))`.
pub fn average_swap_boundary(f: &GridFunction, v: &GridFunction) -> Result<f64> {
    f.expect_kind(&[NodeKind::THalf], "average_swap_boundary")?;
    v.expect_kind(&[NodeKind::T], "average_swap_boundary")?;
    if f.grid() != v.grid() {
        return Err(Error::domain("f and v must share a grid"));
    }
    check_dim(f.dim(), v.dim())?;
    let n = f.grid().n_intervals();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    Ok(0.5 * f.grid().step() * (dot(f.at(0), v.at(0)) + dot(f.at(n - 1), v.at(n))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(a: f64, b: f64, n: usize) -> TimeGrid {
        TimeGrid::new(a, b, n).unwrap()
    }

    fn on(g: &TimeGrid, kind: NodeKind, values: Vec<f64>) -> GridFunction {
        GridFunction::scalar(g.node_set(kind), values).unwrap()
    }

    #[test]
    fn extend_examples() {
        let g = grid(0.0, 1.0, 1);
        assert_eq!(extend(&on(&g, NodeKind::T, vec![1.0, 3.0])).unwrap().values(), &[1.0, 2.0, 3.0]);

        let g = grid(0.0, 1.0, 2);
        let id = GridFunction::sample(g.node_set(NodeKind::T), 1, |t| vec![t]).unwrap();
        assert_eq!(extend(&id).unwrap().values(), &[0.0, 0.25, 0.5, 0.75, 1.0]);

        let c = on(&g, NodeKind::T, vec![7.5; 3]);
        assert!(extend(&c).unwrap().values().iter().all(|&x| x == 7.5));
    }

    #[test]
    fn extend_rejects_non_t() {
        let g = grid(0.0, 1.0, 2);
        assert!(extend(&on(&g, NodeKind::THalf, vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn delta_examples() {
        let g = grid(0.0, 1.0, 1);
        let f = on(&g, NodeKind::T, vec![1.0, 3.0]);
        let d = delta_plus(&f).unwrap();
        assert_eq!(d.kind(), NodeKind::TPlus);
        assert_eq!(d.values(), &[2.0]);

        let dc = delta_plus(&extend(&f).unwrap()).unwrap();
        // half node 0.5 is T_circ_plus index 1
        assert_eq!(dc.set().time(1), 0.5);
        assert_eq!(dc.at(1), &[2.0]);

        let g = grid(0.0, 1.0, 2);
        let f = on(&g, NodeKind::THalf, vec![2.0, 5.0]);
        let d = delta_minus(&f).unwrap();
        assert_eq!(d.kind(), NodeKind::THalfMinus);
        assert_eq!(d.values(), &[6.0]);

        let g = grid(0.0, 3.0, 6);
        let id = GridFunction::sample(g.node_set(NodeKind::T), 1, |t| vec![t]).unwrap();
        for d in [delta_plus(&id).unwrap(), delta_minus(&id).unwrap()] {
            assert!(d.values().iter().all(|x| (x - 1.0).abs() < 1e-14));
        }
        let c = on(&g, NodeKind::T, vec![-2.0; 7]);
        assert!(delta_minus(&c).unwrap().values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn delta_needs_two_nodes() {
        let g = grid(0.0, 1.0, 1);
        let f = on(&g, NodeKind::THalf, vec![1.0]);
        assert!(matches!(delta_plus(&f), Err(Error::Domain(_))));
        assert!(delta_plus(&on(&g, NodeKind::TPm, vec![])).is_err());
    }

    #[test]
    fn averaging_examples() {
        let g = grid(0.0, 1.0, 2);
        assert_eq!(avg_half_minus(&on(&g, NodeKind::THalf, vec![2.0, 6.0])).unwrap().values(), &[4.0]);
        let g3 = grid(0.0, 1.0, 3);
        assert_eq!(
            avg_half_minus(&on(&g3, NodeKind::THalf, vec![1.0, 2.0, 4.0])).unwrap().values(),
            &[1.5, 3.0]
        );
        let c = avg_half_minus(&on(&g3, NodeKind::THalf, vec![0.3; 3])).unwrap();
        assert_eq!(c.values(), &[0.3, 0.3]);

        let fc = extend(&on(&g, NodeKind::T, vec![1.0, 2.0, 5.0])).unwrap();
        assert_eq!(fc.restrict(NodeKind::THalf).unwrap().values(), &[1.5, 3.5]);
        let avg = avg_circ(&fc).unwrap();
        assert_eq!(avg.kind(), NodeKind::TPm);
        assert_eq!(avg.values(), &[2.5]);

        let g1 = grid(0.0, 1.0, 1);
        assert!(avg_half_minus(&on(&g1, NodeKind::THalf, vec![1.0])).is_err());
        assert!(avg_circ(&on(&g1, NodeKind::THalf, vec![1.0])).is_err());
    }

    #[test]
    fn avg_circ_reproduces_linear_functions() {
        let g = grid(-1.0, 2.0, 9);
        let f = GridFunction::sample(g.node_set(NodeKind::TCirc), 1, |t| vec![3.0 * t - 1.0]).unwrap();
        let avg = avg_circ(&f).unwrap();
        for k in 0..avg.len() {
            let t = avg.set().time(k);
            assert!((avg.at(k)[0] - (3.0 * t - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn integral_examples() {
        let g = grid(2.0, 5.0, 6);
        let c = on(&g, NodeKind::TPlus, vec![1.5; 6]);
        assert!((integral_lambda(&c, 0.0, 0, 6).unwrap()[0] - 4.5).abs() < 1e-14);
        assert_eq!(integral_lambda(&c, 0.0, 3, 3).unwrap(), vec![0.0]);
        let fwd = integral_lambda(&c, 0.0, 1, 4).unwrap()[0];
        let bwd = integral_lambda(&c, 0.0, 4, 1).unwrap()[0];
        assert_eq!(fwd, -bwd);
        assert!(integral_lambda(&c, 0.0, 0, 7).is_err());

        // right-rectangle rule on T values
        let t = GridFunction::sample(g.node_set(NodeKind::T), 1, |t| vec![t * t]).unwrap();
        let expect: f64 = (0..6).map(|k| g.node(k).powi(2) * g.step()).sum();
        assert!((integral_lambda(&t, 0.0, 0, 6).unwrap()[0] - expect).abs() < 1e-13);

        let g = grid(0.0, 1.0, 2);
        let half = on(&g, NodeKind::THalf, vec![0.25, 0.75]);
        assert_eq!(integral_midpoint(&half, 0, 2).unwrap(), vec![0.5]);
        let ones = on(&g, NodeKind::THalf, vec![1.0, 1.0]);
        assert_eq!(integral_midpoint(&ones, 0, 2).unwrap(), vec![1.0]);

        let g = grid(0.0, 1.0, 4);
        let sq = GridFunction::sample(g.node_set(NodeKind::T), 1, |t| vec![t * t]).unwrap();
        let half = extend(&sq).unwrap().restrict(NodeKind::THalf).unwrap();
        assert!((integral_midpoint(&half, 0, 4).unwrap()[0] - 0.34375).abs() < 1e-15);
    }

    #[test]
    fn integral_checks_sampling_nodes() {
        let g = grid(0.0, 1.0, 4);
        let half = on(&g, NodeKind::THalf, vec![1.0; 4]);
        assert!(integral_lambda(&half, 0.0, 0, 4).is_err());
        assert!(integral_lambda(&half, 1.0, 0, 4).is_err());
        let lam = GridFunction::scalar(g.node_set(NodeKind::Lambda(0.25)), vec![1.0; 4]).unwrap();
        assert!((integral_lambda(&lam, 0.25, 0, 4).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((lam.set().time(1) - 0.3125).abs() < 1e-15);
    }

    #[test]
    fn restrict_and_compose() {
        let g = grid(0.0, 1.0, 4);
        let f = GridFunction::sample(g.node_set(NodeKind::TCirc), 1, |t| vec![t]).unwrap();
        let t = f.restrict(NodeKind::T).unwrap();
        assert_eq!(t.values(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(t.restrict(NodeKind::THalf).is_err());

        let h = f.restrict(NodeKind::THalfMinus).unwrap();
        let pulled = h.compose_sigma_circ(NodeKind::TPm).unwrap();
        assert_eq!(pulled.values(), &[0.375, 0.625, 0.875]);
    }

    proptest! {
        #[test]
        fn extension_is_linear(
            xs in proptest::collection::vec(-10.0f64..10.0, 6),
            ys in proptest::collection::vec(-10.0f64..10.0, 6),
            c in -3.0f64..3.0,
        ) {
            let g = grid(0.0, 1.0, 5);
            let f = on(&g, NodeKind::T, xs.clone());
            let v = on(&g, NodeKind::T, ys.clone());
            let comb = on(&g, NodeKind::T, xs.iter().zip(&ys).map(|(x, y)| x + c * y).collect());
            let lhs = extend(&comb).unwrap();
            let ef = extend(&f).unwrap();
            let ev = extend(&v).unwrap();
            for k in 0..lhs.len() {
                let rhs = ef.at(k)[0] + c * ev.at(k)[0];
                prop_assert!((lhs.at(k)[0] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            }
        }
    }
}
