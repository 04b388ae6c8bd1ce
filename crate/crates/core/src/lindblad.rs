//! Liouvillian superoperators and steady-state solvers.
//!
//! Vectorization is column stacking: `vec(|i⟩⟨j|)` has index `j·D + i`, so
//! `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{dense_frobenius, DenseMatrix, SparseOperator, C64};

/// Largest Hilbert-space dimension accepted by [`steady_states_dense`].
pub const DENSE_LIMIT: usize = 100;
/// Relative singular-value cutoff defining the null space.
pub const NULL_THRESHOLD: f64 = 1e-10;
/// Minimum acceptable ratio between the smallest kept and the largest
/// discarded singular value.
pub const GAP_RATIO_WARN: f64 = 1e3;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug)]
pub struct Liouvillian {
    dim: usize,
    hamiltonian: SparseOperator,
    jumps: Vec<SparseOperator>,
    heff: SparseOperator,
    heff_adj: SparseOperator,
    jumps_adj: Vec<SparseOperator>,
    superop: SparseOperator,
}

impl Liouvillian {
    pub fn new(h: &SparseOperator, jumps: &[SparseOperator]) -> Result<Self> {
        let d = h.dim();
        for l in jumps {
            if l.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: l.dim(),
                });
            }
        }
        let mut decay = SparseOperator::zero(d);
        for l in jumps {
            decay = decay.add(&l.adjoint().multiply(l)?)?;
        }
        let heff = h.sub(&decay.scale(C64::new(0.5, 0.0) * I))?;
        let heff_adj = heff.adjoint();

        let mut triplets = Vec::new();
        for (r, c, v) in heff.entries() {
            for j in 0..d {
                triplets.push((j * d + r, j * d + c, -I * v));
                triplets.push((r * d + j, c * d + j, I * v.conj()));
            }
        }
        for l in jumps {
            let entries: Vec<_> = l.entries().collect();
            for &(i, k, a) in &entries {
                for &(j, m, b) in &entries {
                    triplets.push((j * d + i, m * d + k, a * b.conj()));
                }
            }
        }
        let superop = SparseOperator::from_triplets(d * d, triplets)?;
        Ok(Liouvillian {
            dim: d,
            hamiltonian: h.clone(),
            jumps_adj: jumps.iter().map(SparseOperator::adjoint).collect(),
            jumps: jumps.to_vec(),
            heff,
            heff_adj,
            superop,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[SparseOperator] {
        &self.jumps
    }

    /// `H − (i/2) Σ L†L`.
    pub fn effective_hamiltonian(&self) -> &SparseOperator {
        &self.heff
    }

    /// The `D² × D²` matrix acting on `vec(ρ)`.
    pub fn superoperator(&self) -> &SparseOperator {
        &self.superop
    }

    /// Matrix-free `L(ρ) = −i H_eff ρ + i ρ H_eff† + Σ L ρ L†`.
    pub fn apply(&self, rho: &DenseMatrix) -> Result<DenseMatrix> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.nrows(),
            });
        }
        let mut out = self.heff.mul_dense(rho)? * (-I) + self.heff_adj.dense_mul(rho)? * I;
        for (l, ladj) in self.jumps.iter().zip(&self.jumps_adj) {
            out += ladj.dense_mul(&l.mul_dense(rho)?)?;
        }
        Ok(out)
    }

    /// Residual `‖L(ρ)‖_F`.
    pub fn residual(&self, rho: &DensityMatrix) -> Result<f64> {
        Ok(dense_frobenius(&self.apply(rho.matrix())?))
    }
}

/// Convenience wrapper for [`Liouvillian::new`].
pub fn build_liouvillian(h: &SparseOperator, jumps: &[SparseOperator]) -> Result<Liouvillian> {
    Liouvillian::new(h, jumps)
}

/// Convenience wrapper for [`Liouvillian::apply`].
pub fn apply_liouvillian(liou: &Liouvillian, rho: &DensityMatrix) -> Result<DenseMatrix> {
    liou.apply(rho.matrix())
}

pub fn vectorize(m: &DenseMatrix) -> Vec<C64> {
    // nalgebra storage is column-major, which is exactly column stacking.
    m.as_slice().to_vec()
}

pub fn unvectorize(v: &[C64], dim: usize) -> Result<DenseMatrix> {
    if v.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: v.len(),
        });
    }
    Ok(DenseMatrix::from_column_slice(dim, dim, v))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: DenseMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            matrix: DenseMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0),
        }
    }

    /// Diagonal state with the given weights, normalized to unit trace.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::ZeroMatrix);
        }
        let d = weights.len();
        let mut m = DenseMatrix::zeros(d, d);
        for (i, w) in weights.iter().enumerate() {
            m[(i, i)] = C64::new(w / total, 0.0);
        }
        Ok(DensityMatrix { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        dense_frobenius(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn hermitized(&self) -> Self {
        DensityMatrix {
            matrix: (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    /// Divides by the trace.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t.norm() == 0.0 {
            return Err(Error::ZeroMatrix);
        }
        Ok(DensityMatrix {
            matrix: &self.matrix / t,
        })
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .hermitized()
            .matrix
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Frobenius norm of the off-diagonal part.
    pub fn offdiag_mass(&self) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for c in 0..d {
            for r in 0..d {
                if r != c {
                    s += self.matrix[(r, c)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    /// `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = DensityMatrix {
            matrix: &self.matrix - &other.matrix,
        };
        Ok(0.5 * diff.eigenvalues().iter().map(|e| e.abs()).sum::<f64>())
    }

    /// `‖[H, ρ]‖_F`.
    pub fn commutator_norm(&self, h: &SparseOperator) -> Result<f64> {
        let hr = h.mul_dense(&self.matrix)?;
        let rh = h.dense_mul(&self.matrix)?;
        Ok(dense_frobenius(&(hr - rh)))
    }
}

/// One element of a steady-state basis.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// False for a traceless direction that could not be normalized.
    pub unit_trace: bool,
}

#[derive(Clone, Debug)]
pub struct SteadyStates {
    pub states: Vec<SteadyState>,
    pub null_dim: usize,
    pub sigma_max: f64,
    /// Smallest kept over largest discarded singular value.
    pub gap_ratio: f64,
    pub warning: Option<String>,
}

impl SteadyStates {
    /// The unique steady state, or [`Error::AnsatzViolation`] describing the
    /// multiplicity.
    pub fn unique(&self) -> Result<&DensityMatrix> {
        match self.states.as_slice() {
            [only] if only.unit_trace => Ok(&only.rho),
            _ => Err(Error::AnsatzViolation(format!(
                "steady state is not unique (null space dimension {})",
                self.null_dim
            ))),
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of the sparsity graph, each sorted ascending.
pub fn components(m: &SparseOperator) -> Vec<Vec<usize>> {
    let n = m.dim();
    let mut uf = UnionFind((0..n).collect());
    for (r, c, _) in m.entries() {
        uf.union(r, c);
    }
    let mut slot = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = uf.find(i);
        if slot[root] == usize::MAX {
            slot[root] = comps.len();
            comps.push(Vec::new());
        }
        comps[slot[root]].push(i);
    }
    comps
}

fn frob_inner(a: &DenseMatrix, b: &DenseMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Null space of the superoperator by full SVD with multiplicity detection.
///
/// The superoperator is block diagonal over the connected components of its
/// sparsity pattern, so the SVD is taken block by block; the singular values
/// are the union over blocks and the cutoff is relative to the global largest.
pub fn steady_states_dense(liou: &Liouvillian) -> Result<SteadyStates> {
    let d = liou.dim();
    if d > DENSE_LIMIT {
        return Err(Error::TooLargeForDense {
            dim: d,
            limit: DENSE_LIMIT,
        });
    }
    let sup = liou.superoperator();
    let comps = components(sup);
    let mut position = vec![0usize; d * d];
    for comp in &comps {
        for (p, &i) in comp.iter().enumerate() {
            position[i] = p;
        }
    }
    let mut blocks: Vec<faer::Mat<C64>> = comps
        .iter()
        .map(|c| faer::Mat::zeros(c.len(), c.len()))
        .collect();
    let mut comp_of = vec![0usize; d * d];
    for (ci, comp) in comps.iter().enumerate() {
        for &i in comp {
            comp_of[i] = ci;
        }
    }
    for (r, c, v) in sup.entries() {
        blocks[comp_of[r]][(position[r], position[c])] = v;
    }

    // A = U Σ V†: null vectors are the columns of V.
    let svds: Vec<(Vec<f64>, faer::Mat<C64>)> = blocks
        .into_iter()
        .map(|b| {
            let svd = b
                .svd()
                .map_err(|e| Error::InvalidInput(format!("SVD failed: {e:?}")))?;
            let sv = svd.S().column_vector().iter().map(|s| s.re).collect();
            Ok((sv, svd.V().to_owned()))
        })
        .collect::<Result<_>>()?;
    let sigma_max = svds
        .iter()
        .flat_map(|(s, _)| s.iter().copied())
        .fold(0.0, f64::max);
    let cutoff = NULL_THRESHOLD * sigma_max.max(f64::MIN_POSITIVE);

    let mut smallest_kept = f64::INFINITY;
    let mut largest_dropped: f64 = 0.0;
    let mut raw: Vec<DenseMatrix> = Vec::new();
    // Isolated zero entries of vec(ρ) (components with no superoperator
    // entries) are null directions too.
    for (ci, comp) in comps.iter().enumerate() {
        let (sv, v) = &svds[ci];
        for (k, &s) in sv.iter().enumerate() {
            if s < cutoff {
                largest_dropped = largest_dropped.max(s);
                let mut m = DenseMatrix::zeros(d, d);
                for (p, &idx) in comp.iter().enumerate() {
                    m[(idx % d, idx / d)] = v[(p, k)];
                }
                raw.push(m);
            } else {
                smallest_kept = smallest_kept.min(s);
            }
        }
    }
    let null_dim = raw.len();
    let gap_ratio = if largest_dropped > 0.0 {
        smallest_kept / largest_dropped
    } else {
        f64::INFINITY
    };
    let warning = (gap_ratio < GAP_RATIO_WARN).then(|| {
        format!("degenerate spectral gap: kept/discarded singular value ratio {gap_ratio:.3e}")
    });

    // Hermitian spanning set, then Gram–Schmidt.
    let mut basis: Vec<DenseMatrix> = Vec::new();
    'outer: for v in &raw {
        let parts = [
            (v + v.adjoint()) * C64::new(0.5, 0.0),
            (v - v.adjoint()) * C64::new(0.0, -0.5),
        ];
        for mut h in parts {
            for b in &basis {
                let proj = frob_inner(b, &h);
                h -= b * proj;
            }
            let n = dense_frobenius(&h);
            if n > 1e-8 {
                basis.push(h / C64::new(n, 0.0));
                if basis.len() == null_dim {
                    break 'outer;
                }
            }
        }
    }
    let states = basis
        .into_iter()
        .map(|b| {
            let t = b.trace();
            if t.norm() > 1e-8 {
                let m = (&b / t + (&b / t).adjoint()) * C64::new(0.5, 0.0);
                SteadyState {
                    rho: DensityMatrix { matrix: m },
                    unit_trace: true,
                }
            } else {
                SteadyState {
                    rho: DensityMatrix { matrix: b },
                    unit_trace: false,
                }
            }
        })
        .collect();
    Ok(SteadyStates {
        states,
        null_dim,
        sigma_max,
        gap_ratio,
        warning,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    pub tol: f64,
    pub max_steps: u64,
    /// Overrides the default step `0.1 / ‖L̂‖_∞`.
    pub dt: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            tol: 1e-12,
            max_steps: 10_000_000,
            dt: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvolveResult {
    pub rho: DensityMatrix,
    pub steps: u64,
    pub residual: f64,
    pub dt: f64,
}

/// Compressed restriction of the superoperator to a set of indices that is
/// closed under its action.
struct Restricted {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Restricted {
    fn apply(&self, x: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    fn norm_inf(&self) -> f64 {
        (0..self.row_ptr.len() - 1)
            .map(|r| {
                self.vals[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .map(|v| v.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Integrates `dρ/dt = L(ρ)` with classical RK4 from `rho0` (default `I/D`)
/// until `‖L(ρ)‖_F < tol`.
///
/// Only the components of the superoperator's sparsity graph that intersect
/// the support of `vec(ρ0)` are propagated; the rest stay zero exactly.
pub fn steady_state_evolve(
    liou: &Liouvillian,
    rho0: Option<&DensityMatrix>,
    opts: &EvolveOptions,
) -> Result<EvolveResult> {
    let d = liou.dim();
    let start = match rho0 {
        Some(r) => {
            if r.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: r.dim(),
                });
            }
            r.clone()
        }
        None => DensityMatrix::maximally_mixed(d),
    };
    let v0 = vectorize(start.matrix());
    let sup = liou.superoperator();
    let comps = components(sup);
    let mut active: Vec<usize> = comps
        .into_iter()
        .filter(|c| c.iter().any(|&i| v0[i].norm() > 0.0))
        .flatten()
        .collect();
    active.sort_unstable();
    let mut local = vec![usize::MAX; d * d];
    for (p, &i) in active.iter().enumerate() {
        local[i] = p;
    }
    let mut row_ptr = vec![0];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for &i in &active {
        for (c, v) in sup.row(i) {
            cols.push(local[c]);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    let op = Restricted {
        row_ptr,
        cols,
        vals,
    };
    let lnorm = op.norm_inf();
    let dt = opts.dt.unwrap_or(if lnorm > 0.0 { 0.1 / lnorm } else { 1.0 });

    let n = active.len();
    let mut x: Vec<C64> = active.iter().map(|&i| v0[i]).collect();
    let mut k1 = vec![C64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);

    let mut residual;
    let mut best = f64::INFINITY;
    let mut steps = 0u64;
    let mut growth_checks = 0u32;
    loop {
        op.apply(&x, &mut k1);
        residual = norm2(&k1);
        if !residual.is_finite() {
            return Err(Error::Unstable {
                step: steps,
                residual,
            });
        }
        if residual < opts.tol {
            break;
        }
        // Sustained growth over many checks indicates an unstable step.
        if steps % 1000 == 0 {
            if residual > 10.0 * best && best > 0.0 {
                growth_checks += 1;
                if growth_checks > 3 {
                    return Err(Error::Unstable {
                        step: steps,
                        residual,
                    });
                }
            }
            best = best.min(residual);
        }
        if steps >= opts.max_steps {
            return Err(Error::NotConverged { steps, residual });
        }
        for i in 0..n {
            tmp[i] = x[i] + half * k1[i];
        }
        op.apply(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + half * k2[i];
        }
        op.apply(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + full * k3[i];
        }
        op.apply(&tmp, &mut k4);
        for i in 0..n {
            x[i] += sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        steps += 1;
    }

    let mut full_vec = vec![C64::new(0.0, 0.0); d * d];
    for (p, &i) in active.iter().enumerate() {
        full_vec[i] = x[p];
    }
    let rho = DensityMatrix::new(unvectorize(&full_vec, d)?)?
        .hermitized()
        .normalized()?;
    Ok(EvolveResult {
        rho,
        steps,
        residual,
        dt,
    })
}

/// Real trace row `vec(I)† L̂`, whose norm vanishes for a trace-preserving
/// generator.
pub fn trace_row_norm(liou: &Liouvillian) -> f64 {
    let d = liou.dim();
    let mut row = vec![C64::new(0.0, 0.0); d * d];
    for (r, c, v) in liou.superoperator().entries() {
        if r % d == r / d {
            row[c] += v;
        }
    }
    norm2(&row)
}

/// Dense `D × D` identity helper used by callers building `ρ0`.
pub fn identity(dim: usize) -> DenseMatrix {
    DMatrix::identity(dim, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_hamiltonian, build_jump_set, Bath, BoundaryBaths, Family, ModelSpec, TjzJumps};
    use crate::operator::{embed_local, spin, Chain};
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn model_liou(spec: &ModelSpec, bath: &Bath) -> Liouvillian {
        let h = build_hamiltonian(spec).unwrap();
        let jumps = build_jump_set(spec, bath).unwrap().operators();
        Liouvillian::new(&h, &jumps).unwrap()
    }

    fn single_site(g1: f64, g2: f64) -> Liouvillian {
        let chain = Chain::spin_half(1);
        let sp = embed_local(&spin::half::plus(), 1, chain).unwrap().scale_real(g1.sqrt());
        let sm = embed_local(&spin::half::minus(), 1, chain).unwrap().scale_real(g2.sqrt());
        Liouvillian::new(&SparseOperator::zero(2), &[sp, sm]).unwrap()
    }

    #[test]
    fn decay_example() {
        let chain = Chain::spin_half(1);
        let g: f64 = 0.7;
        let sm = embed_local(&spin::half::minus(), 1, chain).unwrap().scale_real(g.sqrt());
        let l = Liouvillian::new(&SparseOperator::zero(2), &[sm]).unwrap();
        let up = spin::half::up();
        let out = l.apply(&up).unwrap();
        let expect = (spin::half::down() - spin::half::up()) * c(g);
        assert!(dense_frobenius(&(out - expect)) < 1e-15);
    }

    #[test]
    fn unitary_limit() {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let h = build_hamiltonian(&spec).unwrap();
        let l = Liouvillian::new(&h, &[]).unwrap();
        let id = identity(16);
        assert!(dense_frobenius(&l.apply(&id).unwrap()) < 1e-14);
        let rho = crate::operator::spin::half::x();
        let chain = Chain::spin_half(4);
        let x1 = embed_local(&rho, 2, chain).unwrap().to_dense();
        let expect = (h.mul_dense(&x1).unwrap() - h.dense_mul(&x1).unwrap()) * (-I);
        assert!(dense_frobenius(&(l.apply(&x1).unwrap() - expect)) < 1e-13);
    }

    #[test]
    fn trace_preserving_all_models() {
        for (family, n) in [
            (Family::Xx, 3),
            (Family::Fredkin, 4),
            (Family::TjzSpin1, 3),
            (Family::PairflipSpin1, 3),
            (Family::DipoleSpin1, 3),
        ] {
            let l = model_liou(&ModelSpec::new(family, n), &Bath::four(1.5, 0.5, 0.5, 1.5));
            assert!(trace_row_norm(&l) < 1e-12 * l.superoperator().frobenius_norm());
        }
    }

    #[test]
    fn identity_is_steady_for_hermitian_jumps() {
        let chain = Chain::spin_half(3);
        let x = embed_local(&spin::half::x(), 2, chain).unwrap();
        let z = embed_local(&spin::half::z(), 3, chain).unwrap();
        let h = build_hamiltonian(&ModelSpec::new(Family::Xx, 3)).unwrap();
        let l = Liouvillian::new(&h, &[x, z]).unwrap();
        let r = l.residual(&DensityMatrix::maximally_mixed(8)).unwrap();
        assert!(r < 1e-14);
    }

    #[test]
    fn single_site_rate_balance() {
        let l = single_site(1.5, 0.5);
        let ss = steady_states_dense(&l).unwrap();
        assert_eq!(ss.null_dim, 1);
        let rho = ss.unique().unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.75).abs() < 1e-12);
        assert!((rho.matrix()[(1, 1)].re - 0.25).abs() < 1e-12);
        assert!(rho.offdiag_mass() < 1e-12);
    }

    #[test]
    fn fredkin_multiplicity() {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let bath = Bath::four(1.5, 0.5, 0.5, 1.5);
        assert_eq!(steady_states_dense(&model_liou(&spec, &bath)).unwrap().null_dim, 1);
        let mut left = spec.clone();
        left.params.boundary_baths = BoundaryBaths::Left;
        let ss = steady_states_dense(&model_liou(&left, &bath)).unwrap();
        assert_eq!(ss.null_dim, 3);
        for s in &ss.states {
            if s.unit_trace {
                assert!(s.rho.hermiticity_error() < 1e-12);
            }
        }
    }

    #[test]
    fn tjz_dis2_frozen_direction() {
        let mut spec = ModelSpec::new(Family::TjzSpin1, 3);
        spec.params.tjz_jumps = TjzJumps::Dis2;
        let ss = steady_states_dense(&model_liou(&spec, &Bath::pair(1.5, 0.5))).unwrap();
        assert_eq!(ss.null_dim, 2);
    }

    #[test]
    fn dense_limit() {
        let spec = ModelSpec::new(Family::Fredkin, 7);
        let l = model_liou(&spec, &Bath::four(1.5, 0.5, 0.5, 1.5));
        assert!(matches!(
            steady_states_dense(&l),
            Err(Error::TooLargeForDense { dim: 128, limit: 100 })
        ));
    }

    #[test]
    fn evolve_matches_dense() {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let l = model_liou(&spec, &Bath::four(1.5, 0.5, 0.5, 1.5));
        let dense = steady_states_dense(&l).unwrap();
        let ev = steady_state_evolve(&l, None, &EvolveOptions::default()).unwrap();
        let td = ev.rho.trace_distance(dense.unique().unwrap()).unwrap();
        assert!(td < 1e-8, "{td}");
        assert!(ev.residual < 1e-12);
        // Restarting from the fixed point converges immediately.
        let again = steady_state_evolve(&l, Some(&ev.rho), &EvolveOptions::default()).unwrap();
        assert!(again.steps <= 1);
    }

    #[test]
    fn evolve_infinite_temperature() {
        let l = model_liou(&ModelSpec::new(Family::Xx, 2), &Bath::pair(1.0, 1.0));
        let ev = steady_state_evolve(&l, None, &EvolveOptions::default()).unwrap();
        let td = ev.rho.trace_distance(&DensityMatrix::maximally_mixed(4)).unwrap();
        assert!(td < 1e-12);
    }

    #[test]
    fn evolve_not_converged() {
        let l = single_site(1.5, 0.5);
        let up = DensityMatrix::new(spin::half::up()).unwrap();
        let opts = EvolveOptions {
            max_steps: 3,
            ..EvolveOptions::default()
        };
        assert!(matches!(
            steady_state_evolve(&l, Some(&up), &opts),
            Err(Error::NotConverged { steps: 3, .. })
        ));
    }

    #[test]
    fn evolve_unstable_step() {
        let l = single_site(1.5, 0.5);
        let up = DensityMatrix::new(spin::half::up()).unwrap();
        let opts = EvolveOptions {
            dt: Some(50.0),
            ..EvolveOptions::default()
        };
        assert!(matches!(
            steady_state_evolve(&l, Some(&up), &opts),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn trace_distance_basic() {
        let a = DensityMatrix::from_weights(&[1.0, 0.0]).unwrap();
        let b = DensityMatrix::from_weights(&[0.0, 1.0]).unwrap();
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-14);
    }

    fn random_matrix(d: usize) -> impl Strategy<Value = DenseMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d)
            .prop_map(move |v| DenseMatrix::from_iterator(d, d, v.into_iter().map(|(r, i)| C64::new(r, i))))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn superoperator_matches_matrix_free(
            h in random_matrix(4), l1 in random_matrix(4), l2 in random_matrix(4), rho in random_matrix(4)
        ) {
            let h = (&h + h.adjoint()) * c(0.5);
            let h = SparseOperator::from_dense(&h).unwrap();
            let j = [SparseOperator::from_dense(&l1).unwrap(), SparseOperator::from_dense(&l2).unwrap()];
            let l = Liouvillian::new(&h, &j).unwrap();
            let direct = l.apply(&rho).unwrap();
            let via = unvectorize(&l.superoperator().apply(&vectorize(&rho)).unwrap(), 4).unwrap();
            prop_assert!(dense_frobenius(&(direct - via)) < 1e-13);
            prop_assert!(trace_row_norm(&l) < 1e-12 * l.superoperator().frobenius_norm().max(1.0));
        }

        #[test]
        fn evolution_conserves_trace(g1 in 0.2f64..2.0, g2 in 0.2f64..2.0) {
            let spec = ModelSpec::new(Family::Xx, 3);
            let l = model_liou(&spec, &Bath::pair(g1, g2));
            let opts = EvolveOptions { max_steps: 200, tol: 0.0, dt: None };
            // Unnormalized trajectory: check the trace without the final normalization.
            let liou = l.superoperator();
            let mut v = vectorize(DensityMatrix::maximally_mixed(8).matrix());
            let dt = 0.1 / liou.norm_inf();
            for _ in 0..opts.max_steps {
                let k = liou.apply(&v).unwrap();
                for (x, y) in v.iter_mut().zip(&k) { *x += y * dt; }
            }
            let tr: C64 = (0..8).map(|i| v[i * 8 + i]).sum();
            let elapsed = dt * opts.max_steps as f64;
            prop_assert!((tr - c(1.0)).norm() < 1e-10 * elapsed.max(1.0));
        }
    }
}
