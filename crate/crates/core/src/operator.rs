//! Basis encoding and sparse complex operator algebra on open spin chains.
//!
//! Sites are numbered from 1. A basis index is the base-`d` number whose most
//! significant digit is site 1. For spin-1/2 the digit 0 is `↑` (written `(`)
//! and 1 is `↓` (written `)`); for spin-1 the digits 0, 1, 2 are `|+⟩`, `|0⟩`,
//! `|−⟩`.

use std::fmt;

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries with magnitude below this are dropped on canonicalization.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Dense complex matrix used for local terms, density matrices and small
/// full operators.
pub type DenseMatrix = DMatrix<C64>;

/// Shape of the many-body Hilbert space: number of sites and local dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chain {
    sites: usize,
    local_dim: usize,
}

impl Chain {
    pub fn new(sites: usize, local_dim: usize) -> Result<Self> {
        if local_dim != 2 && local_dim != 3 {
            return Err(Error::UnsupportedLocalDim(local_dim));
        }
        if sites == 0 {
            return Err(Error::InvalidInput("chain must have at least one site".into()));
        }
        Ok(Self { sites, local_dim })
    }

    pub fn spin_half(sites: usize) -> Self {
        Self::new(sites, 2).expect("valid spin-1/2 chain")
    }

    pub fn spin_one(sites: usize) -> Self {
        Self::new(sites, 3).expect("valid spin-1 chain")
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// Hilbert-space dimension `d^N`.
    pub fn dim(&self) -> usize {
        self.local_dim.pow(self.sites as u32)
    }

    /// Local level of `site` (1-based) in basis state `index`.
    pub fn digit(&self, index: usize, site: usize) -> u8 {
        let shift = self.local_dim.pow((self.sites - site) as u32);
        ((index / shift) % self.local_dim) as u8
    }

    pub fn state(&self, index: usize) -> BasisState {
        let mut digits = vec![0u8; self.sites];
        let mut rest = index;
        for slot in digits.iter_mut().rev() {
            *slot = (rest % self.local_dim) as u8;
            rest /= self.local_dim;
        }
        BasisState {
            index,
            digits,
            local_dim: self.local_dim,
        }
    }

    pub fn states(&self) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dim()).map(move |i| self.state(i))
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.sites {
            Err(Error::SiteOutOfRange {
                site,
                sites: self.sites,
            })
        } else {
            Ok(())
        }
    }
}

/// A computational basis state together with its digit expansion.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    index: usize,
    digits: Vec<u8>,
    local_dim: usize,
}

impl BasisState {
    pub fn from_digits(digits: Vec<u8>, local_dim: usize) -> Result<Self> {
        if local_dim != 2 && local_dim != 3 {
            return Err(Error::UnsupportedLocalDim(local_dim));
        }
        if digits.is_empty() {
            return Err(Error::InvalidState("empty digit list".into()));
        }
        let mut index = 0usize;
        for &d in &digits {
            if d as usize >= local_dim {
                return Err(Error::InvalidState(format!(
                    "digit {d} out of range for local dimension {local_dim}"
                )));
            }
            index = index * local_dim + d as usize;
        }
        Ok(Self {
            index,
            digits,
            local_dim,
        })
    }

    /// Parses `(`/`)` (or `u`/`d`) strings as spin-1/2 and `+`/`0`/`-` strings
    /// as spin-1.
    pub fn parse(text: &str) -> Result<Self> {
        let half = text.chars().all(|c| matches!(c, '(' | ')' | 'u' | 'd'));
        let one = text.chars().all(|c| matches!(c, '+' | '0' | '-'));
        let digits: Vec<u8> = if half {
            text.chars()
                .map(|c| if matches!(c, '(' | 'u') { 0 } else { 1 })
                .collect()
        } else if one {
            text.chars()
                .map(|c| match c {
                    '+' => 0,
                    '0' => 1,
                    _ => 2,
                })
                .collect()
        } else {
            return Err(Error::InvalidState(format!("cannot parse `{text}`")));
        };
        Self::from_digits(digits, if half { 2 } else { 3 })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn sites(&self) -> usize {
        self.digits.len()
    }

    /// Level at a 1-based site.
    pub fn digit(&self, site: usize) -> u8 {
        self.digits[site - 1]
    }

    /// `S^z` eigenvalue of one site: ±1 for spin-1/2 (σ^z), 1/0/−1 for spin-1.
    pub fn sz(&self, site: usize) -> f64 {
        match (self.local_dim, self.digit(site)) {
            (2, 0) => 1.0,
            (2, _) => -1.0,
            (_, 0) => 1.0,
            (_, 1) => 0.0,
            _ => -1.0,
        }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let glyphs: &[char] = if self.local_dim == 2 {
            &['(', ')']
        } else {
            &['+', '0', '-']
        };
        for &d in &self.digits {
            write!(f, "{}", glyphs[d as usize])?;
        }
        Ok(())
    }
}

/// Local single-site matrices in the digit basis.
pub mod spin {
    use super::{DenseMatrix, C64};

    fn real(n: usize, entries: &[(usize, usize, f64)]) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, n);
        for &(r, c, v) in entries {
            m[(r, c)] = C64::new(v, 0.0);
        }
        m
    }

    /// Spin-1/2 operators; `σ± = (σx ± iσy)/2`.
    pub mod half {
        use super::*;

        pub fn identity() -> DenseMatrix {
            DenseMatrix::identity(2, 2)
        }
        pub fn plus() -> DenseMatrix {
            real(2, &[(0, 1, 1.0)])
        }
        pub fn minus() -> DenseMatrix {
            real(2, &[(1, 0, 1.0)])
        }
        pub fn z() -> DenseMatrix {
            real(2, &[(0, 0, 1.0), (1, 1, -1.0)])
        }
        pub fn x() -> DenseMatrix {
            real(2, &[(0, 1, 1.0), (1, 0, 1.0)])
        }
        pub fn y() -> DenseMatrix {
            let mut m = DenseMatrix::zeros(2, 2);
            m[(0, 1)] = C64::new(0.0, -1.0);
            m[(1, 0)] = C64::new(0.0, 1.0);
            m
        }
        /// `P↑ = (1 + σ^z)/2`.
        pub fn up() -> DenseMatrix {
            real(2, &[(0, 0, 1.0)])
        }
        /// `P↓ = (1 − σ^z)/2`.
        pub fn down() -> DenseMatrix {
            real(2, &[(1, 1, 1.0)])
        }
    }

    /// Spin-1 operators with `S^z = diag(1, 0, −1)` and `√2` ladder elements.
    pub mod one {
        use super::*;

        pub fn identity() -> DenseMatrix {
            DenseMatrix::identity(3, 3)
        }
        pub fn plus() -> DenseMatrix {
            let s = std::f64::consts::SQRT_2;
            real(3, &[(0, 1, s), (1, 2, s)])
        }
        pub fn minus() -> DenseMatrix {
            let s = std::f64::consts::SQRT_2;
            real(3, &[(1, 0, s), (2, 1, s)])
        }
        pub fn z() -> DenseMatrix {
            real(3, &[(0, 0, 1.0), (2, 2, -1.0)])
        }
        /// `|+⟩⟨+|`
        pub fn up() -> DenseMatrix {
            real(3, &[(0, 0, 1.0)])
        }
        /// `|0⟩⟨0|`
        pub fn zero() -> DenseMatrix {
            real(3, &[(1, 1, 1.0)])
        }
        /// `|−⟩⟨−|`
        pub fn down() -> DenseMatrix {
            real(3, &[(2, 2, 1.0)])
        }
    }
}

/// Complex square matrix in compressed-row form.
///
/// Rows are sorted by column, duplicates are merged and entries with
/// magnitude below [`PRUNE_THRESHOLD`] are removed at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_sorted_unchecked(
            diag.len(),
            diag.iter()
                .enumerate()
                .map(|(i, &v)| (i, i, C64::new(v, 0.0))),
        )
    }

    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut items: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = items.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.max(c) + 1,
            });
        }
        items.sort_unstable_by_key(|&(r, c, _)| (r, c));
        Ok(Self::from_sorted_unchecked(dim, items))
    }

    /// Builds from triplets sorted by `(row, col)`; duplicates are summed.
    fn from_sorted_unchecked<I>(dim: usize, sorted: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<C64> = Vec::new();
        let mut rows = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
                last = Some((r, c));
            }
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v.norm() >= PRUNE_THRESHOLD {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            dim,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_zero(&self) -> bool {
        self.vals.is_empty()
    }

    /// Entries of one row as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// All stored entries as `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        } else {
            Ok(())
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::from_sorted_unchecked(self.dim, self.entries().map(|(r, c, v)| (r, c, v * factor)))
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.dim {
            let mut row: Vec<(usize, usize, C64)> = self
                .row(r)
                .chain(other.row(r))
                .map(|(c, v)| (r, c, v))
                .collect();
            row.sort_by_key(|&(_, c, _)| c);
            out.extend(row);
        }
        Ok(Self::from_sorted_unchecked(self.dim, out))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale_real(-1.0))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut items: Vec<(usize, usize, C64)> =
            self.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        items.sort_unstable_by_key(|&(r, c, _)| (r, c));
        Self::from_sorted_unchecked(self.dim, items)
    }

    /// Matrix product `self · other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut acc = vec![C64::new(0.0, 0.0); self.dim];
        let mut touched = vec![false; self.dim];
        let mut cols_hit = Vec::new();
        let mut out = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        cols_hit.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols_hit.sort_unstable();
            for &c in &cols_hit {
                out.push((r, c, acc[c]));
                acc[c] = C64::new(0.0, 0.0);
                touched[c] = false;
            }
            cols_hit.clear();
        }
        Ok(Self::from_sorted_unchecked(self.dim, out))
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.multiply(other)?.sub(&other.multiply(self)?)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok((0..self.dim)
            .map(|r| self.row(r).map(|(c, a)| a * v[c]).sum())
            .collect())
    }

    /// `self · m` for a dense `m` with `dim` rows.
    pub fn mul_dense(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        if m.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.nrows(),
            });
        }
        let mut out = DenseMatrix::zeros(self.dim, m.ncols());
        for j in 0..m.ncols() {
            let col = m.column(j);
            for r in 0..self.dim {
                let mut s = C64::new(0.0, 0.0);
                for (c, a) in self.row(r) {
                    s += a * col[c];
                }
                out[(r, j)] = s;
            }
        }
        Ok(out)
    }

    /// `m · self` for a dense `m` with `dim` columns.
    pub fn dense_mul(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        if m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.ncols(),
            });
        }
        let mut out = DenseMatrix::zeros(m.nrows(), self.dim);
        for (k, c, a) in self.entries() {
            for i in 0..m.nrows() {
                out[(i, c)] += m[(i, k)] * a;
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn from_dense(m: &DenseMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidLocalOperator(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        Ok(Self::from_sorted_unchecked(
            n,
            (0..n).flat_map(|r| (0..n).map(move |c| (r, c, m[(r, c)]))),
        ))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.sub(&self.adjoint())
            .map(|d| d.frobenius_norm())
            .unwrap_or(f64::INFINITY)
    }

    /// True when every nonzero entry lies on the diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(r, c, _)| r == c)
    }
}

/// Embeds a local operator acting on `k` consecutive sites starting at the
/// 1-based `site`, i.e. `I ⊗ … ⊗ local ⊗ … ⊗ I`.
///
/// `local` must be `d^k × d^k`; `k` is inferred from its size.
pub fn embed_local(local: &DenseMatrix, site: usize, chain: Chain) -> Result<SparseOperator> {
    let d = chain.local_dim();
    if local.nrows() != local.ncols() {
        return Err(Error::InvalidLocalOperator(format!(
            "local operator is {}x{}, expected square",
            local.nrows(),
            local.ncols()
        )));
    }
    let block = local.nrows();
    let mut span = 0u32;
    let mut size = 1usize;
    while size < block {
        size *= d;
        span += 1;
    }
    if size != block || span == 0 {
        return Err(Error::InvalidLocalOperator(format!(
            "local dimension {block} is not a positive power of {d}"
        )));
    }
    chain.check_site(site)?;
    let last = site + span as usize - 1;
    chain.check_site(last)?;

    let right = d.pow((chain.sites() - last) as u32);
    // nonzeros of each local column
    let mut by_col: Vec<Vec<(usize, C64)>> = vec![Vec::new(); block];
    for c in 0..block {
        for r in 0..block {
            let v = local[(r, c)];
            if v.norm() >= PRUNE_THRESHOLD {
                by_col[c].push((r, v));
            }
        }
    }
    let dim = chain.dim();
    let mut triplets = Vec::new();
    for col in 0..dim {
        let mid = (col / right) % block;
        let base = col - mid * right;
        for &(r, v) in &by_col[mid] {
            triplets.push((base + r * right, col, v));
        }
    }
    SparseOperator::from_triplets(dim, triplets)
}

/// Sum of a single-site term over all sites.
pub fn sum_over_sites(local: &DenseMatrix, chain: Chain) -> Result<SparseOperator> {
    let mut total = SparseOperator::zero(chain.dim());
    for site in 1..=chain.sites() {
        total = total.add(&embed_local(local, site, chain)?)?;
    }
    Ok(total)
}

/// Frobenius norm of a dense matrix.
pub fn dense_frobenius(m: &DenseMatrix) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
