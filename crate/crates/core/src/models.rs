//! Hamiltonians and dissipator sets of the supported chain families.
//!
//! Models are described declaratively by [`ModelSpec`] and [`Bath`] and
//! compiled to [`SparseOperator`]s. All chains have open boundaries.

use std::f64::consts::SQRT_2;
use std::fmt;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{embed_local, spin, Chain, DenseMatrix, SparseOperator};

/// Seed used for the pair-flip couplings when none is configured.
pub const DEFAULT_COUPLING_SEED: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Xx,
    Xxz,
    Fredkin,
    TjzSpin1,
    PairflipSpin1,
    DipoleSpin1,
}

impl Family {
    pub fn local_dim(self) -> usize {
        match self {
            Family::Xx | Family::Xxz | Family::Fredkin => 2,
            _ => 3,
        }
    }

    pub fn min_sites(self) -> usize {
        match self {
            Family::Fredkin | Family::DipoleSpin1 => 3,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Xx => "xx",
            Family::Xxz => "xxz",
            Family::Fredkin => "fredkin",
            Family::TjzSpin1 => "tjz_spin1",
            Family::PairflipSpin1 => "pairflip_spin1",
            Family::DipoleSpin1 => "dipole_spin1",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Dissipator choice for the spin-1 t-Jz chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TjzJumps {
    /// `S^±` on selected sites (site 1 by default).
    #[default]
    Dis1,
    /// Bond operators `P↑S⁺ + S⁺P↑`, `P↓S⁻ + S⁻P↓` and their rescaled adjoints.
    Dis2,
    /// `S^±_1` plus on-site dephasing `(S⁺)²(S⁻)²`, `(S⁻)²(S⁺)²`.
    Dis3,
}

/// Which ends of a boundary-driven chain are coupled to a bath.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryBaths {
    #[default]
    Both,
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// `Δ` of the XXZ `σ^z σ^z` term.
    #[serde(default)]
    pub delta: f64,
    /// Seed for the pair-flip couplings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_seed: Option<u64>,
    #[serde(default)]
    pub tjz_jumps: TjzJumps,
    /// Sites carrying the single-site bath pair (XX family and t-Jz `Dis1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_sites: Option<Vec<usize>>,
    /// Ends driven in the Fredkin chain.
    #[serde(default)]
    pub boundary_baths: BoundaryBaths,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Family,
    pub n: usize,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ModelSpec {
    pub fn new(family: Family, n: usize) -> Self {
        Self {
            family,
            n,
            params: ModelParams::default(),
            boundary: Boundary::Open,
        }
    }

    pub fn with_params(mut self, params: ModelParams) -> Self {
        self.params = params;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < self.family.min_sites() {
            return Err(Error::ChainTooShort {
                family: self.family.name(),
                min: self.family.min_sites(),
                sites: self.n,
            });
        }
        Ok(())
    }

    pub fn chain(&self) -> Chain {
        Chain::new(self.n, self.family.local_dim()).expect("family local dims are valid")
    }
}

/// Rates for one site of a site-resolved XX bath.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteRates {
    pub site: usize,
    pub raise: f64,
    pub lower: f64,
}

/// Named bath rates `γ1..γ4`, or a per-site list for the XX family.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bath {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma4: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_rates: Option<Vec<SiteRates>>,
}

impl Bath {
    pub fn pair(gamma1: f64, gamma2: f64) -> Self {
        Self {
            gamma1: Some(gamma1),
            gamma2: Some(gamma2),
            ..Self::default()
        }
    }

    pub fn four(gamma1: f64, gamma2: f64, gamma3: f64, gamma4: f64) -> Self {
        Self {
            gamma1: Some(gamma1),
            gamma2: Some(gamma2),
            gamma3: Some(gamma3),
            gamma4: Some(gamma4),
            site_rates: None,
        }
    }

    pub fn per_site(rates: Vec<SiteRates>) -> Self {
        Self {
            site_rates: Some(rates),
            ..Self::default()
        }
    }

    /// Looks up `gamma1`..`gamma4`, requiring it to be present and positive.
    pub fn rate(&self, name: &str) -> Result<f64> {
        let value = match name {
            "gamma1" => self.gamma1,
            "gamma2" => self.gamma2,
            "gamma3" => self.gamma3,
            "gamma4" => self.gamma4,
            other => return Err(Error::MissingRate(other.to_string())),
        }
        .ok_or_else(|| Error::MissingRate(name.to_string()))?;
        positive(name, value)
    }

    /// `log(γ1/γ2)`.
    pub fn beta_left(&self) -> Result<f64> {
        Ok((self.rate("gamma1")? / self.rate("gamma2")?).ln())
    }

    /// `log(γ3/γ4)`, the right-end convention of the boundary-driven chain.
    pub fn beta_right(&self) -> Result<f64> {
        Ok((self.rate("gamma3")? / self.rate("gamma4")?).ln())
    }

    /// `log(γ4/γ3)`, the sign-flipped right-end convention used by the
    /// general-bath effective Hamiltonian and FCS.
    pub fn beta_right_flipped(&self) -> Result<f64> {
        Ok(-self.beta_right()?)
    }
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositiveRate {
            name: name.to_string(),
            value,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum JumpKind {
    Raise,
    Lower,
    Custom(DenseMatrix),
}

/// Declarative jump: a local operator on consecutive sites starting at
/// `site`, scaled by `√rate` when compiled.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpSpec {
    pub label: String,
    pub kind: JumpKind,
    pub site: usize,
    pub rate: f64,
}

impl JumpSpec {
    pub fn raise(site: usize, rate: f64) -> Self {
        Self {
            label: format!("S+_{site}"),
            kind: JumpKind::Raise,
            site,
            rate,
        }
    }

    pub fn lower(site: usize, rate: f64) -> Self {
        Self {
            label: format!("S-_{site}"),
            kind: JumpKind::Lower,
            site,
            rate,
        }
    }

    pub fn custom(label: impl Into<String>, local: DenseMatrix, site: usize, rate: f64) -> Self {
        Self {
            label: label.into(),
            kind: JumpKind::Custom(local),
            site,
            rate,
        }
    }

    pub fn compile(&self, chain: Chain) -> Result<Jump> {
        let rate = positive(&self.label, self.rate)?;
        let local = match &self.kind {
            JumpKind::Raise if chain.local_dim() == 2 => spin::half::plus(),
            JumpKind::Raise => spin::one::plus(),
            JumpKind::Lower if chain.local_dim() == 2 => spin::half::minus(),
            JumpKind::Lower => spin::one::minus(),
            JumpKind::Custom(m) => m.clone(),
        };
        let bare = embed_local(&local, self.site, chain)?;
        Ok(Jump {
            label: self.label.clone(),
            rate,
            operator: bare.scale_real(rate.sqrt()),
        })
    }
}

/// A compiled jump operator `√γ·L`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub label: String,
    pub rate: f64,
    pub operator: SparseOperator,
}

/// Indices of a forward jump and its reverse partner inside a [`JumpSet`].
/// A Hermitian jump is paired with itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JumpPair {
    pub forward: usize,
    pub backward: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct JumpSet {
    pub jumps: Vec<Jump>,
    pub pairs: Vec<JumpPair>,
}

impl JumpSet {
    fn push_pair(&mut self, chain: Chain, forward: JumpSpec, backward: JumpSpec) -> Result<()> {
        let f = self.jumps.len();
        self.jumps.push(forward.compile(chain)?);
        self.jumps.push(backward.compile(chain)?);
        self.pairs.push(JumpPair {
            forward: f,
            backward: f + 1,
        });
        Ok(())
    }

    fn push_single(&mut self, chain: Chain, jump: JumpSpec) -> Result<()> {
        let k = self.jumps.len();
        self.jumps.push(jump.compile(chain)?);
        self.pairs.push(JumpPair {
            forward: k,
            backward: k,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    /// The compiled operators `√γ·L` in order.
    pub fn operators(&self) -> Vec<SparseOperator> {
        self.jumps.iter().map(|j| j.operator.clone()).collect()
    }

    /// Keeps only the jumps selected by `keep`, dropping pairs that lose a
    /// member.
    pub fn filtered(&self, keep: impl Fn(&Jump) -> bool) -> JumpSet {
        let mut remap = vec![None; self.jumps.len()];
        let mut out = JumpSet::default();
        for (i, j) in self.jumps.iter().enumerate() {
            if keep(j) {
                remap[i] = Some(out.jumps.len());
                out.jumps.push(j.clone());
            }
        }
        for p in &self.pairs {
            if let (Some(f), Some(b)) = (remap[p.forward], remap[p.backward]) {
                out.pairs.push(JumpPair {
                    forward: f,
                    backward: b,
                });
            }
        }
        out
    }
}

fn c(v: f64) -> C64 {
    C64::new(v, 0.0)
}

fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    a.kronecker(b)
}

fn hermitian_part_sum(term: &DenseMatrix) -> DenseMatrix {
    term + term.adjoint()
}

/// Sum of a `k`-site local term over every window that fits the chain.
fn sum_windows(local: &DenseMatrix, span: usize, chain: Chain) -> Result<SparseOperator> {
    let mut total = SparseOperator::zero(chain.dim());
    for site in 1..=chain.sites() + 1 - span {
        total = total.add(&embed_local(local, site, chain)?)?;
    }
    Ok(total)
}

/// Fredkin three-site term `P↑ ⊗ |S⟩⟨S| + |S⟩⟨S| ⊗ P↓`.
pub fn fredkin_local_term() -> DenseMatrix {
    let mut singlet = DenseMatrix::zeros(4, 4);
    // |S⟩ = (|↑↓⟩ − |↓↑⟩)/√2 on indices 1 and 2
    let amp = [0.0, 1.0 / SQRT_2, -1.0 / SQRT_2, 0.0];
    for r in 0..4 {
        for col in 0..4 {
            singlet[(r, col)] = c(amp[r] * amp[col]);
        }
    }
    kron(&spin::half::up(), &singlet) + kron(&singlet, &spin::half::down())
}

/// Pair-flip couplings `g^{αβ}_{i,i+1}`: one value per bond (outer) and
/// ordered level pair `(α, β)` (row-major), uniform in `[0.5, 1.5]`.
pub fn pairflip_couplings(n: usize, seed: u64) -> Vec<[[f64; 3]; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..n)
        .map(|_| {
            let mut g = [[0.0; 3]; 3];
            for row in g.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.random_range(0.5..=1.5);
                }
            }
            g
        })
        .collect()
}

pub fn build_hamiltonian(spec: &ModelSpec) -> Result<SparseOperator> {
    spec.validate()?;
    let chain = spec.chain();
    match spec.family {
        Family::Xx | Family::Xxz => {
            use spin::half::{minus, plus, z};
            // σxσx + σyσy = 2(σ⁺σ⁻ + σ⁻σ⁺)
            let mut bond = (kron(&plus(), &minus()) + kron(&minus(), &plus())) * c(2.0);
            if spec.family == Family::Xxz {
                bond += kron(&z(), &z()) * c(spec.params.delta);
            }
            sum_windows(&bond, 2, chain)
        }
        Family::Fredkin => sum_windows(&fredkin_local_term(), 3, chain),
        Family::TjzSpin1 => {
            use spin::one::{down, identity, minus, plus, up};
            let id = identity();
            let term = kron(&(plus() * (&id - down())), &(minus() * up()))
                + kron(&(plus() * down()), &(minus() * (&id - up())));
            sum_windows(&hermitian_part_sum(&term), 2, chain)
        }
        Family::PairflipSpin1 => {
            let seed = spec.params.coupling_seed.unwrap_or(DEFAULT_COUPLING_SEED);
            let couplings = pairflip_couplings(spec.n, seed);
            let mut total = SparseOperator::zero(chain.dim());
            for (bond, g) in couplings.iter().enumerate() {
                let mut term = DenseMatrix::zeros(9, 9);
                for (alpha, row) in g.iter().enumerate() {
                    for (beta, &value) in row.iter().enumerate() {
                        // g |αα⟩⟨ββ|
                        term[(alpha * 3 + alpha, beta * 3 + beta)] += c(value);
                    }
                }
                let term = hermitian_part_sum(&term);
                total = total.add(&embed_local(&term, bond + 1, chain)?)?;
            }
            Ok(total)
        }
        Family::DipoleSpin1 => {
            use spin::one::{minus, plus};
            let term = kron(&kron(&minus(), &(plus() * plus())), &minus());
            sum_windows(&hermitian_part_sum(&term), 3, chain)
        }
    }
}

/// Projector on `span{|+0⟩, |−0⟩, |0+⟩, |0−⟩}` of two spin-1 sites.
pub fn dipole_bond_projector() -> DenseMatrix {
    let mut p = DenseMatrix::zeros(9, 9);
    for (a, b) in [(0, 1), (2, 1), (1, 0), (1, 2)] {
        p[(a * 3 + b, a * 3 + b)] = c(1.0);
    }
    p
}

fn site_list(spec: &ModelSpec, default: Vec<usize>) -> Result<Vec<usize>> {
    let sites = spec.params.jump_sites.clone().unwrap_or(default);
    let chain = spec.chain();
    for &s in &sites {
        chain.check_site(s)?;
    }
    Ok(sites)
}

/// Compiles the model's dissipator set, grouped into reverse pairs.
pub fn build_jump_set(spec: &ModelSpec, bath: &Bath) -> Result<JumpSet> {
    spec.validate()?;
    let chain = spec.chain();
    let n = spec.n;
    let mut set = JumpSet::default();
    match spec.family {
        Family::Xx | Family::Xxz => {
            if let Some(rates) = &bath.site_rates {
                for r in rates {
                    chain.check_site(r.site)?;
                    set.push_pair(
                        chain,
                        JumpSpec::raise(r.site, positive("raise", r.raise)?),
                        JumpSpec::lower(r.site, positive("lower", r.lower)?),
                    )?;
                }
            } else {
                let (g1, g2) = (bath.rate("gamma1")?, bath.rate("gamma2")?);
                for site in site_list(spec, (1..=n).collect())? {
                    set.push_pair(chain, JumpSpec::raise(site, g1), JumpSpec::lower(site, g2))?;
                }
            }
        }
        Family::Fredkin => {
            let baths = spec.params.boundary_baths;
            if baths != BoundaryBaths::Right {
                let (g1, g2) = (bath.rate("gamma1")?, bath.rate("gamma2")?);
                set.push_pair(chain, JumpSpec::raise(1, g1), JumpSpec::lower(1, g2))?;
            }
            if baths != BoundaryBaths::Left {
                let (g3, g4) = (bath.rate("gamma3")?, bath.rate("gamma4")?);
                set.push_pair(chain, JumpSpec::raise(n, g3), JumpSpec::lower(n, g4))?;
            }
        }
        Family::TjzSpin1 => {
            let (g1, g2) = (bath.rate("gamma1")?, bath.rate("gamma2")?);
            match spec.params.tjz_jumps {
                TjzJumps::Dis1 => {
                    for site in site_list(spec, vec![1])? {
                        set.push_pair(chain, JumpSpec::raise(site, g1), JumpSpec::lower(site, g2))?;
                    }
                }
                TjzJumps::Dis2 => {
                    use spin::one::{down, minus, plus, up};
                    let x = kron(&up(), &plus()) + kron(&plus(), &up());
                    let y = kron(&down(), &minus()) + kron(&minus(), &down());
                    for i in 1..n {
                        set.push_pair(
                            chain,
                            JumpSpec::custom(format!("L+_{i}"), x.clone(), i, g1 / 4.0),
                            JumpSpec::custom(format!("L+dag_{i}"), x.adjoint(), i, g2 / 4.0),
                        )?;
                        set.push_pair(
                            chain,
                            JumpSpec::custom(format!("L-_{i}"), y.clone(), i, g2 / 4.0),
                            JumpSpec::custom(format!("L-dag_{i}"), y.adjoint(), i, g1 / 4.0),
                        )?;
                    }
                }
                TjzJumps::Dis3 => {
                    use spin::one::{minus, plus};
                    let g3 = bath.rate("gamma3")?;
                    set.push_pair(chain, JumpSpec::raise(1, g1), JumpSpec::lower(1, g2))?;
                    let pp = plus() * plus() * minus() * minus();
                    let mm = minus() * minus() * plus() * plus();
                    for i in 1..=n {
                        set.push_single(chain, JumpSpec::custom(format!("D+_{i}"), pp.clone(), i, g3))?;
                        set.push_single(chain, JumpSpec::custom(format!("D-_{i}"), mm.clone(), i, g3))?;
                    }
                }
            }
        }
        Family::PairflipSpin1 => {
            let (g1, g2) = (bath.rate("gamma1")?, bath.rate("gamma2")?);
            for site in 1..=n {
                if site % 2 == 1 {
                    set.push_pair(chain, JumpSpec::raise(site, g1), JumpSpec::lower(site, g2))?;
                } else {
                    set.push_pair(chain, JumpSpec::lower(site, g1), JumpSpec::raise(site, g2))?;
                }
            }
        }
        Family::DipoleSpin1 => {
            use spin::one::{minus, plus};
            let (g1, g2) = (bath.rate("gamma1")?, bath.rate("gamma2")?);
            let (g3, g4) = (bath.rate("gamma3")?, bath.rate("gamma4")?);
            set.push_pair(chain, JumpSpec::raise(1, g1), JumpSpec::lower(1, g2))?;
            let proj = dipole_bond_projector();
            let right = kron(&minus(), &plus()) * &proj;
            let left = kron(&plus(), &minus()) * &proj;
            for i in 1..n {
                set.push_pair(
                    chain,
                    JumpSpec::custom(format!("R_{i}"), right.clone(), i, g3),
                    JumpSpec::custom(format!("L_{i}"), left.clone(), i, g4),
                )?;
            }
        }
    }
    Ok(set)
}
