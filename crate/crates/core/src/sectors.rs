//! Krylov sectors, conserved charges and effective Hamiltonians.
//!
//! Sectors are the connected components of the computational basis under the
//! off-diagonal action of a Hamiltonian. All supported models have diagonal
//! conserved charges, so every sector is labeled by the charges of any one of
//! its members.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::models::{Bath, BoundaryBaths, Family, ModelSpec};
use crate::operator::{BasisState, Chain, SparseOperator};

/// Hermiticity tolerance for [`decompose_sectors`].
const HERMITIAN_TOL: f64 = 1e-12;

/// Parenthesis counts of a spin-1/2 configuration: matched pairs `k`,
/// unmatched `(` (`b`) and unmatched `)` (`a`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FredkinLabel {
    pub k: usize,
    pub b: usize,
    pub a: usize,
}

impl fmt::Display for FredkinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.k, self.b, self.a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SectorLabel {
    Unlabeled,
    /// Total `σ^z`.
    Magnetization(i64),
    Fredkin(FredkinLabel),
    /// Sequence of nonzero spin-1 levels (t-Jz).
    Signs(String),
    /// Irreducible dot pattern (pair-flip).
    DotPattern(String),
    /// Magnetization and dipole moment.
    Charges(i64, i64),
}

impl fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectorLabel::Unlabeled => f.write_str("-"),
            SectorLabel::Magnetization(m) => write!(f, "m={m:+}"),
            SectorLabel::Fredkin(l) => write!(f, "{l}"),
            SectorLabel::Signs(s) | SectorLabel::DotPattern(s) => write!(f, "[{s}]"),
            SectorLabel::Charges(m, p) => write!(f, "m={m:+};p={p:+}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sector {
    pub id: usize,
    /// Basis indices, ascending.
    pub members: Vec<usize>,
    pub label: SectorLabel,
}

impl Sector {
    pub fn dim(&self) -> usize {
        self.members.len()
    }

    /// Smallest basis index, used as the sector representative.
    pub fn representative(&self) -> usize {
        self.members[0]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorDecomposition {
    chain: Chain,
    sectors: Vec<Sector>,
    sector_of: Vec<usize>,
}

impl SectorDecomposition {
    pub fn chain(&self) -> Chain {
        self.chain
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    pub fn sector_of(&self, index: usize) -> usize {
        self.sector_of[index]
    }

    pub fn sector(&self, id: usize) -> &Sector {
        &self.sectors[id]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sectors.iter().map(Sector::dim).collect()
    }

    /// Assigns model-specific labels from each sector's representative.
    pub fn labeled(mut self, family: Family) -> Self {
        for s in &mut self.sectors {
            let state = self.chain.state(s.representative());
            s.label = label_for(family, &state);
        }
        self
    }

    /// Mean of `values` over each sector.
    pub fn sector_means(&self, values: &[f64]) -> Vec<f64> {
        self.sectors
            .iter()
            .map(|s| s.members.iter().map(|&i| values[i]).sum::<f64>() / s.dim() as f64)
            .collect()
    }
}

fn label_for(family: Family, state: &BasisState) -> SectorLabel {
    match family {
        Family::Xx | Family::Xxz => {
            SectorLabel::Magnetization(Charge::Magnetization.value(state).unwrap_or(0.0) as i64)
        }
        Family::Fredkin => SectorLabel::Fredkin(fredkin_label(state)),
        Family::TjzSpin1 => SectorLabel::Signs(sign_pattern(state)),
        Family::PairflipSpin1 => SectorLabel::DotPattern(dot_pattern(state)),
        Family::DipoleSpin1 => SectorLabel::Charges(
            Charge::Magnetization.value(state).unwrap_or(0.0) as i64,
            Charge::Dipole.value(state).unwrap_or(0.0) as i64,
        ),
    }
}

/// Connected components of the basis graph whose edges are the nonzero
/// off-diagonal elements of `h`. Sector ids follow the smallest member.
pub fn decompose_sectors(h: &SparseOperator, chain: Chain) -> Result<SectorDecomposition> {
    if h.dim() != chain.dim() {
        return Err(Error::DimensionMismatch {
            expected: chain.dim(),
            found: h.dim(),
        });
    }
    let herm = h.hermiticity_error();
    if herm > HERMITIAN_TOL * h.frobenius_norm().max(1.0) {
        return Err(Error::NonHermitian(herm));
    }
    let dim = h.dim();
    let mut sector_of = vec![usize::MAX; dim];
    let mut sectors = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..dim {
        if sector_of[start] != usize::MAX {
            continue;
        }
        let id = sectors.len();
        sector_of[start] = id;
        queue.push_back(start);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            members.push(i);
            for (j, _) in h.row(i) {
                if sector_of[j] == usize::MAX {
                    sector_of[j] = id;
                    queue.push_back(j);
                }
            }
        }
        members.sort_unstable();
        sectors.push(Sector {
            id,
            members,
            label: SectorLabel::Unlabeled,
        });
    }
    Ok(SectorDecomposition {
        chain,
        sectors,
        sector_of,
    })
}

/// Stack matching of `(` = digit 0 against `)` = digit 1.
pub fn fredkin_label(state: &BasisState) -> FredkinLabel {
    let mut open = 0;
    let mut k = 0;
    let mut a = 0;
    for &d in state.digits() {
        if d == 0 {
            open += 1;
        } else if open > 0 {
            open -= 1;
            k += 1;
        } else {
            a += 1;
        }
    }
    FredkinLabel { k, b: open, a }
}

/// Nonzero spin-1 levels in order, e.g. `+-+` for `|0,+,−,+⟩`.
pub fn sign_pattern(state: &BasisState) -> String {
    state
        .digits()
        .iter()
        .filter_map(|&d| match d {
            0 => Some('+'),
            2 => Some('-'),
            _ => None,
        })
        .collect()
}

/// Reduces a spin-1 configuration by repeatedly removing adjacent equal
/// pairs; the remainder labels the pair-flip sector.
pub fn dot_pattern(state: &BasisState) -> String {
    let mut stack: Vec<u8> = Vec::new();
    for &d in state.digits() {
        if stack.last() == Some(&d) {
            stack.pop();
        } else {
            stack.push(d);
        }
    }
    stack
        .into_iter()
        .map(|d| ['+', '0', '-'][d as usize])
        .collect()
}

/// Diagonal conserved quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Charge {
    /// `Σ S^z_i` (σ^z for spin-1/2).
    Magnetization,
    /// `Σ (−1)^i S^z_i`.
    StaggeredMagnetization,
    /// `Σ i S^z_i`.
    Dipole,
    /// `N^k`, matched parenthesis pairs.
    PairedCount,
    /// `N^b`, unmatched `(`.
    UnpairedLeft,
    /// `N^a`, unmatched `)`.
    UnpairedRight,
    /// `Q_a = Σ (−1)^i |a⟩⟨a|_i` for spin-1 level `a`.
    StaggeredLevel(u8),
}

impl Charge {
    pub fn name(&self) -> String {
        match self {
            Charge::Magnetization => "magnetization".into(),
            Charge::StaggeredMagnetization => "staggered_magnetization".into(),
            Charge::Dipole => "dipole".into(),
            Charge::PairedCount => "paired".into(),
            Charge::UnpairedLeft => "unpaired_left".into(),
            Charge::UnpairedRight => "unpaired_right".into(),
            Charge::StaggeredLevel(a) => format!("staggered_level_{a}"),
        }
    }

    pub fn value(&self, state: &BasisState) -> Result<f64> {
        let n = state.sites();
        let sign = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
        let need = |d: usize| {
            if state.local_dim() != d {
                Err(Error::DimensionMismatch {
                    expected: d,
                    found: state.local_dim(),
                })
            } else {
                Ok(())
            }
        };
        Ok(match self {
            Charge::Magnetization => (1..=n).map(|i| state.sz(i)).sum(),
            Charge::StaggeredMagnetization => (1..=n).map(|i| sign(i) * state.sz(i)).sum(),
            Charge::Dipole => (1..=n).map(|i| i as f64 * state.sz(i)).sum(),
            Charge::PairedCount => {
                need(2)?;
                fredkin_label(state).k as f64
            }
            Charge::UnpairedLeft => {
                need(2)?;
                fredkin_label(state).b as f64
            }
            Charge::UnpairedRight => {
                need(2)?;
                fredkin_label(state).a as f64
            }
            Charge::StaggeredLevel(a) => {
                need(3)?;
                (1..=n)
                    .filter(|&i| state.digit(i) == *a)
                    .map(sign)
                    .sum()
            }
        })
    }

    pub fn diagonal(&self, chain: Chain) -> Result<Vec<f64>> {
        chain.states().map(|s| self.value(&s)).collect()
    }

    pub fn operator(&self, chain: Chain) -> Result<SparseOperator> {
        Ok(SparseOperator::from_diagonal(&self.diagonal(chain)?))
    }
}

/// Evaluates a charge on one basis state.
pub fn charge_value(charge: Charge, state: &BasisState) -> Result<f64> {
    charge.value(state)
}

/// Balanced parenthesis words of length `2m` as digit vectors.
fn dyck_words(m: usize, memo: &mut Vec<Vec<Vec<u8>>>) -> Vec<Vec<u8>> {
    while memo.len() <= m {
        let len = memo.len();
        let mut words = Vec::new();
        if len == 0 {
            words.push(Vec::new());
        } else {
            for p in 0..len {
                for inner in memo[p].clone() {
                    for outer in &memo[len - 1 - p] {
                        let mut w = Vec::with_capacity(2 * len);
                        w.push(0);
                        w.extend_from_slice(&inner);
                        w.push(1);
                        w.extend_from_slice(outer);
                        words.push(w);
                    }
                }
            }
        }
        memo.push(words);
    }
    memo[m].clone()
}

/// `N^k` as a sum of projector strings: for every pair of sites `(i, i+2m+1)`
/// the term `P↑_i P↓_{i+2m+1} Σ_w Π_t P^{w_t}_{i+t}` where `w` runs over the
/// balanced words of the enclosed `2m` sites.
pub fn paired_count_operator(n: usize) -> Result<SparseOperator> {
    if n < 2 {
        return Err(Error::ChainTooShort {
            family: "fredkin",
            min: 2,
            sites: n,
        });
    }
    let chain = Chain::spin_half(n);
    let mut memo = Vec::new();
    let interiors: Vec<HashSet<Vec<u8>>> = (0..=n / 2)
        .map(|m| dyck_words(m, &mut memo).into_iter().collect())
        .collect();
    let diag: Vec<f64> = chain
        .states()
        .map(|s| {
            let d = s.digits();
            let mut count = 0usize;
            for i in 1..n {
                for m in 0..=(n - 1 - i) / 2 {
                    let j = i + 2 * m + 1;
                    if d[i - 1] == 0 && d[j - 1] == 1 && interiors[m].contains(&d[i..j - 1]) {
                        count += 1;
                    }
                }
            }
            count as f64
        })
        .collect();
    Ok(SparseOperator::from_diagonal(&diag))
}

/// The product-of-projectors expression for `N^k` with exclusion factors
/// `Π_j (1 − P↑_i P↓_{i+2j+1})(1 − P↑_{i+2(m−j)} P↓_{i+2m+1})`.
///
/// Agrees with parenthesis matching for `N ≤ 5` only; `((()))` is the first
/// configuration it undercounts.
pub fn paired_count_product_form(n: usize) -> Vec<f64> {
    let chain = Chain::spin_half(n);
    chain
        .states()
        .map(|s| {
            let up = |i: usize| if s.digit(i) == 0 { 1.0 } else { 0.0 };
            let down = |i: usize| 1.0 - up(i);
            let mut total = 0.0;
            for i in 1..n {
                for m in 0..=(n - 1 - i) / 2 {
                    let mut t = up(i) * down(i + 2 * m + 1);
                    for j in 0..m {
                        t *= (1.0 - up(i) * down(i + 2 * j + 1))
                            * (1.0 - up(i + 2 * (m - j)) * down(i + 2 * m + 1));
                    }
                    total += t;
                }
            }
            total
        })
        .collect()
}

/// `N^b = Σ P↑ − N^k`.
pub fn unpaired_left_operator(n: usize) -> Result<SparseOperator> {
    let chain = Chain::spin_half(n);
    let ups: Vec<f64> = chain
        .states()
        .map(|s| s.digits().iter().filter(|&&d| d == 0).count() as f64)
        .collect();
    SparseOperator::from_diagonal(&ups).sub(&paired_count_operator(n)?)
}

/// `N^a = Σ P↓ − N^k`.
pub fn unpaired_right_operator(n: usize) -> Result<SparseOperator> {
    let chain = Chain::spin_half(n);
    let downs: Vec<f64> = chain
        .states()
        .map(|s| s.digits().iter().filter(|&&d| d == 1).count() as f64)
        .collect();
    SparseOperator::from_diagonal(&downs).sub(&paired_count_operator(n)?)
}

pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or(Error::Overflow("binomial"))?
            / (i as u128 + 1);
    }
    Ok(acc)
}

/// Dimension of a Fredkin sector with `k` matched pairs:
/// `C(N, N−k) − C(N, N−k+1)`, independent of `(b, a)`.
pub fn sector_dimension_formula(n: usize, k: usize) -> Result<u128> {
    if 2 * k > n {
        return Err(Error::KOutOfRange { k, sites: n });
    }
    let (n, k) = (n as u64, k as u64);
    let upper = binomial(n, n - k)?;
    let lower = if k == 0 { 0 } else { binomial(n, n - k + 1)? };
    Ok(upper - lower)
}

/// `H̃ = −N^k − ¼((−1)^{N^b} + (−1)^{N^a})`.
pub fn fredkin_heff(label: FredkinLabel) -> f64 {
    let parity = |x: usize| if x % 2 == 0 { 1.0 } else { -1.0 };
    -(label.k as f64) - 0.25 * (parity(label.b) + parity(label.a))
}

/// General-bath effective Hamiltonian with `β_r = log(γ4/γ3)`:
///
/// `H̃ = β_l/(β_l+β_r) N^a + β_r/(β_l+β_r) N^b − ½(3β_l/(β_l+β_r) − 1)(−1)^{N^b}
///      − ½(3β_r/(β_l+β_r) − 1)(−1)^{N^a}`, to be used with `β = (β_l+β_r)/2`.
pub fn fredkin_general_heff(label: FredkinLabel, beta_l: f64, beta_r: f64) -> Result<f64> {
    let total = beta_l + beta_r;
    if total.abs() < 1e-14 {
        return Err(Error::UndefinedTemperature(
            "beta_l + beta_r = 0; use fredkin_bath_potential for the log-weights".into(),
        ));
    }
    let parity = |x: usize| if x % 2 == 0 { 1.0 } else { -1.0 };
    let (wl, wr) = (beta_l / total, beta_r / total);
    Ok(wl * label.a as f64 + wr * label.b as f64
        - 0.5 * (3.0 * wl - 1.0) * parity(label.b)
        - 0.5 * (3.0 * wr - 1.0) * parity(label.a))
}

/// `−log` of the unnormalized Gibbs weight of a Fredkin sector for
/// `β_l = log(γ1/γ2)`, `β_r = log(γ4/γ3)`, valid for even `N` and any sign of
/// `β_l + β_r`: `β_l N^a/2 + β_r N^b/2 − (β_l+β_r)(−1)^{N^a}/4`.
pub fn fredkin_bath_potential(label: FredkinLabel, beta_l: f64, beta_r: f64) -> f64 {
    let parity = if label.a % 2 == 0 { 1.0 } else { -1.0 };
    0.5 * beta_l * label.a as f64 + 0.5 * beta_r * label.b as f64
        - 0.25 * (beta_l + beta_r) * parity
}

/// Diagonal effective Hamiltonian with its inverse temperature: the steady
/// state is predicted to be `∝ exp(−beta · values)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveHamiltonian {
    pub values: Vec<f64>,
    pub beta: f64,
    pub form: &'static str,
}

impl EffectiveHamiltonian {
    /// `beta · values`, the predicted `−log` weight of every basis state up to
    /// a constant.
    pub fn potential(&self) -> Vec<f64> {
        self.values.iter().map(|v| self.beta * v).collect()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Effective Hamiltonian of a model coupled to `bath`.
///
/// σ^z-based ladders step the charge by 2, so the XX family is paired with
/// `β = ½ log(γ1/γ2)`; every other family steps by 1 and uses the plain log
/// rate ratio.
pub fn effective_hamiltonian(spec: &ModelSpec, bath: &Bath) -> Result<EffectiveHamiltonian> {
    spec.validate()?;
    let chain = spec.chain();
    let diag = |charge: Charge, scale: f64| -> Result<Vec<f64>> {
        Ok(charge.diagonal(chain)?.into_iter().map(|v| scale * v).collect())
    };
    match spec.family {
        Family::Xx | Family::Xxz => {
            let ratio = if let Some(rates) = &bath.site_rates {
                let first = rates
                    .first()
                    .ok_or_else(|| Error::MissingRate("site_rates".into()))?;
                let r0 = first.raise / first.lower;
                if rates.iter().any(|r| !close(r.raise / r.lower, r0)) {
                    return Err(Error::UndefinedTemperature(
                        "baths with different rate ratios share one magnetization charge".into(),
                    ));
                }
                r0
            } else {
                bath.rate("gamma1")? / bath.rate("gamma2")?
            };
            Ok(EffectiveHamiltonian {
                values: diag(Charge::Magnetization, -1.0)?,
                beta: 0.5 * ratio.ln(),
                form: "-sz_tot",
            })
        }
        Family::Fredkin => {
            if spec.n % 2 == 1 {
                return Err(Error::OddChain(spec.n));
            }
            if spec.params.boundary_baths != BoundaryBaths::Both {
                return Err(Error::UndefinedTemperature(
                    "a single driven end leaves one steady state per component".into(),
                ));
            }
            let beta_l = bath.beta_left()?;
            let beta_r = bath.beta_right_flipped()?;
            let labels: Vec<FredkinLabel> = chain.states().map(|s| fredkin_label(&s)).collect();
            if close(beta_l, beta_r) {
                Ok(EffectiveHamiltonian {
                    values: labels.iter().map(|&l| fredkin_heff(l)).collect(),
                    beta: beta_l,
                    form: "-Nk-((-1)^Nb+(-1)^Na)/4",
                })
            } else {
                let values = labels
                    .iter()
                    .map(|&l| fredkin_general_heff(l, beta_l, beta_r))
                    .collect::<Result<Vec<_>>>()?;
                Ok(EffectiveHamiltonian {
                    values,
                    beta: 0.5 * (beta_l + beta_r),
                    form: "fredkin-general",
                })
            }
        }
        Family::TjzSpin1 => Ok(EffectiveHamiltonian {
            values: diag(Charge::Magnetization, -1.0)?,
            beta: bath.beta_left()?,
            form: "-sz_tot",
        }),
        Family::PairflipSpin1 => Ok(EffectiveHamiltonian {
            values: diag(Charge::StaggeredMagnetization, 1.0)?,
            beta: bath.beta_left()?,
            form: "sz_staggered",
        }),
        Family::DipoleSpin1 => {
            let beta1 = bath.beta_left()?;
            let beta2 = bath.beta_right()?;
            let dipole = Charge::Dipole.diagonal(chain)?;
            if close(beta1, beta2) {
                Ok(EffectiveHamiltonian {
                    values: dipole.iter().map(|v| -v).collect(),
                    beta: beta2,
                    form: "-dipole",
                })
            } else {
                let mag = Charge::Magnetization.diagonal(chain)?;
                Ok(EffectiveHamiltonian {
                    values: dipole
                        .iter()
                        .zip(&mag)
                        .map(|(p, m)| -(beta2 * p + (beta1 - beta2) * m))
                        .collect(),
                    beta: 1.0,
                    form: "-(beta2*dipole+(beta1-beta2)*sz_tot)",
                })
            }
        }
    }
}

/// Charges whose linear combination is expected to give `log ρ` on sectors.
pub fn gibbs_regressors(spec: &ModelSpec, bath: &Bath) -> Result<Vec<(String, Vec<f64>)>> {
    if spec.family == Family::DipoleSpin1 && !close(bath.beta_left()?, bath.beta_right()?) {
        let chain = spec.chain();
        return Ok(vec![
            ("magnetization".into(), Charge::Magnetization.diagonal(chain)?),
            ("dipole".into(), Charge::Dipole.diagonal(chain)?),
        ]);
    }
    let heff = effective_hamiltonian(spec, bath)?;
    Ok(vec![("heff".into(), heff.values)])
}
