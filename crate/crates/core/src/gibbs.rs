//! Sector-transition graphs, Gibbs-state prediction and detailed-balance
//! verification.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lindblad::DensityMatrix;
use crate::models::JumpSet;
use crate::operator::{dense_frobenius, SparseOperator, C64, PRUNE_THRESHOLD};
use crate::sectors::SectorDecomposition;

/// Tolerance for agreement of implied log-weights of one jump pair.
const WEIGHT_TOL: f64 = 1e-9;
/// Edges lighter than this do not disqualify a root.
const ROOT_TOL: f64 = 1e-12;
/// Relative tolerance of the potential check.
const POTENTIAL_TOL: f64 = 1e-12;

/// Directed edge along the suppressed direction: `V(target) − V(source) =
/// log_weight ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorEdge {
    pub source: usize,
    pub target: usize,
    /// Index into [`JumpSet::pairs`].
    pub pair: usize,
    /// Label of the jump that performs `source → target`.
    pub jump: String,
    pub log_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorGraph {
    pub labels: Vec<String>,
    pub edges: Vec<SectorEdge>,
    pub roots: Vec<usize>,
}

impl SectorGraph {
    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    /// Edges leaving `v`.
    pub fn outgoing(&self, v: usize) -> impl Iterator<Item = &SectorEdge> {
        self.edges.iter().filter(move |e| e.source == v)
    }
}

fn implied(forward: C64, backward: C64) -> f64 {
    (forward.norm_sqr() / backward.norm_sqr()).ln()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= WEIGHT_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Builds the weighted sector graph induced by the paired jumps.
///
/// For a transition `c → r` under the forward jump `F`, detailed balance
/// with the reverse element `B_{cr}` fixes `V(sector(r)) − V(sector(c)) =
/// −log(|F_rc|² / |B_cr|²)`. A transition without reverse element, a
/// nonzero implied weight inside one sector, or two different weights from
/// one (pair, source sector) is an [`Error::AnsatzViolation`].
pub fn build_sector_graph(decomp: &SectorDecomposition, jumps: &JumpSet) -> Result<SectorGraph> {
    let labels: Vec<String> = decomp.sectors().iter().map(|s| s.label.to_string()).collect();
    let chain = decomp.chain();
    let state_name = |i: usize| chain.state(i).to_string();
    let mut edges = Vec::new();
    for (p, pair) in jumps.pairs.iter().enumerate() {
        let fwd = &jumps.jumps[pair.forward];
        let bwd = &jumps.jumps[pair.backward];
        // (source, target) → delta, plus per-source deltas for the overlap check.
        let mut deltas: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut per_source: BTreeMap<(bool, usize), f64> = BTreeMap::new();
        let mut visit = |op_a: &SparseOperator,
                         op_b: &SparseOperator,
                         name_a: &str,
                         name_b: &str,
                         reversed: bool|
         -> Result<()> {
            for (r, c, v) in op_a.entries() {
                if v.norm() <= PRUNE_THRESHOLD {
                    continue;
                }
                let back = op_b.get(c, r);
                if back.norm() <= PRUNE_THRESHOLD {
                    return Err(Error::AnsatzViolation(format!(
                        "{name_a} maps {} to {} but {name_b} has no reverse element",
                        state_name(c),
                        state_name(r)
                    )));
                }
                let (s, t) = (decomp.sector_of(c), decomp.sector_of(r));
                let delta = -implied(v, back);
                if s == t {
                    if !close(delta, 0.0) {
                        return Err(Error::AnsatzViolation(format!(
                            "{name_a} acts inside sector {} with log-weight {delta:.6e}",
                            labels[s]
                        )));
                    }
                    continue;
                }
                match per_source.get(&(reversed, s)) {
                    Some(&d0) if !close(d0, delta) => {
                        return Err(Error::AnsatzViolation(format!(
                            "{name_a} maps sector {} with log-weights {d0:.6e} and {delta:.6e}",
                            labels[s]
                        )));
                    }
                    _ => {
                        per_source.insert((reversed, s), delta);
                    }
                }
                if !reversed {
                    deltas.insert((s, t), delta);
                }
            }
            Ok(())
        };
        visit(&fwd.operator, &bwd.operator, &fwd.label, &bwd.label, false)?;
        if pair.forward != pair.backward {
            visit(&bwd.operator, &fwd.operator, &bwd.label, &fwd.label, true)?;
        }
        for ((s, t), delta) in deltas {
            if pair.forward == pair.backward && s > t && delta.abs() <= ROOT_TOL {
                // Hermitian jump: the reverse transition is the same edge.
                continue;
            }
            let edge = if delta >= 0.0 {
                SectorEdge {
                    source: s,
                    target: t,
                    pair: p,
                    jump: fwd.label.clone(),
                    log_weight: delta,
                }
            } else {
                SectorEdge {
                    source: t,
                    target: s,
                    pair: p,
                    jump: bwd.label.clone(),
                    log_weight: -delta,
                }
            };
            edges.push(edge);
        }
    }
    edges.sort_by(|a, b| {
        (a.source, a.target, a.pair)
            .cmp(&(b.source, b.target, b.pair))
            .then(a.log_weight.total_cmp(&b.log_weight))
    });
    edges.dedup();
    let mut has_incoming = vec![false; labels.len()];
    for e in &edges {
        if e.log_weight > ROOT_TOL {
            has_incoming[e.target] = true;
        }
    }
    let roots = (0..labels.len()).filter(|&v| !has_incoming[v]).collect();
    Ok(SectorGraph {
        labels,
        edges,
        roots,
    })
}

/// Two walks between the same vertices whose accumulated log-weights differ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub from: usize,
    pub to: usize,
    pub path_a: Vec<usize>,
    pub weight_a: f64,
    pub path_b: Vec<usize>,
    pub weight_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Consistency {
    pub consistent: bool,
    /// `V(ψ)`, zero at the anchor of each weakly connected component.
    pub potentials: Vec<f64>,
    pub roots: Vec<usize>,
    /// Weakly connected component of every vertex.
    pub component: Vec<usize>,
    pub components: usize,
    pub witness: Option<Witness>,
}

/// Assigns potentials by BFS from the smallest root of every weakly
/// connected component and checks every edge against them.
pub fn check_dag_consistency(graph: &SectorGraph) -> Consistency {
    let n = graph.vertex_count();
    // adjacency: (neighbor, signed weight V(nb) − V(v), edge index)
    let mut adj: Vec<Vec<(usize, f64, usize)>> = vec![Vec::new(); n];
    for (k, e) in graph.edges.iter().enumerate() {
        adj[e.source].push((e.target, e.log_weight, k));
        adj[e.target].push((e.source, -e.log_weight, k));
    }
    let mut potentials = vec![f64::NAN; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut component = vec![usize::MAX; n];
    let mut components = 0;
    let is_root: Vec<bool> = {
        let mut r = vec![false; n];
        for &v in &graph.roots {
            r[v] = true;
        }
        r
    };
    let mut anchors = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        // Collect the component first to choose its anchor.
        let mut members = vec![start];
        component[start] = components;
        let mut i = 0;
        while i < members.len() {
            let v = members[i];
            for &(w, _, _) in &adj[v] {
                if component[w] == usize::MAX {
                    component[w] = components;
                    members.push(w);
                }
            }
            i += 1;
        }
        let anchor = members
            .iter()
            .copied()
            .filter(|&v| is_root[v])
            .min()
            .unwrap_or_else(|| *members.iter().min().expect("non-empty"));
        anchors.push(anchor);
        potentials[anchor] = 0.0;
        let mut queue = VecDeque::from([anchor]);
        while let Some(v) = queue.pop_front() {
            for &(w, dw, k) in &adj[v] {
                if potentials[w].is_nan() {
                    potentials[w] = potentials[v] + dw;
                    parent[w] = Some(k);
                    queue.push_back(w);
                }
            }
        }
        components += 1;
    }

    let tree_path = |mut v: usize| -> (Vec<usize>, f64) {
        let mut path = vec![v];
        while let Some(k) = parent[v] {
            let e = &graph.edges[k];
            v = if e.target == v { e.source } else { e.target };
            path.push(v);
        }
        path.reverse();
        let w = potentials[*path.last().expect("non-empty")] - potentials[path[0]];
        (path, w)
    };

    let mut witness = None;
    for (k, e) in graph.edges.iter().enumerate() {
        if parent[e.target] == Some(k) || parent[e.source] == Some(k) {
            continue;
        }
        let lhs = potentials[e.target] - potentials[e.source];
        let scale = potentials[e.target].abs().max(potentials[e.source].abs()).max(1.0);
        if (lhs - e.log_weight).abs() > POTENTIAL_TOL * scale {
            let (mut path_a, _) = tree_path(e.source);
            let weight_a = potentials[e.source] - potentials[path_a[0]] + e.log_weight;
            path_a.push(e.target);
            let (path_b, weight_b) = tree_path(e.target);
            witness = Some(Witness {
                from: path_b[0],
                to: e.target,
                path_a,
                weight_a,
                path_b,
                weight_b,
            });
            break;
        }
    }
    Consistency {
        consistent: witness.is_none(),
        potentials,
        roots: graph.roots.clone(),
        component,
        components,
        witness,
    }
}

fn gibbs_weights(decomp: &SectorDecomposition, potentials: &[f64], keep: impl Fn(usize) -> bool) -> Result<DensityMatrix> {
    let dim = decomp.chain().dim();
    let shift = decomp
        .sectors()
        .iter()
        .filter(|s| keep(s.id))
        .map(|s| -potentials[s.id])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut w = vec![0.0; dim];
    for s in decomp.sectors().iter().filter(|s| keep(s.id)) {
        let x = (-potentials[s.id] - shift).exp();
        for &m in &s.members {
            w[m] = x;
        }
    }
    DensityMatrix::from_weights(&w)
}

/// Diagonal state with weight `e^{−V(ψ)}` on every member of sector `ψ`.
pub fn predict_gibbs(decomp: &SectorDecomposition, consistency: &Consistency) -> Result<DensityMatrix> {
    if !consistency.consistent {
        return Err(Error::Inconsistent);
    }
    if consistency.components > 1 {
        return Err(Error::AnsatzViolation(format!(
            "sector graph has {} weakly connected components; the steady state is not unique",
            consistency.components
        )));
    }
    gibbs_weights(decomp, &consistency.potentials, |_| true)
}

/// Gibbs state supported on one weakly connected component.
pub fn predict_gibbs_component(
    decomp: &SectorDecomposition,
    consistency: &Consistency,
    component: usize,
) -> Result<DensityMatrix> {
    if !consistency.consistent {
        return Err(Error::Inconsistent);
    }
    gibbs_weights(decomp, &consistency.potentials, |s| consistency.component[s] == component)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpBalance {
    pub label: String,
    /// `None` when `ρL = 0`.
    pub lambda: Option<C64>,
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QdbcReport {
    pub commutator_norm: f64,
    pub jumps: Vec<JumpBalance>,
}

impl QdbcReport {
    pub fn max_residual(&self) -> f64 {
        self.jumps
            .iter()
            .filter_map(|j| j.residual)
            .fold(0.0, f64::max)
    }
}

/// Least-squares `λ` in `Lρ ≈ λ ρL` for each jump, with `‖[H, ρ]‖_F`.
pub fn verify_qdbc(rho: &DensityMatrix, h: &SparseOperator, jumps: &JumpSet) -> Result<QdbcReport> {
    let commutator_norm = rho.commutator_norm(h)?;
    let m = rho.matrix();
    let mut out = Vec::with_capacity(jumps.len());
    for j in &jumps.jumps {
        let lr = j.operator.mul_dense(m)?;
        let rl = j.operator.dense_mul(m)?;
        let denom: f64 = rl.iter().map(|x| x.norm_sqr()).sum();
        if denom.sqrt() <= PRUNE_THRESHOLD {
            out.push(JumpBalance {
                label: j.label.clone(),
                lambda: None,
                residual: None,
            });
            continue;
        }
        let num: C64 = rl.iter().zip(lr.iter()).map(|(a, b)| a.conj() * b).sum();
        let lambda = num / denom;
        let diff = dense_frobenius(&(&lr - &rl * lambda));
        let scale = dense_frobenius(&lr);
        out.push(JumpBalance {
            label: j.label.clone(),
            lambda: Some(lambda),
            residual: Some(if scale > 0.0 { diff / scale } else { diff }),
        });
    }
    Ok(QdbcReport {
        commutator_norm,
        jumps: out,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ladder {
    /// Mean of `H̃(r) − H̃(c)` over nonzero `L_rc`.
    pub epsilon: f64,
    /// Largest deviation from `epsilon`.
    pub residual: f64,
}

/// Checks that `L` steps the diagonal `H̃` by a constant.
pub fn ladder_check(heff: &[f64], l: &SparseOperator) -> Result<Ladder> {
    if heff.len() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: heff.len(),
        });
    }
    let steps: Vec<f64> = l
        .entries()
        .filter(|(_, _, v)| v.norm() > PRUNE_THRESHOLD)
        .map(|(r, c, _)| heff[r] - heff[c])
        .collect();
    if steps.is_empty() {
        return Err(Error::ZeroOperator);
    }
    let epsilon = steps.iter().sum::<f64>() / steps.len() as f64;
    let residual = steps.iter().map(|s| (s - epsilon).abs()).fold(0.0, f64::max);
    Ok(Ladder { epsilon, residual })
}

/// States with diagonal weight below this are excluded from fits.
pub const FIT_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitRow {
    pub sector_id: usize,
    pub label: String,
    pub regressors: Vec<f64>,
    pub log_value: f64,
    pub fitted: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GibbsFit {
    pub names: Vec<String>,
    pub slopes: Vec<f64>,
    pub intercept: f64,
    /// Largest sector-level residual of the log sector means.
    pub max_abs_residual: f64,
    /// Largest residual over individual basis states.
    pub max_state_residual: f64,
    pub rank: usize,
    pub rank_deficient: bool,
    pub excluded_states: usize,
    pub rows: Vec<FitRow>,
}

/// Least-squares fit of `log ρ_ψ` (sector means) against the regressors
/// evaluated on each sector representative, plus an intercept.
pub fn fit_gibbs(
    rho_diag: &[f64],
    decomp: &SectorDecomposition,
    regressors: &[(String, Vec<f64>)],
) -> Result<GibbsFit> {
    let dim = decomp.chain().dim();
    if rho_diag.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho_diag.len(),
        });
    }
    for (_, r) in regressors {
        if r.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
    }
    let mut excluded_states = 0;
    let mut used = Vec::new();
    for s in decomp.sectors() {
        let kept: Vec<f64> = s
            .members
            .iter()
            .map(|&m| rho_diag[m])
            .filter(|&v| v >= FIT_FLOOR)
            .collect();
        excluded_states += s.dim() - kept.len();
        if kept.is_empty() {
            continue;
        }
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        used.push((s.id, mean.ln()));
    }
    if used.is_empty() {
        return Err(Error::InvalidInput("no diagonal entry above the fit floor".into()));
    }
    let p = regressors.len() + 1;
    let x = DMatrix::from_fn(used.len(), p, |i, j| {
        if j == regressors.len() {
            1.0
        } else {
            regressors[j].1[decomp.sector(used[i].0).representative()]
        }
    });
    let y = DVector::from_iterator(used.len(), used.iter().map(|u| u.1));
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = 1e-10 * smax.max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let coef = svd
        .solve(&y, eps)
        .map_err(|e| Error::InvalidInput(format!("least squares failed: {e}")))?;
    let fitted = &x * &coef;

    let labels = |id: usize| decomp.sector(id).label.to_string();
    let rows: Vec<FitRow> = used
        .iter()
        .enumerate()
        .map(|(i, &(id, lv))| FitRow {
            sector_id: id,
            label: labels(id),
            regressors: (0..regressors.len()).map(|j| x[(i, j)]).collect(),
            log_value: lv,
            fitted: fitted[i],
            residual: lv - fitted[i],
        })
        .collect();
    let max_abs_residual = rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    let mut max_state_residual: f64 = 0.0;
    for (i, &(id, _)) in used.iter().enumerate() {
        for &m in &decomp.sector(id).members {
            if rho_diag[m] >= FIT_FLOOR {
                max_state_residual = max_state_residual.max((rho_diag[m].ln() - fitted[i]).abs());
            }
        }
    }
    Ok(GibbsFit {
        names: regressors.iter().map(|r| r.0.clone()).collect(),
        slopes: coef.iter().take(regressors.len()).copied().collect(),
        intercept: coef[regressors.len()],
        max_abs_residual,
        max_state_residual,
        rank,
        rank_deficient: rank < p,
        excluded_states,
        rows,
    })
}

/// Largest relative spread `(max − min)/max` of diagonal entries within a
/// sector.
pub fn sector_spread(rho_diag: &[f64], decomp: &SectorDecomposition) -> f64 {
    decomp
        .sectors()
        .iter()
        .map(|s| {
            let vals: Vec<f64> = s.members.iter().map(|&m| rho_diag[m]).collect();
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            if hi > 0.0 {
                (hi - lo) / hi
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// GraphViz rendering; vertex labels carry the potential when available.
pub fn to_dot(graph: &SectorGraph, consistency: Option<&Consistency>) -> String {
    let mut s = String::from("digraph sectors {\n  rankdir=TB;\n  node [shape=box];\n");
    for (v, label) in graph.labels.iter().enumerate() {
        let pot = consistency
            .map(|c| format!("\\nV={:.6}", c.potentials[v]))
            .unwrap_or_default();
        let style = if graph.roots.contains(&v) { ", style=bold" } else { "" };
        let _ = writeln!(s, "  s{v} [label=\"{label}{pot}\"{style}];");
    }
    for e in &graph.edges {
        let _ = writeln!(
            s,
            "  s{} -> s{} [label=\"{} w={:.6}\"];",
            e.source, e.target, e.jump, e.log_weight
        );
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{steady_states_dense, Liouvillian};
    use crate::models::{build_hamiltonian, build_jump_set, Bath, Family, JumpPair, ModelSpec, SiteRates};
    use crate::operator::{embed_local, spin, BasisState, Chain};
    use crate::sectors::{decompose_sectors, effective_hamiltonian, fredkin_heff, fredkin_label, Charge};

    fn setup(spec: &ModelSpec, bath: &Bath) -> (SectorDecomposition, JumpSet) {
        let h = build_hamiltonian(spec).unwrap();
        let d = decompose_sectors(&h, spec.chain()).unwrap().labeled(spec.family);
        (d, build_jump_set(spec, bath).unwrap())
    }

    fn sector_by_label(d: &SectorDecomposition, s: &str) -> usize {
        d.sectors().iter().find(|x| x.label.to_string() == s).unwrap().id
    }

    #[test]
    fn fredkin_four_root_edges() {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let (d, jumps) = setup(&spec, &Bath::four(1.5, 0.5, 0.5, 1.5));
        let g = build_sector_graph(&d, &jumps).unwrap();
        let root = sector_by_label(&d, "(2,0,0)");
        assert_eq!(g.roots, vec![root]);
        let mut out: Vec<(String, String, f64)> = g
            .outgoing(root)
            .map(|e| (g.labels[e.target].clone(), e.jump.clone(), e.log_weight))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(out.len(), 2);
        assert_eq!((out[0].0.as_str(), out[0].1.as_str()), ("(1,0,2)", "S-_1"));
        assert_eq!((out[1].0.as_str(), out[1].1.as_str()), ("(1,2,0)", "S+_4"));
        for o in &out {
            assert!((o.2 - 3f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn fredkin_potentials_equal_heff() {
        for n in [4usize, 6] {
            let spec = ModelSpec::new(Family::Fredkin, n);
            let (d, jumps) = setup(&spec, &Bath::four(1.5, 0.5, 0.5, 1.5));
            let g = build_sector_graph(&d, &jumps).unwrap();
            let c = check_dag_consistency(&g);
            assert!(c.consistent);
            let beta = 3f64.ln();
            let heff: Vec<f64> = d
                .sectors()
                .iter()
                .map(|s| beta * fredkin_heff(fredkin_label(&d.chain().state(s.representative()))))
                .collect();
            let shift = heff[0] - c.potentials[0];
            for (v, h) in c.potentials.iter().zip(&heff) {
                assert!((v + shift - h).abs() < 1e-12);
            }
            if n == 6 {
                assert_eq!(g.vertex_count(), 16);
            }
        }
    }

    #[test]
    fn xx_path_graph() {
        let mut spec = ModelSpec::new(Family::Xx, 2);
        spec.params.jump_sites = Some(vec![1]);
        let (d, jumps) = setup(&spec, &Bath::pair(1.5, 0.5));
        let g = build_sector_graph(&d, &jumps).unwrap();
        assert_eq!(g.edges.len(), 2);
        assert_eq!(g.roots, vec![0]);
        assert_eq!((g.edges[0].source, g.edges[0].target), (0, 1));
        assert_eq!((g.edges[1].source, g.edges[1].target), (1, 2));
    }

    #[test]
    fn xx_two_temperatures_inconsistent() {
        let spec = ModelSpec::new(Family::Xx, 2);
        let bath = Bath::per_site(vec![
            SiteRates { site: 1, raise: 1.5, lower: 0.5 },
            SiteRates { site: 2, raise: 0.5, lower: 1.5 },
        ]);
        let (d, jumps) = setup(&spec, &bath);
        let g = build_sector_graph(&d, &jumps).unwrap();
        let c = check_dag_consistency(&g);
        assert!(!c.consistent);
        let w = c.witness.as_ref().unwrap();
        assert_eq!(w.path_a.first(), w.path_b.first());
        assert_eq!(w.path_a.last(), w.path_b.last());
        assert!((w.weight_a - w.weight_b).abs() > 1.0);
        assert!(matches!(predict_gibbs(&d, &c), Err(Error::Inconsistent)));
    }

    #[test]
    fn trivial_graph() {
        let chain = Chain::spin_half(1);
        let h = SparseOperator::identity(2);
        let d = decompose_sectors(&h, chain).unwrap();
        let g = build_sector_graph(&d, &JumpSet::default()).unwrap();
        let c = check_dag_consistency(&g);
        assert!(c.consistent);
        assert_eq!(c.components, 2);
        let one = decompose_sectors(&SparseOperator::from_dense(&spin::half::x()).unwrap(), chain).unwrap();
        let c1 = check_dag_consistency(&build_sector_graph(&one, &JumpSet::default()).unwrap());
        assert_eq!(c1.potentials, vec![0.0]);
    }

    #[test]
    fn unequal_weights_are_ansatz_violation() {
        // One pair whose elements imply log-weights 0 and log 4 out of the
        // same sector.
        let spec = ModelSpec::new(Family::Xx, 2);
        let (d, _) = setup(&spec, &Bath::pair(1.0, 1.0));
        let chain = spec.chain();
        let p1 = embed_local(&spin::half::plus(), 1, chain).unwrap();
        let p2 = embed_local(&spin::half::plus(), 2, chain).unwrap();
        let fwd = p1.add(&p2.scale_real(2.0)).unwrap();
        let bwd = p1.add(&p2).unwrap().adjoint();
        let mut jumps = JumpSet::default();
        for (label, operator) in [("F", fwd), ("B", bwd)] {
            jumps.jumps.push(crate::models::Jump { label: label.into(), rate: 1.0, operator });
        }
        jumps.pairs.push(JumpPair { forward: 0, backward: 1 });
        let res = build_sector_graph(&d, &jumps);
        assert!(matches!(res, Err(Error::AnsatzViolation(_))), "{res:?}");
    }

    #[test]
    fn bulk_fredkin_jump_splits_components() {
        // A bulk σ± pair keeps uniform weights but leaves the graph
        // disconnected, so no unique Gibbs state is predicted.
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let (d, _) = setup(&spec, &Bath::four(1.5, 0.5, 0.5, 1.5));
        let chain = spec.chain();
        let mut jumps = JumpSet::default();
        for (op, rate, label) in [(spin::half::plus(), 1.5, "S+_2"), (spin::half::minus(), 0.5, "S-_2")] {
            jumps.jumps.push(crate::models::Jump {
                label: label.into(),
                rate,
                operator: embed_local(&op, 2, chain).unwrap().scale_real(rate.sqrt()),
            });
        }
        jumps.pairs.push(JumpPair { forward: 0, backward: 1 });
        let c = check_dag_consistency(&build_sector_graph(&d, &jumps).unwrap());
        assert!(c.components > 1);
        assert!(matches!(predict_gibbs(&d, &c), Err(Error::AnsatzViolation(_))));
    }

    #[test]
    fn predict_infinite_temperature() {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let (d, jumps) = setup(&spec, &Bath::four(1.0, 1.0, 1.0, 1.0));
        let c = check_dag_consistency(&build_sector_graph(&d, &jumps).unwrap());
        let rho = predict_gibbs(&d, &c).unwrap();
        for v in rho.diagonal() {
            assert!((v - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn predict_matches_dense_fredkin() {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let bath = Bath::four(1.5, 0.5, 0.5, 1.5);
        let (d, jumps) = setup(&spec, &bath);
        let c = check_dag_consistency(&build_sector_graph(&d, &jumps).unwrap());
        let pred = predict_gibbs(&d, &c).unwrap();
        let h = build_hamiltonian(&spec).unwrap();
        let l = Liouvillian::new(&h, &jumps.operators()).unwrap();
        let ss = steady_states_dense(&l).unwrap();
        assert!(pred.trace_distance(ss.unique().unwrap()).unwrap() < 1e-8);
    }

    #[test]
    fn xx_product_form() {
        let spec = ModelSpec::new(Family::Xx, 4);
        let (d, jumps) = setup(&spec, &Bath::pair(1.5, 0.5));
        let c = check_dag_consistency(&build_sector_graph(&d, &jumps).unwrap());
        let rho = predict_gibbs(&d, &c).unwrap();
        let beta = 0.5 * 3f64.ln();
        for s in d.chain().states() {
            let expect: f64 = (1..=4)
                .map(|i| (beta * s.sz(i)).exp() / (2.0 * beta.cosh()))
                .product();
            assert!((rho.diagonal()[s.index()] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn reversal_negates_potentials() {
        let spec = ModelSpec::new(Family::Fredkin, 6);
        let (d, j1) = setup(&spec, &Bath::four(1.5, 0.5, 0.5, 1.5));
        let (_, j2) = setup(&spec, &Bath::four(0.5, 1.5, 1.5, 0.5));
        let g1 = build_sector_graph(&d, &j1).unwrap();
        let g2 = build_sector_graph(&d, &j2).unwrap();
        let c1 = check_dag_consistency(&g1);
        let c2 = check_dag_consistency(&g2);
        let off = c1.potentials[0] + c2.potentials[0];
        for (a, b) in c1.potentials.iter().zip(&c2.potentials) {
            assert!((a + b - off).abs() < 1e-12);
        }
        // roots of one are sinks of the other
        for &r in &g2.roots {
            assert!(g1.outgoing(r).next().is_none());
        }
    }

    #[test]
    fn swapping_pair_members_reverses_nothing() {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let (d, mut jumps) = setup(&spec, &Bath::four(1.5, 0.5, 0.5, 1.5));
        let g1 = build_sector_graph(&d, &jumps).unwrap();
        for p in &mut jumps.pairs {
            std::mem::swap(&mut p.forward, &mut p.backward);
        }
        let g2 = build_sector_graph(&d, &jumps).unwrap();
        let key = |g: &SectorGraph| {
            let mut v: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.source, e.target)).collect();
            v.sort();
            v
        };
        assert_eq!(key(&g1), key(&g2));
    }

    #[test]
    fn qdbc_xx() {
        let spec = ModelSpec::new(Family::Xx, 3);
        let bath = Bath::pair(1.5, 0.5);
        let (d, jumps) = setup(&spec, &bath);
        let h = build_hamiltonian(&spec).unwrap();
        let c = check_dag_consistency(&build_sector_graph(&d, &jumps).unwrap());
        let rho = predict_gibbs(&d, &c).unwrap();
        let rep = verify_qdbc(&rho, &h, &jumps).unwrap();
        assert!(rep.commutator_norm < 1e-12);
        let heff = effective_hamiltonian(&spec, &bath).unwrap();
        for (jb, j) in rep.jumps.iter().zip(&jumps.jumps) {
            let lam = jb.lambda.unwrap();
            let lad = ladder_check(&heff.values, &j.operator).unwrap();
            assert!((lam.re - (heff.beta * lad.epsilon).exp()).abs() < 1e-12);
            let expect = if j.label.starts_with("S+") { 1.0 / 3.0 } else { 3.0 };
            assert!((lam.re - expect).abs() < 1e-12, "{}", j.label);
            assert!(jb.residual.unwrap() < 1e-12);
        }
    }

    #[test]
    fn qdbc_infinite_temperature() {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let (_, jumps) = setup(&spec, &Bath::four(1.0, 1.0, 1.0, 1.0));
        let h = build_hamiltonian(&spec).unwrap();
        let rep = verify_qdbc(&DensityMatrix::maximally_mixed(16), &h, &jumps).unwrap();
        for j in rep.jumps {
            assert!((j.lambda.unwrap() - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn qdbc_undefined_lambda() {
        let chain = Chain::spin_half(1);
        let rho = DensityMatrix::new(spin::half::up()).unwrap();
        let mut jumps = JumpSet::default();
        jumps.jumps.push(crate::models::Jump {
            label: "S-_1".into(),
            rate: 1.0,
            operator: embed_local(&spin::half::minus(), 1, chain).unwrap(),
        });
        let rep = verify_qdbc(&rho, &SparseOperator::zero(2), &jumps).unwrap();
        assert_eq!(rep.jumps[0].lambda, None);
    }

    #[test]
    fn ladder_examples() {
        let chain = Chain::spin_half(4);
        let mz: Vec<f64> = Charge::Magnetization.diagonal(chain).unwrap().iter().map(|v| -v).collect();
        let sp = embed_local(&spin::half::plus(), 2, chain).unwrap();
        let l = ladder_check(&mz, &sp).unwrap();
        assert_eq!((l.epsilon, l.residual), (-2.0, 0.0));

        let heff: Vec<f64> = chain.states().map(|s| fredkin_heff(fredkin_label(&s))).collect();
        let sm1 = embed_local(&spin::half::minus(), 1, chain).unwrap();
        let l = ladder_check(&heff, &sm1).unwrap();
        assert_eq!((l.epsilon, l.residual), (1.0, 0.0));

        let nk: Vec<f64> = Charge::PairedCount.diagonal(chain).unwrap();
        let l = ladder_check(&nk, &sm1).unwrap();
        assert!(l.residual > 0.0);
        // witness: "((((" → ")(((" keeps N^k = 0 while matched states lose a pair
        let s = BasisState::parse("((((").unwrap();
        let t = BasisState::parse(")(((").unwrap();
        assert_eq!(nk[t.index()] - nk[s.index()], 0.0);

        assert!(matches!(ladder_check(&nk, &SparseOperator::zero(16)), Err(Error::ZeroOperator)));
    }

    #[test]
    fn fit_fredkin_dense() {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let bath = Bath::four(1.5, 0.5, 0.5, 1.5);
        let (d, jumps) = setup(&spec, &bath);
        let h = build_hamiltonian(&spec).unwrap();
        let l = Liouvillian::new(&h, &jumps.operators()).unwrap();
        let ss = steady_states_dense(&l).unwrap();
        let heff = effective_hamiltonian(&spec, &bath).unwrap();
        let fit = fit_gibbs(&ss.unique().unwrap().diagonal(), &d, &[("heff".into(), heff.values)]).unwrap();
        assert!((fit.slopes[0] + 3f64.ln()).abs() < 1e-6);
        assert!(fit.max_abs_residual < 1e-7);
        assert!(!fit.rank_deficient);
    }

    #[test]
    fn fit_flat_and_rank_deficient() {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let (d, _) = setup(&spec, &Bath::four(1.0, 1.0, 1.0, 1.0));
        let flat = vec![1.0 / 16.0; 16];
        let heff: Vec<f64> = d.chain().states().map(|s| fredkin_heff(fredkin_label(&s))).collect();
        let fit = fit_gibbs(&flat, &d, &[("heff".into(), heff.clone())]).unwrap();
        assert!(fit.slopes[0].abs() < 1e-12 && fit.max_abs_residual < 1e-12);
        let twice: Vec<f64> = heff.iter().map(|v| 2.0 * v).collect();
        let fit = fit_gibbs(&flat, &d, &[("a".into(), heff), ("b".into(), twice)]).unwrap();
        assert!(fit.rank_deficient);
    }

    #[test]
    fn dot_output() {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let (d, jumps) = setup(&spec, &Bath::four(1.5, 0.5, 0.5, 1.5));
        let g = build_sector_graph(&d, &jumps).unwrap();
        let c = check_dag_consistency(&g);
        let dot = to_dot(&g, Some(&c));
        assert!(dot.starts_with("digraph"));
        assert_eq!(dot.matches("->").count(), g.edges.len());
    }
}
