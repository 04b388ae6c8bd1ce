//! Builds the weighted sector-transition graph of the Fredkin chain, checks
//! that its potentials are path independent, and prints it as GraphViz DOT.
//!
//! `cargo run --example sector_graph -- 6 > fredkin6.dot && dot -Tpng fredkin6.dot`

use nesslab::gibbs::{build_sector_graph, check_dag_consistency, to_dot};
use nesslab::models::{build_hamiltonian, build_jump_set, Bath, Family, ModelSpec};
use nesslab::sectors::{decompose_sectors, fredkin_heff, SectorLabel};

fn main() -> nesslab::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    let spec = ModelSpec::new(Family::Fredkin, n);
    let bath = Bath::four(1.5, 0.5, 0.5, 1.5);
    let h = build_hamiltonian(&spec)?;
    let decomp = decompose_sectors(&h, spec.chain())?.labeled(Family::Fredkin);
    let graph = build_sector_graph(&decomp, &build_jump_set(&spec, &bath)?)?;
    let c = check_dag_consistency(&graph);
    eprintln!(
        "{} vertices, {} edges, consistent: {}, roots: {:?}",
        graph.vertex_count(),
        graph.edges.len(),
        c.consistent,
        c.roots.iter().map(|&r| &graph.labels[r]).collect::<Vec<_>>()
    );
    // Potentials agree with β·H̃ up to the value at the root.
    let beta = 3f64.ln();
    let root = c.roots[0];
    let heff = |s: usize| match &decomp.sector(s).label {
        SectorLabel::Fredkin(l) => fredkin_heff(*l),
        _ => unreachable!(),
    };
    let dev = (0..graph.vertex_count())
        .map(|s| (c.potentials[s] - beta * (heff(s) - heff(root))).abs())
        .fold(0.0, f64::max);
    eprintln!("max |V − β(H̃ − H̃_root)| = {dev:.1e}");
    print!("{}", to_dot(&graph, Some(&c)));
    Ok(())
}
