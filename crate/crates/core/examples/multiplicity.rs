//! Cases with more than one steady state: the Fredkin chain driven at one
//! end only, and the spin-1 t-Jz chain with bond dissipators, whose extra
//! direction is the frozen all-vacancy state.

use nesslab::gibbs::{build_sector_graph, check_dag_consistency};
use nesslab::lindblad::{steady_states_dense, Liouvillian};
use nesslab::models::{build_hamiltonian, build_jump_set, Bath, BoundaryBaths, Family, ModelSpec, TjzJumps};
use nesslab::sectors::decompose_sectors;

fn report(name: &str, spec: &ModelSpec, bath: &Bath) -> nesslab::Result<()> {
    let h = build_hamiltonian(spec)?;
    let jumps = build_jump_set(spec, bath)?;
    let ss = steady_states_dense(&Liouvillian::new(&h, &jumps.operators())?)?;
    let decomp = decompose_sectors(&h, spec.chain())?.labeled(spec.family);
    let c = check_dag_consistency(&build_sector_graph(&decomp, &jumps)?);
    println!(
        "{name}: null_dim {}, gap ratio {:.1e}, sector-graph components {}",
        ss.null_dim, ss.gap_ratio, c.components
    );
    for (i, s) in ss.states.iter().enumerate() {
        let chain = spec.chain();
        let support: Vec<String> = s
            .rho
            .diagonal()
            .iter()
            .enumerate()
            .filter(|(_, w)| w.abs() > 1e-9)
            .take(6)
            .map(|(j, w)| format!("{}:{w:.3}", chain.state(j)))
            .collect();
        println!("    state {i}: trace {:.3}, support {}", s.rho.trace().re, support.join(" "));
    }
    Ok(())
}

fn main() -> nesslab::Result<()> {
    let bath = Bath::four(1.5, 0.5, 0.5, 1.5);
    report("fredkin N=4, both ends", &ModelSpec::new(Family::Fredkin, 4), &bath)?;
    let mut left = ModelSpec::new(Family::Fredkin, 4);
    left.params.boundary_baths = BoundaryBaths::Left;
    report("fredkin N=4, left end", &left, &bath)?;
    let mut tjz = ModelSpec::new(Family::TjzSpin1, 3);
    tjz.params.tjz_jumps = TjzJumps::Dis2;
    report("t-Jz N=3, bond dissipators", &tjz, &Bath::pair(1.5, 0.5))?;
    Ok(())
}
