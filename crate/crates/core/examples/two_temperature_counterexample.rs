//! Two XX sites coupled to baths at different temperatures: the sector
//! potentials become path dependent and the NESS is not of Gibbs form.

use nesslab::gibbs::{build_sector_graph, check_dag_consistency, fit_gibbs, verify_qdbc};
use nesslab::lindblad::{steady_states_dense, Liouvillian};
use nesslab::models::{build_hamiltonian, build_jump_set, Bath, Family, ModelSpec, SiteRates};
use nesslab::sectors::{decompose_sectors, Charge};

fn main() -> nesslab::Result<()> {
    let spec = ModelSpec::new(Family::Xx, 2);
    let bath = Bath::per_site(vec![
        SiteRates { site: 1, raise: 1.5, lower: 0.5 },
        SiteRates { site: 2, raise: 0.5, lower: 1.5 },
    ]);
    let h = build_hamiltonian(&spec)?;
    let jumps = build_jump_set(&spec, &bath)?;
    let decomp = decompose_sectors(&h, spec.chain())?.labeled(Family::Xx);
    let graph = build_sector_graph(&decomp, &jumps)?;
    let c = check_dag_consistency(&graph);
    println!("consistent: {}", c.consistent);
    if let Some(w) = &c.witness {
        let path = |p: &[usize]| p.iter().map(|&v| graph.labels[v].as_str()).collect::<Vec<_>>().join(" -> ");
        println!("  path A {}  weight {:.6}", path(&w.path_a), w.weight_a);
        println!("  path B {}  weight {:.6}", path(&w.path_b), w.weight_b);
    }
    let rho = steady_states_dense(&Liouvillian::new(&h, &jumps.operators())?)?.unique()?.clone();
    let fit = fit_gibbs(
        &rho.diagonal(),
        &decomp,
        &[("magnetization".into(), Charge::Magnetization.diagonal(spec.chain())?)],
    )?;
    println!("Gibbs fit residual {:.3e}, off-diagonal mass {:.3e}", fit.max_abs_residual, rho.offdiag_mass());
    let q = verify_qdbc(&rho, &h, &jumps)?;
    println!("|[H, ρ]| = {:.3e}, max qDBC residual {:.3e}", q.commutator_norm, q.max_residual());
    Ok(())
}
