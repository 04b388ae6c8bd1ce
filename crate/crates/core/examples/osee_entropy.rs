//! Operator-space entanglement entropy of the Fredkin NESS at every cut.
//! Defaults to N = 6 (dense); pass `8` for the N = 8 chain.

use nesslab::lindblad::{steady_state_evolve, steady_states_dense, EvolveOptions, Liouvillian, DENSE_LIMIT};
use nesslab::models::{build_hamiltonian, build_jump_set, Bath, Family, ModelSpec};
use nesslab::observables::osee_all_cuts;

fn main() -> nesslab::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    let spec = ModelSpec::new(Family::Fredkin, n);
    let bath = Bath::four(1.5, 0.5, 0.5, 1.5);
    let h = build_hamiltonian(&spec)?;
    let liou = Liouvillian::new(&h, &build_jump_set(&spec, &bath)?.operators())?;
    let rho = if liou.dim() <= DENSE_LIMIT {
        steady_states_dense(&liou)?.unique()?.clone()
    } else {
        steady_state_evolve(&liou, None, &EvolveOptions::default())?.rho
    };
    for o in osee_all_cuts(&rho, spec.chain())? {
        let top: Vec<String> = o.spectrum.iter().take(4).map(|p| format!("{p:.4}")).collect();
        println!(
            "cut {}: S = {:.6} (ln), {:.6} (log2), leading p = [{}]",
            o.cut,
            o.entropy,
            o.entropy_log2,
            top.join(", ")
        );
    }
    Ok(())
}
