//! Spin-1 chains with Abelian commutants: t-Jz, pair-flip and dipole
//! conserving. Each NESS is fitted against its effective Hamiltonian and
//! checked for quantum detailed balance.

use nesslab::gibbs::{fit_gibbs, verify_qdbc};
use nesslab::lindblad::{steady_states_dense, Liouvillian};
use nesslab::models::{build_hamiltonian, build_jump_set, Bath, Family, ModelSpec};
use nesslab::sectors::{decompose_sectors, effective_hamiltonian, gibbs_regressors};

fn main() -> nesslab::Result<()> {
    let cases = [
        ("t-Jz", Family::TjzSpin1, Bath::pair(1.5, 0.5)),
        ("pair-flip", Family::PairflipSpin1, Bath::pair(1.5, 0.5)),
        ("dipole, matched rates", Family::DipoleSpin1, Bath::four(1.5, 0.5, 0.9, 0.3)),
        ("dipole, general rates", Family::DipoleSpin1, Bath::four(1.5, 0.5, 1.0, 0.5)),
    ];
    for (name, family, bath) in cases {
        let spec = ModelSpec::new(family, 3);
        let h = build_hamiltonian(&spec)?;
        let jumps = build_jump_set(&spec, &bath)?;
        let rho = steady_states_dense(&Liouvillian::new(&h, &jumps.operators())?)?.unique()?.clone();
        let decomp = decompose_sectors(&h, spec.chain())?.labeled(family);
        let fit = fit_gibbs(&rho.diagonal(), &decomp, &gibbs_regressors(&spec, &bath)?)?;
        let heff = effective_hamiltonian(&spec, &bath)?;
        let q = verify_qdbc(&rho, &h, &jumps)?;
        println!(
            "{name}: H̃ = {}, β = {:.4}, {} sectors; fit {:?} = {:?}, residual {:.1e}; qDBC residual {:.1e}",
            heff.form,
            heff.beta,
            decomp.len(),
            fit.names,
            fit.slopes.iter().map(|s| format!("{s:.6}")).collect::<Vec<_>>(),
            fit.max_abs_residual,
            q.max_residual()
        );
    }
    Ok(())
}
