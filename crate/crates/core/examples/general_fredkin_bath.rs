//! Fredkin chain with different temperatures at the two ends. The NESS is
//! still Gibbs, with an effective Hamiltonian that depends on both rates
//! and β = (β_l + β_r)/2.

use nesslab::gibbs::fit_gibbs;
use nesslab::lindblad::{steady_states_dense, Liouvillian};
use nesslab::models::{build_hamiltonian, build_jump_set, Bath, Family, ModelSpec};
use nesslab::sectors::{decompose_sectors, effective_hamiltonian, gibbs_regressors};

fn main() -> nesslab::Result<()> {
    // β_l = ln(γ1/γ2) = ln 3 and β_r = ln(γ4/γ3) = ln 2.
    let bath = Bath::four(1.5, 0.5, 0.5, 1.0);
    for n in [4, 6] {
        let spec = ModelSpec::new(Family::Fredkin, n);
        let h = build_hamiltonian(&spec)?;
        let rho = steady_states_dense(&Liouvillian::new(&h, &build_jump_set(&spec, &bath)?.operators())?)?
            .unique()?
            .clone();
        let decomp = decompose_sectors(&h, spec.chain())?.labeled(Family::Fredkin);
        let heff = effective_hamiltonian(&spec, &bath)?;
        let fit = fit_gibbs(&rho.diagonal(), &decomp, &gibbs_regressors(&spec, &bath)?)?;
        println!(
            "N={n}: β = {:.10}, fitted slope {:.10}, residual {:.1e}",
            heff.beta, fit.slopes[0], fit.max_abs_residual
        );
    }
    Ok(())
}
