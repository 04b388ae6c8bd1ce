//! Fits log ρ_ψ of the boundary-driven Fredkin NESS against the effective
//! Hamiltonian. Pass `8` to include the N = 8 chain (evolution solver, ~30 s).

use nesslab::gibbs::fit_gibbs;
use nesslab::lindblad::{steady_state_evolve, steady_states_dense, EvolveOptions, Liouvillian, DENSE_LIMIT};
use nesslab::models::{build_hamiltonian, build_jump_set, Bath, Family, ModelSpec};
use nesslab::sectors::{decompose_sectors, gibbs_regressors};

fn main() -> nesslab::Result<()> {
    let max_n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    let bath = Bath::four(1.5, 0.5, 0.5, 1.5);
    println!("expected slope -ln 3 = {:.12}", -3f64.ln());
    for n in (4..=max_n).step_by(2) {
        let spec = ModelSpec::new(Family::Fredkin, n);
        let h = build_hamiltonian(&spec)?;
        let jumps = build_jump_set(&spec, &bath)?;
        let liou = Liouvillian::new(&h, &jumps.operators())?;
        let rho = if liou.dim() <= DENSE_LIMIT {
            steady_states_dense(&liou)?.unique()?.clone()
        } else {
            steady_state_evolve(&liou, None, &EvolveOptions::default())?.rho
        };
        let decomp = decompose_sectors(&h, spec.chain())?.labeled(Family::Fredkin);
        let fit = fit_gibbs(&rho.diagonal(), &decomp, &gibbs_regressors(&spec, &bath)?)?;
        println!(
            "N={n}: {} sectors, slope {:.12}, max sector residual {:.2e}",
            decomp.len(),
            fit.slopes[0],
            fit.max_abs_residual
        );
        if n == 4 {
            for row in &fit.rows {
                println!("    {:<8} H={:+.2}  log c = {:.6}", row.label, row.regressors[0], row.log_value);
            }
        }
    }
    Ok(())
}
