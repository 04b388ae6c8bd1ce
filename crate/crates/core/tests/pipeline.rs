//! Cross-module properties: model → Liouvillian → steady state → sectors →
//! Gibbs structure.

use nesslab::gibbs::{build_sector_graph, check_dag_consistency, fit_gibbs, predict_gibbs, verify_qdbc};
use nesslab::lindblad::{steady_states_dense, DensityMatrix, Liouvillian};
use nesslab::models::{build_hamiltonian, build_jump_set, Bath, Family, ModelSpec};
use nesslab::observables::osee;
use nesslab::sectors::{decompose_sectors, effective_hamiltonian, gibbs_regressors};
use proptest::prelude::*;

fn ness(spec: &ModelSpec, bath: &Bath) -> (DensityMatrix, nesslab::sectors::SectorDecomposition, nesslab::models::JumpSet) {
    let h = build_hamiltonian(spec).unwrap();
    let jumps = build_jump_set(spec, bath).unwrap();
    let rho = steady_states_dense(&Liouvillian::new(&h, &jumps.operators()).unwrap())
        .unwrap()
        .unique()
        .unwrap()
        .clone();
    let decomp = decompose_sectors(&h, spec.chain()).unwrap().labeled(spec.family);
    (rho, decomp, jumps)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fredkin_slope_tracks_rate_ratio(g1 in 0.2f64..3.0, g2 in 0.2f64..3.0, scale in 0.3f64..2.0) {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let bath = Bath::four(g1, g2, scale * g2, scale * g1);
        let (rho, decomp, _) = ness(&spec, &bath);
        let fit = fit_gibbs(&rho.diagonal(), &decomp, &gibbs_regressors(&spec, &bath).unwrap()).unwrap();
        prop_assert!((fit.slopes[0] + (g1 / g2).ln()).abs() < 1e-8);
        prop_assert!(fit.max_abs_residual < 1e-8);
    }

    #[test]
    fn sector_graph_predicts_the_ness(g1 in 0.2f64..3.0, g2 in 0.2f64..3.0, g3 in 0.2f64..3.0, g4 in 0.2f64..3.0) {
        let spec = ModelSpec::new(Family::Fredkin, 4);
        let bath = Bath::four(g1, g2, g3, g4);
        let (rho, decomp, jumps) = ness(&spec, &bath);
        let c = check_dag_consistency(&build_sector_graph(&decomp, &jumps).unwrap());
        prop_assert!(c.consistent);
        let predicted = predict_gibbs(&decomp, &c).unwrap();
        prop_assert!(rho.trace_distance(&predicted).unwrap() < 1e-9);
    }

    #[test]
    fn dipole_qdbc_with_random_rates(g1 in 0.3f64..2.0, g2 in 0.3f64..2.0, g3 in 0.3f64..2.0, g4 in 0.3f64..2.0) {
        let spec = ModelSpec::new(Family::DipoleSpin1, 3);
        let bath = Bath::four(g1, g2, g3, g4);
        let h = build_hamiltonian(&spec).unwrap();
        let (rho, _, jumps) = ness(&spec, &bath);
        let q = verify_qdbc(&rho, &h, &jumps).unwrap();
        prop_assert!(q.commutator_norm < 1e-8 && q.max_residual() < 1e-8);
        let heff = effective_hamiltonian(&spec, &bath).unwrap();
        let pot = heff.potential();
        let logs: Vec<f64> = rho.diagonal().iter().zip(&pot).map(|(d, p)| d.ln() + p).collect();
        let spread = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - logs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(spread < 1e-7, "spread {}", spread);
    }

    #[test]
    fn xx_ness_has_no_operator_entanglement(g1 in 0.2f64..3.0, g2 in 0.2f64..3.0, n in 2usize..5) {
        let spec = ModelSpec::new(Family::Xx, n);
        let (rho, _, _) = ness(&spec, &Bath::pair(g1, g2));
        for cut in 1..n {
            prop_assert!(osee(&rho, spec.chain(), cut).unwrap().entropy < 1e-10);
        }
    }
}

#[test]
fn fredkin_osee_is_reflection_symmetric() {
    let spec = ModelSpec::new(Family::Fredkin, 6);
    let (rho, _, _) = ness(&spec, &Bath::four(1.5, 0.5, 0.5, 1.5));
    for cut in 1..3 {
        let a = osee(&rho, spec.chain(), cut).unwrap().entropy;
        let b = osee(&rho, spec.chain(), 6 - cut).unwrap().entropy;
        assert!((a - b).abs() < 1e-10, "{cut}: {a} {b}");
    }
}
