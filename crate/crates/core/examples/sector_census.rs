//! Krylov sectors of the Fredkin chain: sizes from enumeration against the
//! ballot-number formula, and the paired-parenthesis count operator.

use nesslab::models::{build_hamiltonian, Family, ModelSpec};
use nesslab::operator::Chain;
use nesslab::sectors::{decompose_sectors, fredkin_label, paired_count_operator, sector_dimension_formula, SectorLabel};

fn main() -> nesslab::Result<()> {
    for n in [4, 6, 8, 10] {
        let spec = ModelSpec::new(Family::Fredkin, n);
        let decomp = decompose_sectors(&build_hamiltonian(&spec)?, spec.chain())?.labeled(Family::Fredkin);
        let mut by_k = std::collections::BTreeMap::new();
        for s in decomp.sectors() {
            if let SectorLabel::Fredkin(l) = &s.label {
                by_k.entry(l.k).or_insert_with(Vec::new).push(s.dim());
            }
        }
        println!("N={n}: {} sectors", decomp.len());
        for (k, dims) in by_k {
            println!(
                "    k={k}: {} sectors of size {:?}, formula {}",
                dims.len(),
                dims.iter().collect::<std::collections::BTreeSet<_>>(),
                sector_dimension_formula(n, k)?
            );
        }
    }
    let n = 6;
    let op = paired_count_operator(n)?;
    let chain = Chain::spin_half(n);
    let mismatches = chain
        .states()
        .filter(|s| (op.diagonal()[s.index()].re - fredkin_label(s).k as f64).abs() > 1e-12)
        .count();
    println!("N^k at N={n}: diagonal = {}, mismatches vs matching: {mismatches}", op.is_diagonal());
    Ok(())
}
