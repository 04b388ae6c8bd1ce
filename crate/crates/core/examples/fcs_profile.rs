//! Full counting statistics of the magnetization in the Fredkin NESS at
//! N = 200, compared with the Gaussian e^{−6α²} near α = 0 and e^{−4 sin²α}
//! near α = π/2.

use nesslab::observables::{alpha_grid, fcs_closed_form};

fn main() -> nesslab::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let beta = 3f64.ln();
    let grid = alpha_grid(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, 41);
    let g = fcs_closed_form(n, beta, beta, &grid)?;
    println!("{:>9} {:>14} {:>14} {:>14}", "alpha", "G", "exp(-6a^2)", "exp(-4sin^2a)");
    for (a, v) in g.alphas.iter().zip(&g.values) {
        println!(
            "{a:>9.4} {:>14.6e} {:>14.6e} {:>14.6e}",
            v.re,
            (-6.0 * a * a).exp(),
            (-4.0 * a.sin().powi(2)).exp()
        );
    }
    println!("max |Im G| = {:.1e}, parity error = {:.1e}", g.max_imag(), g.parity_error());
    let general = fcs_closed_form(n, beta, 2f64.ln(), &grid)?;
    println!(
        "general bath (β_l = ln 3, β_r = ln 2): max |Im G| = {:.3e}",
        general.max_imag()
    );
    Ok(())
}
