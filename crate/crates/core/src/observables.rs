//! Full counting statistics of magnetization and operator-space
//! entanglement entropy.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::lindblad::DensityMatrix;
use crate::operator::{Chain, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FcsMethod {
    Direct,
    ClosedForm,
}

impl FcsMethod {
    pub fn name(self) -> &'static str {
        match self {
            FcsMethod::Direct => "direct",
            FcsMethod::ClosedForm => "closed_form",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FcsResult {
    pub alphas: Vec<f64>,
    pub values: Vec<C64>,
    pub method: FcsMethod,
}

impl FcsResult {
    /// Largest `|Re G(α) − Re G(−α)|` and `|Im G(α) + Im G(−α)|` over grid
    /// points whose mirror image is also on the grid.
    pub fn parity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for (i, &a) in self.alphas.iter().enumerate() {
            for (j, &b) in self.alphas.iter().enumerate() {
                if (a + b).abs() <= 1e-14 * a.abs().max(1.0) {
                    let (g, h) = (self.values[i], self.values[j]);
                    err = err.max((g.re - h.re).abs()).max((g.im + h.im).abs());
                }
            }
        }
        err
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|g| g.im.abs()).fold(0.0, f64::max)
    }
}

/// `points` equally spaced values on `[lo, hi]`.
pub fn alpha_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let mut g: Vec<f64> = (0..points)
                .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                .collect();
            // Symmetric grids are exactly symmetric.
            if (lo + hi).abs() <= 1e-15 {
                for i in 0..points / 2 {
                    g[points - 1 - i] = -g[i];
                }
                if points % 2 == 1 {
                    g[points / 2] = 0.0;
                }
            }
            g
        }
    }
}

/// Default grid: 101 points on `[−π/2, π/2]`.
pub fn default_alpha_grid() -> Vec<f64> {
    let h = std::f64::consts::FRAC_PI_2;
    alpha_grid(-h, h, 101)
}

/// `G(α) = Σ_s e^{−βH̃(s) + iαS^z(s)} / Σ_s e^{−βH̃(s)}` by direct summation.
pub fn fcs_direct(heff: &[f64], sz: &[f64], beta: f64, alphas: &[f64]) -> Result<FcsResult> {
    if heff.len() != sz.len() {
        return Err(Error::DimensionMismatch {
            expected: heff.len(),
            found: sz.len(),
        });
    }
    let shift = heff.iter().map(|h| -beta * h).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = heff.iter().map(|h| (-beta * h - shift).exp()).collect();
    let z: f64 = weights.iter().sum();
    let values = alphas
        .par_iter()
        .map(|&a| {
            let mut acc = C64::new(0.0, 0.0);
            for (w, s) in weights.iter().zip(sz) {
                acc += C64::from_polar(*w, a * s);
            }
            acc / z
        })
        .collect();
    Ok(FcsResult {
        alphas: alphas.to_vec(),
        values,
        method: FcsMethod::Direct,
    })
}

/// `log D_N(k)` for a Fredkin sector with `k = N/2 − j` matched pairs,
/// using `D_N = (2j+1)/(N+1) · C(N+1, N/2−j)`.
fn log_sector_dim(n: usize, j: usize) -> f64 {
    let half = n / 2;
    ((2 * j + 1) as f64 / (n + 1) as f64).ln() + ln_binomial((n + 1) as u64, (half - j) as u64)
}

/// Closed-form FCS of the boundary-driven Fredkin chain with
/// `β_l = log(γ1/γ2)` and `β_r = log(γ4/γ3)`.
///
/// Sectors `(N/2−j, 2m, 2j−2m)` carry log-weight `−β_l(j−m) − β_r m` and
/// sectors `(N/2−j−1, 2m+1, 2j−2m+1)` carry `−β_l(j−m+1) − β_r(m+1)`, both with
/// magnetization `4m − 2j`. For `β_l = β_r` the inner sum collapses to the
/// kernel `sin(2α(j+1)) / sin(2α)`.
pub fn fcs_closed_form(n: usize, beta_l: f64, beta_r: f64, alphas: &[f64]) -> Result<FcsResult> {
    if n % 2 == 1 {
        return Err(Error::OddChain(n));
    }
    if n == 0 {
        return Err(Error::InvalidInput("chain length must be positive".into()));
    }
    let half = n / 2;
    let symmetric = (beta_l - beta_r).abs() <= 1e-14 * beta_l.abs().max(1.0);
    let values: Vec<C64> = if symmetric {
        let beta = beta_l;
        // even-parity and odd-parity coefficients of U_j(cos 2α)
        let mut logs: Vec<f64> = (0..=half).map(|j| log_sector_dim(n, j) - beta * j as f64).collect();
        let odd: Vec<f64> = (0..half)
            .map(|j| log_sector_dim(n, j + 1) - beta * (j + 2) as f64)
            .collect();
        let shift = logs.iter().chain(&odd).copied().fold(f64::NEG_INFINITY, f64::max);
        for l in &mut logs {
            *l -= shift;
        }
        let coef: Vec<f64> = (0..=half)
            .map(|j| logs[j].exp() + odd.get(j).map_or(0.0, |o| (o - shift).exp()))
            .collect();
        let eval = |a: f64| -> f64 {
            let x = (2.0 * a).cos();
            let (mut u_prev, mut u) = (0.0, 1.0);
            let mut acc = 0.0;
            for c in &coef {
                acc += c * u;
                let next = 2.0 * x * u - u_prev;
                u_prev = u;
                u = next;
            }
            acc
        };
        let norm = eval(0.0);
        alphas.par_iter().map(|&a| C64::new(eval(a) / norm, 0.0)).collect()
    } else {
        let mut terms: Vec<(f64, f64)> = Vec::new(); // (log weight, magnetization)
        for j in 0..=half {
            let ld = log_sector_dim(n, j);
            for m in 0..=j {
                let lw = ld - beta_l * (j - m) as f64 - beta_r * m as f64;
                terms.push((lw, 4.0 * m as f64 - 2.0 * j as f64));
            }
        }
        for j in 0..half {
            let ld = log_sector_dim(n, j + 1);
            for m in 0..=j {
                let lw = ld - beta_l * (j - m + 1) as f64 - beta_r * (m + 1) as f64;
                terms.push((lw, 4.0 * m as f64 - 2.0 * j as f64));
            }
        }
        let shift = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<(f64, f64)> = terms.iter().map(|&(l, s)| ((l - shift).exp(), s)).collect();
        let norm: f64 = weights.iter().map(|w| w.0).sum();
        alphas
            .par_iter()
            .map(|&a| {
                let mut acc = C64::new(0.0, 0.0);
                for &(w, s) in &weights {
                    acc += C64::from_polar(w, a * s);
                }
                acc / norm
            })
            .collect()
    };
    Ok(FcsResult {
        alphas: alphas.to_vec(),
        values,
        method: FcsMethod::ClosedForm,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OseeResult {
    pub cut: usize,
    /// Normalized Schmidt coefficients `p_i`, descending, `Σ p_i² = 1`.
    pub spectrum: Vec<f64>,
    /// `−Σ p² ln p²`.
    pub entropy: f64,
    /// Same entropy in bits.
    pub entropy_log2: f64,
}

/// Operator-space entanglement entropy of `ρ` across the bond after site
/// `cut` (sites `1..=cut` form subsystem A).
pub fn osee(rho: &DensityMatrix, chain: Chain, cut: usize) -> Result<OseeResult> {
    if rho.dim() != chain.dim() {
        return Err(Error::DimensionMismatch {
            expected: chain.dim(),
            found: rho.dim(),
        });
    }
    let n = chain.sites();
    if cut == 0 || cut >= n {
        return Err(Error::SiteOutOfRange { site: cut, sites: n });
    }
    let d = chain.local_dim();
    let da = d.pow(cut as u32);
    let db = d.pow((n - cut) as u32);
    let m = rho.matrix();
    let reshaped = DMatrix::from_fn(da * da, db * db, |r, c| {
        let (ia, ja) = (r / da, r % da);
        let (ib, jb) = (c / db, c % db);
        m[(ia * db + ib, ja * db + jb)]
    });
    let sv = reshaped.singular_values();
    let norm = sv.norm();
    if norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let mut spectrum: Vec<f64> = sv.iter().map(|s| s / norm).collect();
    spectrum.sort_by(|a, b| b.total_cmp(a));
    let mut entropy = 0.0;
    for p in &spectrum {
        let q = p * p;
        if q > 0.0 {
            entropy -= q * q.ln();
        }
    }
    Ok(OseeResult {
        cut,
        spectrum,
        entropy,
        entropy_log2: entropy / std::f64::consts::LN_2,
    })
}

/// Entropies for every cut `1..N`.
pub fn osee_all_cuts(rho: &DensityMatrix, chain: Chain) -> Result<Vec<OseeResult>> {
    (1..chain.sites()).map(|c| osee(rho, chain, c)).collect()
}
