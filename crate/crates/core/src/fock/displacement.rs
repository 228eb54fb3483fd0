//! Number-basis matrix elements of D(α) from the associated-Laguerre closed
//! form:
//!
//! ⟨m|D(α)|n⟩ = √(n!/m!) α^{m−n} e^{−|α|²/2} L_n^{(m−n)}(|α|²),  m ≥ n,
//! ⟨m|D(α)|n⟩ = √(m!/n!) (−α*)^{n−m} e^{−|α|²/2} L_m^{(n−m)}(|α|²),  m < n.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SdmError};

/// Unitarity tolerance on the audited block.
pub const UNITARITY_TOLERANCE: f64 = 1e-8;

pub(crate) fn log_factorials(n: usize) -> Vec<f64> {
    let mut lf = vec![0.0; n + 1];
    for k in 1..=n {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    lf
}

/// The `rows × cols` upper-left block of D(α), exact for every entry.
pub fn displacement_block(alpha: Complex64, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let mut d = DMatrix::<Complex64>::zeros(rows, cols);
    let x = alpha.norm_sqr();
    if x == 0.0 {
        for i in 0..rows.min(cols) {
            d[(i, i)] = Complex64::new(1.0, 0.0);
        }
        return d;
    }
    let lf = log_factorials(rows.max(cols));
    let ln_abs = 0.5 * x.ln();
    let arg = alpha.arg();
    let span = rows.max(cols);
    for k in 0..span {
        // L_j^{(k)}(x) by forward recurrence in j
        let kf = k as f64;
        let (mut l_prev, mut l) = (0.0, 1.0);
        let jmax = if k < rows { cols.min(rows - k) } else { 0 };
        let jmax_upper = if k > 0 && k < cols { rows.min(cols - k) } else { 0 };
        let jend = jmax.max(jmax_upper);
        let below = Complex64::from_polar(1.0, kf * arg);
        let above = Complex64::from_polar(if k % 2 == 0 { 1.0 } else { -1.0 }, -kf * arg);
        for j in 0..jend {
            if j > 0 {
                let jf = (j - 1) as f64;
                let next = ((2.0 * jf + 1.0 + kf - x) * l - (jf + kf) * l_prev) / (jf + 1.0);
                l_prev = l;
                l = next;
            }
            let mag = (0.5 * (lf[j] - lf[j + k]) + kf * ln_abs - 0.5 * x).exp() * l;
            if j < jmax {
                d[(j + k, j)] = below * mag;
            }
            if j < jmax_upper {
                d[(j, j + k)] = above * mag;
            }
        }
    }
    d
}

/// Padded size large enough that the first `cols` columns of D(α) keep all
/// but a negligible part of their norm.
pub fn padded_dimension(alpha: Complex64, cols: usize) -> usize {
    let a = alpha.norm();
    let n = cols as f64;
    (n + a * a + 12.0 * a * (2.0 * n + 1.0).sqrt() + 20.0).ceil() as usize
}

/// Largest |(D†D − 1)_{ij}| over the lower `block` columns, with D evaluated
/// on a padded basis so that the check probes the closed form itself.
pub fn unitarity_defect(alpha: Complex64, block: usize) -> f64 {
    let rows = padded_dimension(alpha, block);
    let d = displacement_block(alpha, rows, block);
    let g = d.adjoint() * &d;
    let mut worst: f64 = 0.0;
    for i in 0..block {
        for j in 0..block {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// D(α) truncated to `dim` levels, after auditing unitarity on the lower
/// 80% block.
pub fn displacement_matrix(alpha: Complex64, dim: usize) -> Result<DMatrix<Complex64>> {
    if dim < 2 {
        return Err(SdmError::InvalidParams {
            name: "dim",
            reason: format!("Fock dimension must be at least 2, got {dim}"),
        });
    }
    let block = ((0.8 * dim as f64).floor() as usize).max(1);
    let defect = unitarity_defect(alpha, block);
    if !(defect < UNITARITY_TOLERANCE) {
        return Err(SdmError::Truncation(format!(
            "D({alpha}) fails the unitarity audit on {block} levels: defect {defect:e}"
        )));
    }
    Ok(displacement_block(alpha, dim, dim))
}

/// Fock amplitudes e^{−|α|²/2} α^n/√(n!) of a coherent state.
pub fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Vec<Complex64> {
    let lf = log_factorials(dim);
    let x = alpha.norm_sqr();
    (0..dim)
        .map(|n| {
            if alpha == Complex64::new(0.0, 0.0) {
                return Complex64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0);
            }
            let mag = (n as f64 * alpha.norm().ln() - 0.5 * lf[n] - 0.5 * x).exp();
            Complex64::from_polar(mag, n as f64 * alpha.arg())
        })
        .collect()
}
