//! Pegg–Barnett phase distribution P(θ) = (2π)⁻¹ Σ_{m,n} ρ_{nm} e^{i(m−n)θ}.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::FockDensityMatrix;
use crate::error::{Result, SdmError};
use crate::wigner::fmt_f64;

/// Dips below this are reported as truncation artifacts.
pub const NEGATIVITY_LIMIT: f64 = -1e-6;
const IMAG_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDistribution {
    /// Uniform grid on [−π, π).
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
}

impl PhaseDistribution {
    pub fn step(&self) -> f64 {
        2.0 * PI / self.thetas.len() as f64
    }

    /// Rectangle rule, exact for the trigonometric polynomial P.
    pub fn norm(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step()
    }

    /// Indices of strict local maxima on the periodic grid.
    pub fn local_maxima(&self) -> Vec<usize> {
        let n = self.values.len();
        (0..n)
            .filter(|&i| {
                let v = self.values[i];
                v > self.values[(i + n - 1) % n] && v > self.values[(i + 1) % n]
            })
            .collect()
    }

    /// Largest |P(θ) − P(−θ)| over grid points whose mirror is on the grid.
    pub fn mirror_defect(&self) -> f64 {
        let n = self.values.len();
        (1..n).map(|i| (self.values[i] - self.values[n - i]).abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,p\n");
        for (t, p) in self.thetas.iter().zip(&self.values) {
            out.push_str(&format!("{},{}\n", fmt_f64(*t), fmt_f64(*p)));
        }
        out
    }
}

/// Samples P(θ) at θ_j = −π + 2πj/n_theta.
pub fn pegg_barnett(rho: &FockDensityMatrix, n_theta: usize) -> Result<PhaseDistribution> {
    if n_theta < 64 {
        return Err(SdmError::InvalidParams {
            name: "n_theta",
            reason: format!("need at least 64 phase samples, got {n_theta}"),
        });
    }
    let dim = rho.dim();
    // c_d = Σ_n ρ_{n,n+d}, the coefficient of e^{idθ}
    let coeffs: Vec<Complex64> = (0..dim)
        .map(|d| (0..dim - d).map(|n| rho.data[(n, n + d)]).sum())
        .collect();
    let thetas: Vec<f64> = (0..n_theta).map(|j| -PI + 2.0 * PI * j as f64 / n_theta as f64).collect();
    let mut values = Vec::with_capacity(n_theta);
    let mut worst_imag: f64 = 0.0;
    for &th in &thetas {
        let mut v = coeffs[0];
        for (d, cd) in coeffs.iter().enumerate().skip(1) {
            let e = Complex64::from_polar(1.0, d as f64 * th);
            // term d and its Hermitian partner −d
            let lower: Complex64 = (0..dim - d).map(|n| rho.data[(n + d, n)]).sum();
            v += cd * e + lower * e.conj();
        }
        worst_imag = worst_imag.max(v.im.abs());
        values.push(v.re / (2.0 * PI));
    }
    if worst_imag / (2.0 * PI) > IMAG_LIMIT {
        return Err(SdmError::NonReal(worst_imag / (2.0 * PI)));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < NEGATIVITY_LIMIT {
        return Err(SdmError::NegativePhaseDensity(min));
    }
    Ok(PhaseDistribution { thetas, values })
}
