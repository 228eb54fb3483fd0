//! Closed-form solution of the micromaser master equation in the
//! characteristic-function picture: steady state, time-dependent propagator
//! and the field statistics derived from them.
//!
//! In gain coordinates (x = −Im β, y = Re β) the steady state is
//!
//! ```text
//! χss(x, y) = exp(−(n̄ + ½)(x² + y²) − 2·N_ex·cin(2|ξ|y))
//! ```
//!
//! where the pumping coefficient 2·N_ex follows from integrating
//! 4N_ex·sin²(|ξ|z)/z from 0 to y. Any initial χ₀ evolves as
//!
//! ```text
//! χ(β, t) = χss(β) · χ₀(βe^{−γt/2}) / χss(βe^{−γt/2}).
//! ```

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charfn::{CharFn, SharedCharFn};
use crate::error::{Result, SdmError};
use crate::params::{PhasePoint, SdmParams};
use crate::special::cin_abs;

/// Stationary characteristic function.
#[derive(Debug, Clone, Copy)]
pub struct SteadyState {
    pub params: SdmParams,
}

impl SteadyState {
    pub fn new(params: SdmParams) -> Self {
        Self { params }
    }

    /// ln χss at gain coordinates (x, y).
    pub fn log_chi_xy(&self, x: f64, y: f64) -> f64 {
        let p = &self.params;
        -(p.nbar + 0.5) * (x * x + y * y) - 2.0 * p.n_ex * cin_abs(2.0 * p.xi_mag * y)
    }

    pub fn log_chi(&self, beta: Complex64) -> f64 {
        let (x, y) = PhasePoint::from(beta).gain_coords();
        self.log_chi_xy(x, y)
    }

    pub fn chi_xy(&self, x: f64, y: f64) -> f64 {
        self.log_chi_xy(x, y).exp()
    }

    /// χss at β = 2ξ·s for real s. This lies on the gain-free axis (y = 0),
    /// where χss reduces to the pure Gaussian exp(−(2n̄ + 1)·2|ξ|²s²).
    pub fn on_displacement_axis(&self, s: f64) -> f64 {
        let p = &self.params;
        (-(2.0 * p.nbar + 1.0) * 2.0 * p.xi_mag * p.xi_mag * s * s).exp()
    }
}

impl CharFn for SteadyState {
    fn eval(&self, beta: Complex64) -> Complex64 {
        Complex64::new(self.log_chi(beta).exp(), 0.0)
    }
    fn support_hint(&self) -> f64 {
        // the Gaussian factor alone reaches 1e-16 by here
        (37.0 / (self.params.nbar + 0.5)).sqrt() + 1.0
    }
}

/// χ_ss(x, y) as a free function of gain coordinates.
pub fn chi_ss(x: f64, y: f64, params: &SdmParams) -> f64 {
    SteadyState::new(*params).chi_xy(x, y)
}

/// χ after evolving an arbitrary initial χ₀ for a time t under the full
/// master equation.
#[derive(Clone)]
pub struct Evolved {
    steady: SteadyState,
    t: f64,
    decay: f64,
    initial: SharedCharFn,
}

impl Evolved {
    pub fn new(initial: SharedCharFn, t: f64, params: SdmParams) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(SdmError::Domain(format!("evolution time must be >= 0, got {t}")));
        }
        Ok(Self {
            steady: SteadyState::new(params),
            t,
            decay: (-0.5 * params.gamma * t).exp(),
            initial,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn params(&self) -> &SdmParams {
        &self.steady.params
    }
}

impl CharFn for Evolved {
    fn eval(&self, beta: Complex64) -> Complex64 {
        let shrunk = beta * self.decay;
        // ratio of steady states taken in log space so that deep Gaussian
        // tails do not produce 0/0
        let log_ratio = self.steady.log_chi(beta) - self.steady.log_chi(shrunk);
        let chi0 = self.initial.eval(shrunk);
        if chi0 == Complex64::new(0.0, 0.0) {
            return chi0;
        }
        chi0 * log_ratio.exp()
    }
    fn support_hint(&self) -> f64 {
        self.initial.support_hint().max(self.steady.support_hint())
    }
}

/// χ(x, y, t) for an initial evaluator.
pub fn chi_t(x: f64, y: f64, t: f64, chi0: SharedCharFn, params: &SdmParams) -> Result<Complex64> {
    let ev = Evolved::new(chi0, t, *params)?;
    Ok(ev.eval(PhasePoint::from_gain_coords(x, y).to_complex()))
}

/// First and second order moments ⟨a⟩, ⟨a†a⟩, ⟨a²⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean_a: Complex64,
    pub mean_n: f64,
    pub mean_a2: Complex64,
}

impl Moments {
    pub fn vacuum() -> Self {
        Self {
            mean_a: Complex64::new(0.0, 0.0),
            mean_n: 0.0,
            mean_a2: Complex64::new(0.0, 0.0),
        }
    }

    pub fn coherent(alpha: Complex64) -> Self {
        Self {
            mean_a: alpha,
            mean_n: alpha.norm_sqr(),
            mean_a2: alpha * alpha,
        }
    }
}

/// Transient first and second moments:
/// ⟨a(t)⟩ = ⟨a(0)⟩e^{−γt/2},
/// ⟨a†a(t)⟩ = ⟨a†a(0)⟩e^{−γt} + (N_ex|ξ|² + n̄)(1 − e^{−γt}),
/// ⟨a²(t)⟩ = ⟨a²(0)⟩e^{−γt} + N_ex·ξ²·(1 − e^{−γt}).
pub fn transient_moments(t: f64, initial: &Moments, params: &SdmParams) -> Moments {
    let e1 = (-params.gamma * t).exp();
    let xi = params.xi();
    Moments {
        mean_a: initial.mean_a * (-0.5 * params.gamma * t).exp(),
        mean_n: initial.mean_n * e1 + params.steady_mean_photons() * (1.0 - e1),
        mean_a2: initial.mean_a2 * e1 + params.n_ex * xi * xi * (1.0 - e1),
    }
}

/// Photon-number and quadrature statistics of a field state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub mean_a: Complex64,
    pub mean_n: f64,
    pub var_n: f64,
    pub var_x1: f64,
    pub var_x2: f64,
    /// Mandel Q = (Δn)²/⟨n⟩ − 1; vanishes for coherent light.
    pub mandel_q: f64,
    /// Fano factor (Δn)²/⟨n⟩ = Q + 1.
    pub fano_f: f64,
}

impl FieldStats {
    /// Assembles the statistics from raw moments. `var_n` is (Δn)².
    pub fn from_moments(moments: &Moments, var_n: f64) -> Self {
        let Moments {
            mean_a,
            mean_n,
            mean_a2,
        } = *moments;
        let x1_sq = 0.25 * (2.0 * mean_a2.re + 2.0 * mean_n + 1.0);
        let x2_sq = 0.25 * (1.0 + 2.0 * mean_n - 2.0 * mean_a2.re);
        let fano = var_n / mean_n;
        Self {
            mean_a,
            mean_n,
            var_n,
            var_x1: x1_sq - mean_a.re * mean_a.re,
            var_x2: x2_sq - mean_a.im * mean_a.im,
            mandel_q: fano - 1.0,
            fano_f: fano,
        }
    }
}

/// Closed-form stationary statistics.
///
/// The Mandel parameter follows from the fourth-order Taylor coefficients of
/// χss: Q = ⟨n⟩ + N_ex|ξ|⁴(N_ex + ½)/⟨n⟩, and the Fano factor is Q + 1.
pub fn steady_stats(params: &SdmParams) -> Result<FieldStats> {
    let mean_n = params.steady_mean_photons();
    if mean_n <= 0.0 {
        return Err(SdmError::DegenerateParams(
            "steady state is the vacuum (n̄ = N_ex·|ξ|² = 0); Mandel Q undefined".into(),
        ));
    }
    let x4 = params.xi_mag.powi(4);
    let q = mean_n + params.n_ex * x4 * (params.n_ex + 0.5) / mean_n;
    let var_n = mean_n * (1.0 + q);
    let xi = params.xi();
    let moments = Moments {
        mean_a: Complex64::new(0.0, 0.0),
        mean_n,
        mean_a2: params.n_ex * xi * xi,
    };
    Ok(FieldStats::from_moments(&moments, var_n))
}

/// Right-hand side of the printed stationary photon-statistics formula,
/// 1 + N_ex|ξ|² + n̄ + N_ex|ξ|⁴(N_ex + ½)/(N_ex|ξ|² + n̄). It equals the Fano
/// factor (Mandel Q + 1), not Q itself.
pub fn printed_q_expression(params: &SdmParams) -> f64 {
    let mean_n = params.steady_mean_photons();
    1.0 + mean_n + params.n_ex * params.xi_mag.powi(4) * (params.n_ex + 0.5) / mean_n
}

// Central-difference stencils (offsets −2..=2) for derivative orders 0..=4,
// each accurate to O(h²).
const STENCILS: [[f64; 5]; 5] = [
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, -0.5, 0.0, 0.5, 0.0],
    [0.0, 1.0, -2.0, 1.0, 0.0],
    [-0.5, 1.0, 0.0, -1.0, 0.5],
    [1.0, -4.0, 6.0, -4.0, 1.0],
];

/// Base finite-difference step for moments of total order ≤ 2. Third and
/// fourth order use a larger step where round-off would otherwise dominate.
pub const MOMENT_STEP: f64 = 1e-3;
const HIGH_ORDER_STEP: f64 = 1e-2;

/// ∂ᵘʲ∂ᵛᵏ χ at β = 0 with β = u + iv.
fn mixed_partial(chi: &dyn CharFn, j: usize, k: usize, h: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, &wa) in STENCILS[j].iter().enumerate() {
        if wa == 0.0 {
            continue;
        }
        for (b, &wb) in STENCILS[k].iter().enumerate() {
            if wb == 0.0 {
                continue;
            }
            let beta = Complex64::new((a as f64 - 2.0) * h, (b as f64 - 2.0) * h);
            acc += wa * wb * chi.eval(beta);
        }
    }
    acc / h.powi((j + k) as i32)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Symmetrically ordered moment ⟨(a†)^m aⁿ⟩_sym = ∂^{m+n}χ/∂β^m∂(−β*)ⁿ at 0,
/// by central differences with one Richardson refinement.
pub fn moment_probe(chi: &dyn CharFn, m: usize, n: usize) -> Result<Complex64> {
    let order = m + n;
    if order > 4 {
        return Err(SdmError::Domain(format!("moment order m+n = {order} exceeds 4")));
    }
    if order == 0 {
        return Ok(chi.eval(Complex64::new(0.0, 0.0)));
    }
    // ∂β = (∂u − i∂v)/2 and ∂(−β*) = −(∂u + i∂v)/2; expand the product into
    // coefficients of ∂u^j ∂v^k.
    let i = Complex64::new(0.0, 1.0);
    let mut coeff = vec![Complex64::new(0.0, 0.0); order + 1]; // indexed by k
    for p in 0..=m {
        for q in 0..=n {
            // (∂u − i∂v)^m picks (−i)^p with ∂v^p, (∂u + i∂v)^n picks i^q with ∂v^q
            let c = binomial(m, p) * binomial(n, q) * (-i).powu(p as u32) * i.powu(q as u32);
            coeff[p + q] += c;
        }
    }
    let prefactor = (-1.0f64).powi(n as i32) / 2f64.powi(order as i32);
    let h = if order <= 2 { MOMENT_STEP } else { HIGH_ORDER_STEP };
    let estimate = |h: f64| -> Complex64 {
        coeff
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(k, c)| c * mixed_partial(chi, order - k, k, h))
            .sum::<Complex64>()
            * prefactor
    };
    let coarse = estimate(h);
    let fine = estimate(0.5 * h);
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Convenience: shared evaluator for the steady state.
pub fn steady_charfn(params: &SdmParams) -> SharedCharFn {
    Arc::new(SteadyState::new(*params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::Vacuum;
    use crate::coherent::CoherentOpSum;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn chi_ss_basic_values() {
        let p = SdmParams::desk();
        assert_eq!(chi_ss(0.0, 0.0, &p), 1.0);
        // no gain along y = 0
        for x in [0.3, 1.0, 2.5] {
            let g = (-(p.nbar + 0.5) * x * x).exp();
            assert!((chi_ss(x, 0.0, &p) - g).abs() < 1e-16);
        }
        // β = 2ξ ⇔ (x, y) = (2|ξ|, 0)
        let v = SteadyState::new(p).eval(2.0 * p.xi());
        assert!((v.re - (-0.6f64).exp()).abs() < 1e-15);
        assert!((v.re - 0.548_81).abs() < 1e-5);
        assert!((SteadyState::new(p).on_displacement_axis(1.0) - v.re).abs() < 1e-15);
    }

    #[test]
    fn chi_ss_symmetries() {
        let p = SdmParams::desk();
        for (x, y) in [(0.3, 0.7), (1.2, -0.4), (-2.0, 1.5)] {
            let v = chi_ss(x, y, &p);
            assert_eq!(v, chi_ss(-x, -y, &p));
            assert_eq!(v, chi_ss(x, -y, &p));
        }
    }

    #[test]
    fn propagator_endpoints() {
        let p = SdmParams::desk();
        let chi0: SharedCharFn = Arc::new(CoherentOpSum::coherent(c(0.4, -0.2)));
        let ss = SteadyState::new(p);
        for beta in [c(0.2, 0.1), c(-0.7, 1.3)] {
            let at0 = Evolved::new(chi0.clone(), 0.0, p).unwrap().eval(beta);
            assert!((at0 - chi0.eval(beta)).norm() < 1e-15);
            // a displaced start relaxes only linearly in e^{-γt/2}
            let late = Evolved::new(chi0.clone(), 40.0, p).unwrap().eval(beta);
            assert!((late - ss.eval(beta)).norm() < 1e-8);
            let vac = Evolved::new(Arc::new(Vacuum), 40.0, p).unwrap().eval(beta);
            assert!((vac - ss.eval(beta)).norm() < 1e-12);
        }
        assert!(Evolved::new(chi0, -1.0, p).is_err());
    }

    #[test]
    fn propagator_is_a_semigroup() {
        let p = SdmParams::desk();
        let chi0: SharedCharFn = Arc::new(Vacuum);
        let first: SharedCharFn = Arc::new(Evolved::new(chi0.clone(), 0.3, p).unwrap());
        let two_step = Evolved::new(first, 0.9, p).unwrap();
        let one_step = Evolved::new(chi0, 1.2, p).unwrap();
        for beta in [c(0.1, 0.2), c(1.0, -0.5), c(-2.0, 0.7)] {
            assert!((two_step.eval(beta) - one_step.eval(beta)).norm() < 1e-12);
        }
    }

    #[test]
    fn real_even_initial_stays_real() {
        let p = SdmParams::desk();
        let ev = Evolved::new(Arc::new(Vacuum), 0.7, p).unwrap();
        for beta in [c(0.1, 0.2), c(1.0, -0.5)] {
            let v = ev.eval(beta);
            assert_eq!(v.im, 0.0);
            assert!((v - ev.eval(-beta)).norm() < 1e-15);
        }
    }

    #[test]
    fn transient_moment_values() {
        let p = SdmParams::desk();
        let m0 = Moments::vacuum();
        assert_eq!(transient_moments(0.0, &m0, &p), m0);
        let late = transient_moments(80.0, &m0, &p);
        assert!((late.mean_n - 0.6).abs() < 1e-12);
        assert!((late.mean_a2 - c(-0.5, 0.0)).norm() < 1e-12);
        let half = transient_moments(2f64.ln(), &m0, &p);
        assert!((half.mean_n - 0.3).abs() < 1e-12);
    }

    #[test]
    fn steady_stats_values() {
        let p = SdmParams::desk();
        let s = steady_stats(&p).unwrap();
        assert!((s.mean_n - 0.6).abs() < 1e-12);
        assert!((s.var_x1 - 0.3).abs() < 1e-12);
        assert!((s.var_x2 - 0.8).abs() < 1e-12);
        assert!((s.fano_f - s.mandel_q - 1.0).abs() < 1e-12);
        assert!((s.fano_f - printed_q_expression(&p)).abs() < 1e-12);
        assert!(s.var_x1 * s.var_x2 >= 1.0 / 16.0);

        let thermal = SdmParams::new(0.5, 0.0, 0.1, 1.0).unwrap();
        let s = steady_stats(&thermal).unwrap();
        assert!((s.mean_n - 0.1).abs() < 1e-15);
        assert!((s.mandel_q - 0.1).abs() < 1e-15);
        assert!((s.fano_f - 1.1).abs() < 1e-15);

        let empty = SdmParams::new(0.5, 0.0, 0.0, 1.0).unwrap();
        assert!(matches!(steady_stats(&empty), Err(SdmError::DegenerateParams(_))));
    }

    #[test]
    fn moment_probe_on_steady_state() {
        let p = SdmParams::desk();
        let ss = SteadyState::new(p);
        assert!((moment_probe(&ss, 0, 0).unwrap() - 1.0).norm() < 1e-15);
        let sym_n = moment_probe(&ss, 1, 1).unwrap();
        assert!((sym_n - c(p.steady_mean_photons() + 0.5, 0.0)).norm() < 1e-6, "{sym_n}");
        assert!(moment_probe(&ss, 0, 1).unwrap().norm() < 1e-6);
        assert!(moment_probe(&ss, 3, 2).is_err());
    }

    #[test]
    fn moment_probe_on_coherent_state() {
        let alpha = c(0.6, -0.4);
        let s = CoherentOpSum::coherent(alpha);
        assert!((moment_probe(&s, 0, 1).unwrap() - alpha).norm() < 1e-8);
        assert!((moment_probe(&s, 1, 0).unwrap() - alpha.conj()).norm() < 1e-8);
        assert!((moment_probe(&s, 0, 2).unwrap() - alpha * alpha).norm() < 1e-7);
        // symmetric ⟨a†a⟩ = |α|² + ½
        assert!((moment_probe(&s, 1, 1).unwrap() - (alpha.norm_sqr() + 0.5)).norm() < 1e-7);
        // ⟨a†²a²⟩_sym for a coherent state: |α|⁴ + 2|α|² + ½
        let n = alpha.norm_sqr();
        let v = moment_probe(&s, 2, 2).unwrap();
        assert!((v - (n * n + 2.0 * n + 0.5)).norm() < 1e-6, "{v}");
    }
}
