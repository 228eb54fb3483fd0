//! Symmetric-ordered characteristic functions χ(β) = Tr[ρ·D(β)] as callable
//! values, and the click-operator conjugation identities acting on them.

use std::sync::Arc;

use num_complex::Complex64;

use crate::coherent::{charfn_opsum, CoherentOpSum};
use crate::params::SdmParams;

/// A callable χ(β). Implementors must be cheap to evaluate pointwise and
/// safe to share across threads.
pub trait CharFn: Send + Sync {
    fn eval(&self, beta: Complex64) -> Complex64;

    /// Radius beyond which |χ| is expected to be negligible; used only to
    /// bound the search for a quadrature box.
    fn support_hint(&self) -> f64 {
        32.0
    }
}

pub type SharedCharFn = Arc<dyn CharFn>;

impl<T: CharFn + ?Sized> CharFn for Arc<T> {
    fn eval(&self, beta: Complex64) -> Complex64 {
        (**self).eval(beta)
    }
    fn support_hint(&self) -> f64 {
        (**self).support_hint()
    }
}

impl<T: CharFn + ?Sized> CharFn for &T {
    fn eval(&self, beta: Complex64) -> Complex64 {
        (**self).eval(beta)
    }
    fn support_hint(&self) -> f64 {
        (**self).support_hint()
    }
}

/// Vacuum, χ(β) = e^{−|β|²/2}.
#[derive(Debug, Clone, Copy, Default)]
pub struct Vacuum;

impl CharFn for Vacuum {
    fn eval(&self, beta: Complex64) -> Complex64 {
        Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0)
    }
    fn support_hint(&self) -> f64 {
        10.0
    }
}

impl CharFn for CoherentOpSum {
    fn eval(&self, beta: Complex64) -> Complex64 {
        charfn_opsum(self, beta)
    }
    fn support_hint(&self) -> f64 {
        let spread = self
            .terms()
            .iter()
            .map(|d| (d.ket - d.bra).norm())
            .fold(0.0, f64::max);
        spread + 12.0
    }
}

/// Wraps a closure as a characteristic function.
pub struct FnCharFn<F>(pub F);

impl<F> CharFn for FnCharFn<F>
where
    F: Fn(Complex64) -> Complex64 + Send + Sync,
{
    fn eval(&self, beta: Complex64) -> Complex64 {
        (self.0)(beta)
    }
}

/// Which atomic level fired the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ClickKind {
    /// Ground-state click, superoperator 𝒜.
    A,
    /// Excited-state click, superoperator ℬ.
    B,
}

impl ClickKind {
    pub fn sign(self) -> f64 {
        match self {
            ClickKind::A => -1.0,
            ClickKind::B => 1.0,
        }
    }

    /// Atomic level label, `g` for A and `e` for B.
    pub fn level(self) -> char {
        match self {
            ClickKind::A => 'g',
            ClickKind::B => 'e',
        }
    }

    pub fn from_level(c: char) -> Option<Self> {
        match c {
            'g' | 'A' => Some(ClickKind::A),
            'e' | 'B' => Some(ClickKind::B),
            _ => None,
        }
    }
}

/// Characteristic function of the click-projected (unnormalized) field,
/// using Tr[D(β)D(∓ξ)ρD(±ξ)] = χ(β)e^{∓(ξ*β−ξβ*)} and
/// Tr[D(β)D(±ξ)ρD(±ξ)] = χ(β±2ξ):
///
/// χ_click(β) = ¼[χ(β)(e^{ξ*β−ξβ*} + e^{−ξ*β+ξβ*}) + s(χ(β−2ξ) + χ(β+2ξ))].
pub fn charfn_click_conjugation(chi: &dyn CharFn, xi: Complex64, beta: Complex64, kind: ClickKind) -> Complex64 {
    let phase = xi.conj() * beta - xi * beta.conj();
    let cross = chi.eval(beta) * (phase.exp() + (-phase).exp());
    let shifted = chi.eval(beta - 2.0 * xi) + chi.eval(beta + 2.0 * xi);
    0.25 * (cross + kind.sign() * shifted)
}

/// χ of 𝒜ρ or ℬρ as a standalone evaluator.
#[derive(Clone)]
pub struct Clicked<C> {
    pub inner: C,
    pub xi: Complex64,
    pub kind: ClickKind,
}

impl<C: CharFn> Clicked<C> {
    pub fn new(inner: C, params: &SdmParams, kind: ClickKind) -> Self {
        Self {
            inner,
            xi: params.xi(),
            kind,
        }
    }
}

impl<C: CharFn> CharFn for Clicked<C> {
    fn eval(&self, beta: Complex64) -> Complex64 {
        charfn_click_conjugation(&self.inner, self.xi, beta, self.kind)
    }
    fn support_hint(&self) -> f64 {
        self.inner.support_hint() + 2.0 * self.xi.norm()
    }
}

/// χ of the unobserved single-atom map ½[D(ξ)ρD(−ξ) + D(−ξ)ρD(ξ)], which is
/// 𝒜 + ℬ.
pub fn charfn_unobserved_pass(chi: &dyn CharFn, xi: Complex64, beta: Complex64) -> Complex64 {
    let phase = xi.conj() * beta - xi * beta.conj();
    0.5 * chi.eval(beta) * (phase.exp() + (-phase).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn clicked_vacuum_at_origin_gives_detection_probabilities() {
        let p = SdmParams::desk();
        let e = (-2.0 * p.xi_mag * p.xi_mag).exp();
        let pg = charfn_click_conjugation(&Vacuum, p.xi(), c(0.0, 0.0), ClickKind::A);
        let pe = charfn_click_conjugation(&Vacuum, p.xi(), c(0.0, 0.0), ClickKind::B);
        assert!((pg.re - 0.5 * (1.0 - e)).abs() < 1e-15);
        assert!((pe.re - 0.5 * (1.0 + e)).abs() < 1e-15);
        assert!((pe + pg - 1.0).norm() < 1e-15);
    }

    #[test]
    fn clicked_vacuum_at_twice_xi() {
        let p = SdmParams::desk();
        let x2 = p.xi_mag * p.xi_mag;
        let v = charfn_click_conjugation(&Vacuum, p.xi(), 2.0 * p.xi(), ClickKind::A);
        let expected = 0.25 * (2.0 * (-2.0 * x2).exp() - 1.0 - (-8.0 * x2).exp());
        assert!((v - expected).norm() < 1e-15);
    }

    #[test]
    fn clicks_sum_to_unobserved_map() {
        let p = SdmParams::desk();
        let chi = CoherentOpSum::coherent(c(0.4, 0.9));
        for beta in [c(0.3, -0.2), c(-1.0, 0.5), c(0.0, 2.0)] {
            let a = charfn_click_conjugation(&chi, p.xi(), beta, ClickKind::A);
            let b = charfn_click_conjugation(&chi, p.xi(), beta, ClickKind::B);
            let u = charfn_unobserved_pass(&chi, p.xi(), beta);
            assert!((a + b - u).norm() < 1e-15);
        }
    }

    #[test]
    fn click_kind_labels() {
        assert_eq!(ClickKind::A.sign(), -1.0);
        assert_eq!(ClickKind::B.sign(), 1.0);
        assert_eq!(ClickKind::from_level('g'), Some(ClickKind::A));
        assert_eq!(ClickKind::from_level('e'), Some(ClickKind::B));
        assert_eq!(ClickKind::from_level('x'), None);
    }
}
