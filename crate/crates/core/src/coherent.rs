//! Exact algebra of operators written as finite sums of coherent-state dyads
//! `Σ c·|k⟩⟨b|`.
//!
//! Every state reachable from the vacuum by atom transits (with or without
//! detection) stays inside this family, so traces, characteristic functions,
//! moments and Wigner functions are all available in closed form.

use std::collections::HashMap;

use num_complex::Complex64;

/// Amplitude rounded onto the merge lattice.
type GridKey = (i64, i64);

/// ⟨a|b⟩ = exp(−|a|²/2 − |b|²/2 + a*b).
pub fn coherent_overlap(a: Complex64, b: Complex64) -> Complex64 {
    (-0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + a.conj() * b).exp()
}

/// Phase picked up by D(δ)|k⟩ = e^{(δk* − δ*k)/2}|k + δ⟩.
#[inline]
fn displacement_phase(delta: Complex64, k: Complex64) -> Complex64 {
    (0.5 * (delta * k.conj() - delta.conj() * k)).exp()
}

/// One dyad `coeff·|ket⟩⟨bra|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dyad {
    pub ket: Complex64,
    pub bra: Complex64,
    pub coeff: Complex64,
}

impl Dyad {
    pub fn new(ket: Complex64, bra: Complex64, coeff: Complex64) -> Self {
        Self { ket, bra, coeff }
    }

    /// Tr|k⟩⟨b| = ⟨b|k⟩, times the coefficient.
    pub fn trace(&self) -> Complex64 {
        self.coeff * coherent_overlap(self.bra, self.ket)
    }
}

/// Operator stored as an unnormalized sum of coherent dyads. Normalization is
/// an explicit step so that pre-normalization traces can serve as detection
/// probabilities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoherentOpSum {
    terms: Vec<Dyad>,
}

// Amplitudes are quantized on this lattice when merging dyads.
const MERGE_QUANTUM: f64 = 1e-9;

impl CoherentOpSum {
    pub fn new() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn from_terms(terms: Vec<Dyad>) -> Self {
        Self { terms }
    }

    pub fn vacuum() -> Self {
        Self::coherent(Complex64::new(0.0, 0.0))
    }

    /// Pure coherent state |α⟩⟨α|.
    pub fn coherent(alpha: Complex64) -> Self {
        Self {
            terms: vec![Dyad::new(alpha, alpha, Complex64::new(1.0, 0.0))],
        }
    }

    pub fn terms(&self) -> &[Dyad] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, ket: Complex64, bra: Complex64, coeff: Complex64) {
        self.terms.push(Dyad::new(ket, bra, coeff));
    }

    pub fn extend(&mut self, other: &CoherentOpSum) {
        self.terms.extend_from_slice(&other.terms);
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|d| Dyad::new(d.ket, d.bra, d.coeff * factor))
                .collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.terms.iter().map(Dyad::trace).sum()
    }

    /// Divides by the trace. Returns `None` for a vanishing trace.
    pub fn normalized(&self) -> Option<Self> {
        let tr = self.trace();
        if tr.norm() == 0.0 || !tr.is_finite() {
            return None;
        }
        Some(self.scaled(tr.inv()))
    }

    /// Adjoint: Σ c*·|b⟩⟨k|.
    pub fn adjoint(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|d| Dyad::new(d.bra, d.ket, d.coeff.conj()))
                .collect(),
        }
    }

    /// Combines dyads that share (ket, bra) amplitudes and drops terms whose
    /// coefficients cancelled exactly.
    pub fn merged(&self) -> Self {
        let key = |z: Complex64| {
            (
                (z.re / MERGE_QUANTUM).round() as i64,
                (z.im / MERGE_QUANTUM).round() as i64,
            )
        };
        let mut index: HashMap<(GridKey, GridKey), usize> = HashMap::new();
        let mut out: Vec<Dyad> = Vec::with_capacity(self.terms.len());
        for d in &self.terms {
            match index.get(&(key(d.ket), key(d.bra))) {
                Some(&i) => out[i].coeff += d.coeff,
                None => {
                    index.insert((key(d.ket), key(d.bra)), out.len());
                    out.push(*d);
                }
            }
        }
        let scale = out.iter().map(|d| d.coeff.norm()).fold(0.0, f64::max);
        out.retain(|d| d.coeff.norm() > 1e-15 * scale);
        Self { terms: out }
    }

    /// Term-wise D(d_left)·|k⟩⟨b|·D(d_right).
    pub fn displaced(&self, d_left: Complex64, d_right: Complex64) -> Self {
        displace_opsum(self, d_left, d_right)
    }

    /// Largest deviation from Hermiticity, measured on the merged dyad list.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = {
            let mut d = self.clone();
            d.terms.extend(self.adjoint().scaled(Complex64::new(-1.0, 0.0)).terms);
            d.merged()
        };
        diff.terms.iter().map(|d| d.coeff.norm()).fold(0.0, f64::max)
    }

    /// Normally ordered moment Tr[S·(a†)^p a^q] = Σ c·(b*)^p k^q ⟨b|k⟩.
    pub fn normal_moment(&self, p: u32, q: u32) -> Complex64 {
        self.terms
            .iter()
            .map(|d| d.trace() * d.bra.conj().powu(p) * d.ket.powu(q))
            .sum()
    }

    /// Largest coherent amplitude appearing in any dyad.
    pub fn max_amplitude(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|d| [d.ket.norm(), d.bra.norm()])
            .fold(0.0, f64::max)
    }
}

/// Applies D(d_left)·S·D(d_right) with exact phase bookkeeping:
/// D(δ)|k⟩ = e^{(δk*−δ*k)/2}|k+δ⟩ and ⟨b|D(δ') = e^{(δ'b*−δ'*b)/2}⟨b−δ'|.
pub fn displace_opsum(s: &CoherentOpSum, d_left: Complex64, d_right: Complex64) -> CoherentOpSum {
    CoherentOpSum {
        terms: s
            .terms
            .iter()
            .map(|d| {
                let ket_phase = displacement_phase(d_left, d.ket);
                // ⟨b|D(δ') is the adjoint of D(−δ')|b⟩.
                let bra_phase = displacement_phase(-d_right, d.bra).conj();
                Dyad::new(d.ket + d_left, d.bra - d_right, d.coeff * ket_phase * bra_phase)
            })
            .collect(),
    }
}

/// χ(β) = Tr[S·D(β)] = Σ c·e^{(βk*−β*k)/2}⟨b|k+β⟩.
pub fn charfn_opsum(s: &CoherentOpSum, beta: Complex64) -> Complex64 {
    s.terms
        .iter()
        .map(|d| d.coeff * displacement_phase(beta, d.ket) * coherent_overlap(d.bra, d.ket + beta))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn overlap_values() {
        assert!((coherent_overlap(c(0.0, 0.0), c(0.0, 0.0)) - 1.0).norm() < 1e-15);
        let a = c(0.7, -1.3);
        assert!((coherent_overlap(a, a) - 1.0).norm() < 1e-14);
        let xi = c(0.0, -0.5);
        let v = coherent_overlap(xi, -xi);
        assert!((v - c((-0.5f64).exp(), 0.0)).norm() < 1e-15);
        assert!((v.re - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn displacing_vacuum_and_identity() {
        let xi = c(0.0, -0.5);
        let s = CoherentOpSum::vacuum().displaced(xi, -xi);
        assert_eq!(s.terms()[0].ket, xi);
        assert_eq!(s.terms()[0].bra, xi);
        assert!((s.terms()[0].coeff - 1.0).norm() < 1e-15);

        let mixed = CoherentOpSum::from_terms(vec![
            Dyad::new(c(0.3, 0.1), c(-0.2, 0.4), c(0.25, 0.1)),
            Dyad::new(c(1.0, 0.0), c(1.0, 0.0), c(0.5, 0.0)),
        ]);
        assert_eq!(mixed.displaced(c(0.0, 0.0), c(0.0, 0.0)), mixed);
    }

    #[test]
    fn collinear_displacement_keeps_coefficient() {
        let xi = c(0.0, -0.5);
        let s = CoherentOpSum::coherent(xi).displaced(xi, -xi);
        let d = s.terms()[0];
        assert!((d.ket - 2.0 * xi).norm() < 1e-15);
        assert!((d.bra - 2.0 * xi).norm() < 1e-15);
        assert!((d.coeff - 1.0).norm() < 1e-15);
    }

    #[test]
    fn vacuum_charfn_is_gaussian() {
        let s = CoherentOpSum::vacuum();
        for beta in [c(0.0, 0.0), c(0.4, -1.1), c(-2.0, 0.3)] {
            let expected = (-0.5 * beta.norm_sqr()).exp();
            assert!((charfn_opsum(&s, beta) - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn two_coherent_mixture_charfn_at_twice_xi() {
        let xi = c(0.0, -0.5);
        let s = CoherentOpSum::from_terms(vec![
            Dyad::new(xi, xi, c(0.5, 0.0)),
            Dyad::new(-xi, -xi, c(0.5, 0.0)),
        ]);
        let v = charfn_opsum(&s, 2.0 * xi);
        assert!((v - c((-0.5f64).exp(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn merging_combines_and_prunes() {
        let a = c(0.0, 1.0);
        let s = CoherentOpSum::from_terms(vec![
            Dyad::new(a, a, c(0.25, 0.0)),
            Dyad::new(a, a, c(0.25, 0.0)),
            Dyad::new(a, -a, c(0.5, 0.0)),
            Dyad::new(a, -a, c(-0.5, 0.0)),
        ]);
        let m = s.merged();
        assert_eq!(m.len(), 1);
        assert!((m.terms()[0].coeff - 0.5).norm() < 1e-15);
    }

    #[test]
    fn coherent_state_moments() {
        let alpha = c(0.8, -0.3);
        let s = CoherentOpSum::coherent(alpha);
        assert!((s.normal_moment(1, 1) - alpha.norm_sqr()).norm() < 1e-14);
        assert!((s.normal_moment(0, 1) - alpha).norm() < 1e-14);
        assert!((s.normal_moment(0, 2) - alpha * alpha).norm() < 1e-14);
    }

    fn amp() -> impl Strategy<Value = Complex64> {
        (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(r, i)| c(r, i))
    }

    fn hermitian_state() -> impl Strategy<Value = CoherentOpSum> {
        proptest::collection::vec((amp(), amp(), 0.05f64..1.0, -1.0f64..1.0), 1..4).prop_map(|pieces| {
            // Σ w·|ψ⟩⟨ψ| with ψ ∝ |a⟩ + e^{iφ}|b⟩ is positive and Hermitian.
            let mut s = CoherentOpSum::new();
            for (a, b, w, phi) in pieces {
                let ph = c(0.0, phi).exp();
                s.push(a, a, c(w, 0.0));
                s.push(b, b, c(w, 0.0));
                s.push(a, b, ph.conj() * w);
                s.push(b, a, ph * w);
            }
            s.normalized().unwrap()
        })
    }

    proptest! {
        #[test]
        fn overlap_is_bounded(a in amp(), b in amp()) {
            prop_assert!(coherent_overlap(a, b).norm() <= 1.0 + 1e-15);
        }

        #[test]
        fn conjugation_is_invertible(d in amp(), e in amp(), ket in amp(), bra in amp(), cr in -1.0f64..1.0, ci in -1.0f64..1.0) {
            let s = CoherentOpSum::from_terms(vec![Dyad::new(ket, bra, c(cr, ci))]);
            let back = s.displaced(d, -d).displaced(-d, d);
            let (x, y) = (s.terms()[0], back.terms()[0]);
            prop_assert!((x.ket - y.ket).norm() < 1e-12);
            prop_assert!((x.bra - y.bra).norm() < 1e-12);
            prop_assert!((x.coeff - y.coeff).norm() < 1e-12);
            // and with unequal left/right displacements
            let back2 = s.displaced(d, e).displaced(-d, -e);
            prop_assert!((back2.terms()[0].coeff - x.coeff).norm() < 1e-12);
        }

        #[test]
        fn physical_charfn_properties(s in hermitian_state(), beta in amp()) {
            prop_assert!((charfn_opsum(&s, c(0.0, 0.0)) - 1.0).norm() < 1e-12);
            let v = charfn_opsum(&s, beta);
            prop_assert!(v.norm() <= 1.0 + 1e-12);
            prop_assert!((charfn_opsum(&s, -beta) - v.conj()).norm() < 1e-12);
            prop_assert!(s.hermiticity_defect() < 1e-12);
        }
    }
}
