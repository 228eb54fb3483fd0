//! Dissipation-free field dynamics: atoms crossing the cavity one at a time,
//! either unobserved or detected on exit, and the resulting cat states.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charfn::{CharFn, ClickKind};
use crate::coherent::{coherent_overlap, CoherentOpSum};
use crate::error::{Result, SdmError};
use crate::params::SdmParams;

/// Below this a detection branch is treated as forbidden.
pub const DEGENERATE_PROBABILITY: f64 = 1e-14;

/// Outcome of one atomic detection: `e` is the excited-state click (ℬ), `g`
/// the ground-state click (𝒜).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "e")]
    Excited,
    #[serde(rename = "g")]
    Ground,
}

impl Outcome {
    pub fn click(self) -> ClickKind {
        match self {
            Outcome::Excited => ClickKind::B,
            Outcome::Ground => ClickKind::A,
        }
    }

    pub fn sign(self) -> f64 {
        self.click().sign()
    }

    pub fn label(self) -> char {
        self.click().level()
    }

    pub fn parse_record(s: &str) -> Option<Vec<Outcome>> {
        s.chars()
            .map(|c| match c {
                'e' => Some(Outcome::Excited),
                'g' => Some(Outcome::Ground),
                _ => None,
            })
            .collect()
    }
}

/// Joint outcome of a sequence of detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub outcomes: Vec<Outcome>,
    pub probability: f64,
}

impl DetectionRecord {
    pub fn label(&self) -> String {
        self.outcomes.iter().map(|o| o.label()).collect()
    }
}

/// One unobserved transit: ½[D(ξ)SD(−ξ) + D(−ξ)SD(ξ)].
pub fn atom_pass_unobserved(s: &CoherentOpSum, params: &SdmParams) -> CoherentOpSum {
    let xi = params.xi();
    let half = Complex64::new(0.5, 0.0);
    let mut out = s.displaced(xi, -xi).scaled(half);
    out.extend(&s.displaced(-xi, xi).scaled(half));
    out.merged()
}

/// Unnormalized click map, ¼·K S K† with K = D(ξ) ± D(−ξ).
pub fn click_opsum(s: &CoherentOpSum, params: &SdmParams, kind: ClickKind) -> CoherentOpSum {
    let xi = params.xi();
    let sign = kind.sign();
    let legs = [(xi, 1.0), (-xi, sign)];
    let mut out = CoherentOpSum::new();
    for &(dl, sl) in &legs {
        for &(dr, sr) in &legs {
            // K† = D(−ξ) ± D(ξ), so the right factor for leg dr is D(−dr)
            out.extend(&s.displaced(dl, -dr).scaled(Complex64::new(0.25 * sl * sr, 0.0)));
        }
    }
    out.merged()
}

/// The state left by m unobserved atoms on an initially empty cavity:
/// 2^{−m} Σ_n C(m,n) |(m−2n)ξ⟩⟨(m−2n)ξ|.
pub fn multi_atom_unobserved(m: usize, params: &SdmParams) -> Result<CoherentOpSum> {
    if m > 64 {
        return Err(SdmError::OverflowGuard(m));
    }
    let xi = params.xi();
    let mut s = CoherentOpSum::new();
    let mut binom: u128 = 1;
    let norm = 2f64.powi(-(m as i32));
    for n in 0..=m {
        let amp = xi * (m as f64 - 2.0 * n as f64);
        s.push(amp, amp, Complex64::new(binom as f64 * norm, 0.0));
        binom = binom * (m - n) as u128 / (n + 1) as u128;
    }
    Ok(s.merged())
}

/// One detected transit. Returns the normalized conditional state and the
/// probability p = (1 ± Re χ(2ξ))/2 of the requested outcome.
pub fn atom_pass_detected(s: &CoherentOpSum, params: &SdmParams, outcome: Outcome) -> Result<(CoherentOpSum, f64)> {
    let branch = click_opsum(s, params, outcome.click());
    let p = branch.trace().re;
    if p < DEGENERATE_PROBABILITY {
        return Err(SdmError::DegenerateOutcome(p));
    }
    Ok((branch.scaled(Complex64::new(1.0 / p, 0.0)), p))
}

/// Applies detections in order, accumulating the joint probability.
pub fn detect_sequence(
    initial: &CoherentOpSum,
    params: &SdmParams,
    outcomes: &[Outcome],
) -> Result<(CoherentOpSum, DetectionRecord)> {
    let mut state = initial.clone();
    let mut prob = 1.0;
    for &o in outcomes {
        let (next, p) = atom_pass_detected(&state, params, o)?;
        state = next;
        prob *= p;
    }
    Ok((
        state,
        DetectionRecord {
            outcomes: outcomes.to_vec(),
            probability: prob,
        },
    ))
}

/// Every record of m detections on the vacuum, in lexicographic order with
/// `e` before `g`. Forbidden branches carry no state.
pub fn all_detection_records(m: usize, params: &SdmParams) -> Vec<(DetectionRecord, Option<CoherentOpSum>)> {
    let mut out = Vec::with_capacity(1 << m);
    fn walk(
        state: &CoherentOpSum,
        prob: f64,
        path: &mut Vec<Outcome>,
        remaining: usize,
        params: &SdmParams,
        out: &mut Vec<(DetectionRecord, Option<CoherentOpSum>)>,
    ) {
        if remaining == 0 {
            out.push((
                DetectionRecord {
                    outcomes: path.clone(),
                    probability: prob,
                },
                Some(state.clone()),
            ));
            return;
        }
        for o in [Outcome::Excited, Outcome::Ground] {
            path.push(o);
            match atom_pass_detected(state, params, o) {
                Ok((next, p)) => walk(&next, prob * p, path, remaining - 1, params, out),
                Err(_) => {
                    // every continuation of a forbidden branch is forbidden
                    let stem = path.clone();
                    let tails = 1usize << (remaining - 1);
                    for bits in 0..tails {
                        let mut rec = stem.clone();
                        for b in (0..remaining - 1).rev() {
                            rec.push(if bits >> b & 1 == 0 { Outcome::Excited } else { Outcome::Ground });
                        }
                        out.push((
                            DetectionRecord {
                                outcomes: rec,
                                probability: 0.0,
                            },
                            None,
                        ));
                    }
                }
            }
            path.pop();
        }
    }
    walk(&CoherentOpSum::vacuum(), 1.0, &mut Vec::new(), m, params, &mut out);
    out
}

/// ⟨a†a⟩ from Tr[S a†a] = Σ c·b*k⟨b|k⟩, divided by the trace.
pub fn mean_photon(s: &CoherentOpSum) -> f64 {
    (s.normal_moment(1, 1) / s.trace()).re
}

/// Wigner function of a dyad sum from W_{|k⟩⟨b|}(α) = 2⟨b|k⟩e^{−2(α−k)(α*−b*)}.
pub fn wigner_opsum(s: &CoherentOpSum, alpha: Complex64) -> f64 {
    s.terms()
        .iter()
        .map(|d| 2.0 * d.coeff * coherent_overlap(d.bra, d.ket) * (-2.0 * (alpha - d.ket) * (alpha.conj() - d.bra.conj())).exp())
        .sum::<Complex64>()
        .re
}

/// Families of closed-form Wigner functions for transits from the vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WignerKind {
    /// m unobserved atoms.
    Unobserved(usize),
    /// One atom detected.
    OneAtom(Outcome),
    /// Two atoms detected in the given order (eg and ge coincide).
    TwoAtoms(Outcome, Outcome),
}

/// Evaluates the printed closed forms for the transit Wigner functions.
pub fn wigner_closed_form(kind: WignerKind, params: &SdmParams, alpha: Complex64) -> Result<f64> {
    let x = params.xi_mag;
    let (ar, ai) = (alpha.re, alpha.im);
    let a2 = alpha.norm_sqr();
    let e2 = (-2.0 * x * x).exp();
    let e8 = (-8.0 * x * x).exp();
    Ok(match kind {
        WignerKind::Unobserved(m) => {
            if m > 64 {
                return Err(SdmError::OverflowGuard(m));
            }
            let xi = params.xi();
            let mut binom = 1.0;
            let mut sum = 0.0;
            for n in 0..=m {
                sum += binom * (-2.0 * (alpha - xi * (m as f64 - 2.0 * n as f64)).norm_sqr()).exp();
                binom = binom * (m - n) as f64 / (n + 1) as f64;
            }
            sum * 2f64.powi(1 - m as i32)
        }
        WignerKind::OneAtom(o) => {
            let s = o.sign();
            2.0 * (-2.0 * a2).exp() * (e2 * (4.0 * x * ai).cosh() + s * (4.0 * x * ar).cos()) / (1.0 + s * e2)
        }
        WignerKind::TwoAtoms(first, second) => {
            let g = (-2.0 * a2).exp();
            if first != second {
                2.0 * g * (-(8.0 * x * ar).cos() + e8 * (8.0 * x * ai).cosh()) / (1.0 - e8)
            } else {
                let s = first.sign();
                2.0 * g
                    * (2.0 + e8 * (8.0 * x * ai).cosh() + s * 4.0 * e2 * (4.0 * x * ai).cosh() * (4.0 * x * ar).cos()
                        + (8.0 * x * ar).cos())
                    / (3.0 + s * 4.0 * e2 + e8)
            }
        }
    })
}

/// The dyad-sum state matching a closed-form family.
pub fn state_for_kind(kind: WignerKind, params: &SdmParams) -> Result<CoherentOpSum> {
    match kind {
        WignerKind::Unobserved(m) => multi_atom_unobserved(m, params),
        WignerKind::OneAtom(o) => Ok(detect_sequence(&CoherentOpSum::vacuum(), params, &[o])?.0),
        WignerKind::TwoAtoms(a, b) => Ok(detect_sequence(&CoherentOpSum::vacuum(), params, &[a, b])?.0),
    }
}

/// Reduced atomic density matrix after one transit, basis order (e, g).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomicState2x2 {
    pub rho: [[Complex64; 2]; 2],
}

impl AtomicState2x2 {
    pub fn p_excited(&self) -> f64 {
        self.rho[0][0].re
    }

    pub fn p_ground(&self) -> f64 {
        self.rho[1][1].re
    }

    pub fn trace(&self) -> Complex64 {
        self.rho[0][0] + self.rho[1][1]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let a = self.rho[0][0].re;
        let d = self.rho[1][1].re;
        let b = self.rho[0][1].norm();
        0.5 * (a + d) - (0.25 * (a - d).powi(2) + b * b).sqrt()
    }
}

/// ρ_A = ½[1 + Re χ(2ξ)(|e⟩⟨e| − |g⟩⟨g|) + i Im χ(2ξ)(|g⟩⟨e| − |e⟩⟨g|)].
pub fn atomic_reduced_state(chi: &dyn CharFn, params: &SdmParams) -> AtomicState2x2 {
    let c = chi.eval(2.0 * params.xi());
    let half = 0.5;
    let i = Complex64::new(0.0, 1.0);
    AtomicState2x2 {
        rho: [
            [Complex64::new(half * (1.0 + c.re), 0.0), -i * half * c.im],
            [i * half * c.im, Complex64::new(half * (1.0 - c.re), 0.0)],
        ],
    }
}

/// Smallest eigenvalue of a dyad-sum operator, computed on the span of its
/// coherent states through the Gram matrix G: the nonzero spectrum of
/// Σ C_ij|α_i⟩⟨α_j| equals that of G^{1/2} C G^{1/2}.
pub fn min_eigenvalue_opsum(s: &CoherentOpSum) -> f64 {
    let merged = s.merged();
    let mut amps: Vec<Complex64> = Vec::new();
    let find = |amps: &Vec<Complex64>, z: Complex64| amps.iter().position(|a| (a - z).norm() < 1e-9);
    for d in merged.terms() {
        for z in [d.ket, d.bra] {
            if find(&amps, z).is_none() {
                amps.push(z);
            }
        }
    }
    let n = amps.len();
    if n == 0 {
        return 0.0;
    }
    let mut c = DMatrix::<Complex64>::zeros(n, n);
    for d in merged.terms() {
        let (i, j) = (find(&amps, d.ket).unwrap(), find(&amps, d.bra).unwrap());
        c[(i, j)] += d.coeff;
    }
    let g = DMatrix::<Complex64>::from_fn(n, n, |i, j| coherent_overlap(amps[i], amps[j]));
    let eig = g.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let sqrt_vals = eig
        .eigenvalues
        .map(|l| if l > 1e-14 * lmax { Complex64::new(l.sqrt(), 0.0) } else { Complex64::new(0.0, 0.0) });
    let v = &eig.eigenvectors;
    let g_half = v * DMatrix::from_diagonal(&sqrt_vals) * v.adjoint();
    let m = &g_half * c * &g_half;
    let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    herm.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}
