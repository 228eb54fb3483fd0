//! Adaptive Dormand–Prince 5(4) integration of ρ' = f(ρ) for complex matrices.

use super::generator::CMatrix;
use crate::error::{Result, SdmError};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MIN_STEP: f64 = 1e-14;

/// Integration counters accumulated across calls.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Stateful integrator; keeps its step size and FSAL stage between calls.
pub struct Dopri5<F> {
    f: F,
    tol: f64,
    h: f64,
    k1: Option<CMatrix>,
    pub stats: StepStats,
}

fn lin(y: &CMatrix, h: f64, terms: &[(f64, &CMatrix)]) -> CMatrix {
    let mut out = y.clone();
    for &(c, k) in terms {
        if c != 0.0 {
            out.zip_apply(k, |o, kv| *o += kv * (h * c));
        }
    }
    out
}

fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
}

impl<F: Fn(&CMatrix) -> CMatrix> Dopri5<F> {
    /// `tol` is used as both the absolute and relative tolerance in a
    /// max-norm error estimate.
    pub fn new(f: F, tol: f64) -> Self {
        Self {
            f,
            tol,
            h: 0.0,
            k1: None,
            stats: StepStats::default(),
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn set_tol(&mut self, tol: f64) {
        self.tol = tol;
    }

    fn eval(&mut self, y: &CMatrix) -> CMatrix {
        self.stats.rhs_evals += 1;
        (self.f)(y)
    }

    fn initial_step(&mut self, y: &CMatrix, k1: &CMatrix) -> f64 {
        let tol = self.tol;
        let scale = |m: &CMatrix, y: &CMatrix| {
            m.iter()
                .zip(y.iter())
                .map(|(a, b)| a.norm() / (tol + tol * b.norm()))
                .fold(0.0, f64::max)
        };
        let d0 = scale(y, y);
        let d1 = scale(k1, y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = lin(y, h0, &[(1.0, k1)]);
        let k2 = self.eval(&y1);
        let diff = &k2 - k1;
        let d2 = scale(&diff, y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    /// Advances `y` from `t` to `t_end` in place.
    pub fn advance(&mut self, y: &mut CMatrix, t: f64, t_end: f64) -> Result<()> {
        let mut t = t;
        if t_end <= t {
            return Ok(());
        }
        let mut k1 = match self.k1.take() {
            Some(k) => k,
            None => self.eval(y),
        };
        if self.h == 0.0 {
            self.h = self.initial_step(y, &k1);
        }
        loop {
            let remaining = t_end - t;
            if remaining <= 1e-14 * t_end.abs().max(1.0) {
                break;
            }
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            if h < MIN_STEP {
                return Err(SdmError::StepFailure { t, h });
            }
            let k2 = self.eval(&lin(y, h, &[(A21, &k1)]));
            let k3 = self.eval(&lin(y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = self.eval(&lin(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = self.eval(&lin(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = self.eval(&lin(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let mut y_new = lin(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            hermitize(&mut y_new);
            let k7 = self.eval(&y_new);
            let err_m = lin(
                &CMatrix::zeros(y.nrows(), y.ncols()),
                h,
                &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
            );
            let mut err: f64 = 0.0;
            for ((e, a), b) in err_m.iter().zip(y.iter()).zip(y_new.iter()) {
                let sc = self.tol + self.tol * a.norm().max(b.norm());
                err = err.max(e.norm() / sc);
            }
            if err <= 1.0 {
                self.stats.accepted += 1;
                t += h;
                *y = y_new;
                k1 = k7;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    self.h = h * fac;
                } else {
                    self.h = self.h.max(h * fac.min(1.0));
                }
                if last {
                    break;
                }
            } else {
                self.stats.rejected += 1;
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        self.k1 = Some(k1);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn exponential_decay_of_a_scalar() {
        let f = |m: &CMatrix| m * Complex64::new(-1.0, 0.0);
        let mut y = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        let mut ode = Dopri5::new(f, 1e-12);
        ode.advance(&mut y, 0.0, 1.0).unwrap();
        assert!((y[(0, 0)].re - (-1.0f64).exp()).abs() < 1e-10);
        ode.advance(&mut y, 1.0, 3.0).unwrap();
        assert!((y[(0, 0)].re - (-3.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn rotation_preserves_hermiticity() {
        // ρ' = −i[H, ρ] with H = σx
        let h = CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        );
        let i = Complex64::new(0.0, 1.0);
        let f = move |m: &CMatrix| (&h * m - m * &h) * (-i);
        let mut y = CMatrix::zeros(2, 2);
        y[(0, 0)] = Complex64::new(1.0, 0.0);
        let mut ode = Dopri5::new(f, 1e-11);
        ode.advance(&mut y, 0.0, std::f64::consts::FRAC_PI_4).unwrap();
        // half way: populations equal
        assert!((y[(0, 0)].re - 0.5).abs() < 1e-9);
        assert!((y[(0, 1)] - y[(1, 0)].conj()).norm() == 0.0);
    }
}
