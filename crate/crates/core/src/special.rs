//! Entire cosine integral.

use num_complex::Complex64;

use crate::error::{Result, SdmError};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// Below this the power series is used, above it the continued fraction.
const SERIES_LIMIT: f64 = 4.0;

/// cin(u) = ∫₀^u (1 − cos z)/z dz = γ_e + ln u − Ci(u).
///
/// Smooth at the origin with cin(u) ≈ u²/4. Relative accuracy is near
/// machine precision over the whole half line.
pub fn cin(u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(SdmError::Domain(format!("cin requires u >= 0, got {u}")));
    }
    Ok(cin_nonneg(u))
}

/// cin(|u|); cin is even so this is the natural extension to the real line.
pub fn cin_abs(u: f64) -> f64 {
    cin_nonneg(u.abs())
}

fn cin_nonneg(u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    if u.is_infinite() {
        return f64::INFINITY;
    }
    if u < SERIES_LIMIT {
        cin_series(u)
    } else {
        EULER_GAMMA + u.ln() - cosine_integral_cf(u)
    }
}

/// Σ_{k≥1} (−1)^{k+1} u^{2k} / (2k·(2k)!)
fn cin_series(u: f64) -> f64 {
    let u2 = u * u;
    let mut term = u2 / 2.0; // (−1)^{k+1} u^{2k}/(2k)! at k = 1
    let mut sum = 0.0;
    let mut k = 1.0;
    loop {
        let contrib = term / (2.0 * k);
        sum += contrib;
        if contrib.abs() <= 1e-17 * sum.abs() {
            break;
        }
        term *= -u2 / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
        k += 1.0;
    }
    sum
}

/// Ci(u) for u > 2 from the continued fraction of E₁(iu) (modified Lentz),
/// using Ci(u) = −Re E₁(iu).
fn cosine_integral_cf(u: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let one = Complex64::new(1.0, 0.0);
    let mut b = Complex64::new(1.0, u);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = one / b;
    let mut h = d;
    for i in 2..10_000 {
        let a = -((i - 1) as f64).powi(2);
        b += 2.0;
        d = one / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    h *= Complex64::new(u.cos(), -u.sin());
    -h.re
}

/// Cosine integral Ci(u) = γ_e + ln u − cin(u), u > 0.
pub fn cosine_integral(u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(SdmError::Domain(format!("Ci requires u > 0, got {u}")));
    }
    if u < SERIES_LIMIT {
        Ok(EULER_GAMMA + u.ln() - cin_series(u))
    } else {
        Ok(cosine_integral_cf(u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson quadrature of (1 − cos z)/z, independent of the
    /// series and continued-fraction paths.
    fn cin_quadrature(u: f64) -> f64 {
        fn f(z: f64) -> f64 {
            if z == 0.0 {
                0.0
            } else {
                // 2 sin²(z/2)/z avoids cancellation near 0
                2.0 * (0.5 * z).sin().powi(2) / z
            }
        }
        fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
            (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        }
        #[allow(clippy::too_many_arguments)]
        fn rec(a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let (flm, frm) = (f(lm), f(rm));
            let left = simpson(a, m, fa, flm, fm);
            let right = simpson(m, b, fm, frm, fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + rec(m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
        }
        // split into unit panels so each stays well resolved
        let n = u.ceil().max(1.0) as usize;
        let h = u / n as f64;
        (0..n)
            .map(|i| {
                let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
                let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
                rec(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), 1e-15, 40)
            })
            .sum()
    }

    #[test]
    fn cin_at_zero_and_domain() {
        assert_eq!(cin(0.0).unwrap(), 0.0);
        assert!(cin(-1e-3).is_err());
        assert!(cin(f64::NAN).is_err());
    }

    #[test]
    fn cin_of_one() {
        // Ci(1) = 0.337403922900968...
        let v = cin(1.0).unwrap();
        assert!((v - 0.239_811_742_000_564_7).abs() < 1e-14, "{v}");
        assert!((cosine_integral(1.0).unwrap() - 0.337_403_922_900_968_1).abs() < 1e-14);
    }

    #[test]
    fn cin_small_argument_leading_term() {
        for u in [1e-6, 1e-4, 1e-2] {
            let v = cin(u).unwrap();
            assert!(((v - u * u / 4.0) / (u * u / 4.0)).abs() < u * u, "{u}");
        }
    }

    #[test]
    fn cin_matches_quadrature_oracle() {
        for &u in &[0.1, 0.5, 1.0, 2.0, 3.9, 4.0, 4.1, 6.0, 8.0, 12.5, 20.0, 40.0] {
            let a = cin(u).unwrap();
            let b = cin_quadrature(u);
            assert!(((a - b) / b).abs() < 1e-12, "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn series_and_continued_fraction_agree_at_switch() {
        for u in [3.0, 3.5, 4.0, 5.0, 7.9] {
            let s = cin_series(u);
            let f = EULER_GAMMA + u.ln() - cosine_integral_cf(u);
            assert!(((s - f) / s).abs() < 1e-13, "u={u}: {s} vs {f}");
        }
    }

    #[test]
    fn cin_is_even_via_abs() {
        assert_eq!(cin_abs(-2.5), cin_abs(2.5));
    }
}
