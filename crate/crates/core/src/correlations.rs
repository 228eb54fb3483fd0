//! Detection probabilities and two-click correlation functions at steady
//! state.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::charfn::{CharFn, ClickKind, Clicked, SharedCharFn};
use crate::error::{Result, SdmError};
use crate::params::SdmParams;
use crate::propagator::{steady_charfn, Evolved, SteadyState};

const MIN_PROBABILITY: f64 = 1e-14;

/// p = (1 + s·Re χ(2ξ))/2 for the given click.
pub fn click_probability(kind: ClickKind, chi: &dyn CharFn, params: &SdmParams) -> f64 {
    0.5 * (1.0 + kind.sign() * chi.eval(2.0 * params.xi()).re)
}

/// Unnormalized joint probability Tr[Y e^{ℒ₀t} X ρ₀] for a state with
/// characteristic function `chi0`, built from the click conjugation and the
/// propagator.
pub fn joint_click_probability(
    first: ClickKind,
    second: ClickKind,
    t: f64,
    chi0: SharedCharFn,
    params: &SdmParams,
) -> Result<f64> {
    let clicked: SharedCharFn = Arc::new(Clicked::new(chi0, params, first));
    let evolved = Evolved::new(clicked, t, *params)?;
    // trace is preserved by the propagator, χ(0) carries p_first
    let p_first = evolved.eval(num_complex::Complex64::new(0.0, 0.0)).re;
    Ok(0.5 * (p_first + second.sign() * evolved.eval(2.0 * params.xi()).re))
}

/// G_xy(t) = Tr[Y e^{ℒ₀t} X ρss] / (p_X p_Y) evaluated through the generic
/// characteristic-function path.
pub fn two_click_correlation_compositional(
    first: ClickKind,
    second: ClickKind,
    t: f64,
    params: &SdmParams,
) -> Result<f64> {
    let ss = steady_charfn(params);
    let (px, py) = (
        click_probability(first, &ss, params),
        click_probability(second, &ss, params),
    );
    check_probabilities(px, py)?;
    Ok(joint_click_probability(first, second, t, ss, params)? / (px * py))
}

fn check_probabilities(px: f64, py: f64) -> Result<()> {
    if px < MIN_PROBABILITY || py < MIN_PROBABILITY {
        return Err(SdmError::DegenerateParams(format!(
            "click probability vanishes (p_first = {px:e}, p_second = {py:e})"
        )));
    }
    Ok(())
}

/// Closed form of G_xy(t). Every argument lies on the displacement axis where
/// χss(2ξs) = g(s) = exp(−(2n̄+1)·2|ξ|²s²). With e' = e^{−γt/2}:
///
/// χ_X(2ξe') = ¼[2g(e') + s_X(g(1−e') + g(1+e'))],
/// χ_σ = g(1)·χ_X(2ξe')/g(e'),
/// G = [1 + s_Y·χ_σ/p_X] / (1 + s_Y·g(1)).
pub fn two_click_correlation(first: ClickKind, second: ClickKind, t: f64, params: &SdmParams) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(SdmError::Domain(format!("correlation time must be >= 0, got {t}")));
    }
    let ss = SteadyState::new(*params);
    let g = |s: f64| ss.on_displacement_axis(s);
    let g1 = g(1.0);
    let px = 0.5 * (1.0 + first.sign() * g1);
    let py = 0.5 * (1.0 + second.sign() * g1);
    check_probabilities(px, py)?;
    let e = (-0.5 * params.gamma * t).exp();
    // χ_σ = g(1)/g(e')·χ_X(2ξe'), assembled in log form since g(e') and
    // g(1±e') can underflow separately at large |ξ|
    let lg = |s: f64| ss.log_chi(2.0 * params.xi() * s);
    let (l1, le) = (lg(1.0), lg(e));
    let chi_sigma = 0.25
        * (2.0 * g1 + first.sign() * ((lg(1.0 - e) - le + l1).exp() + (lg(1.0 + e) - le + l1).exp()));
    Ok((1.0 + second.sign() * chi_sigma / px) / (1.0 + second.sign() * g1))
}

/// The printed tilde/bar forms, with the unspecified relaxation rate `rate_a`
/// in e^{−At/2}. The tilde form follows a ground click, the bar form an
/// excited click.
pub fn printed_two_click_correlation(
    first: ClickKind,
    second: ClickKind,
    t: f64,
    rate_a: f64,
    params: &SdmParams,
) -> Result<f64> {
    let ss = SteadyState::new(*params);
    let g = |s: f64| ss.on_displacement_axis(s);
    let g1 = g(1.0);
    check_probabilities(0.5 * (1.0 + first.sign() * g1), 0.5 * (1.0 + second.sign() * g1))?;
    let ea = (-0.5 * rate_a * t).exp();
    let s = first.sign();
    let damping = (-(params.nbar + 0.5) * 4.0 * params.xi_mag * params.xi_mag * (1.0 - ea)).exp();
    let chi = (2.0 * g(ea) + s * (1.0 + g(2.0 * ea))) / (2.0 + s * 2.0 * g(ea)) * damping;
    Ok((1.0 + second.sign() * chi) / (1.0 + second.sign() * g1))
}

/// One correlation function sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub first: ClickKind,
    pub second: ClickKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl CorrelationCurve {
    pub fn label(&self) -> String {
        format!("G_{}{}", self.first.level(), self.second.level())
    }
}

pub fn correlation_curve(first: ClickKind, second: ClickKind, times: &[f64], params: &SdmParams) -> Result<CorrelationCurve> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(SdmError::Domain("time grid must be ascending".into()));
    }
    let values = times
        .iter()
        .map(|&t| two_click_correlation(first, second, t, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationCurve {
        first,
        second,
        times: times.to_vec(),
        values,
    })
}

/// The four orderings in output column order: ee, eg, ge, gg.
pub const CLICK_PAIRS: [(ClickKind, ClickKind); 4] = [
    (ClickKind::B, ClickKind::B),
    (ClickKind::B, ClickKind::A),
    (ClickKind::A, ClickKind::B),
    (ClickKind::A, ClickKind::A),
];

/// Largest |printed − compositional| over the time grid for one pair.
pub fn printed_form_deviation(
    first: ClickKind,
    second: ClickKind,
    times: &[f64],
    rate_a: f64,
    params: &SdmParams,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in times {
        let a = two_click_correlation(first, second, t, params)?;
        let b = printed_two_click_correlation(first, second, t, rate_a, params)?;
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::Vacuum;
    use crate::coherent::CoherentOpSum;
    use crate::dynamics::{detect_sequence, Outcome};

    const A: ClickKind = ClickKind::A;
    const B: ClickKind = ClickKind::B;

    #[test]
    fn steady_state_detection_probabilities() {
        let p = SdmParams::desk();
        let ss = SteadyState::new(p);
        let pe = click_probability(B, &ss, &p);
        assert!((pe - 0.5 * (1.0 + (-0.6f64).exp())).abs() < 1e-15);
        assert!((pe - 0.77441).abs() < 1e-5);
        assert!((pe + click_probability(A, &ss, &p) - 1.0).abs() < 1e-15);
        assert_eq!(click_probability(B, &ss, &p.with_xi(0.0)), 1.0);
    }

    #[test]
    fn closed_form_matches_compositional_path() {
        let p = SdmParams::desk();
        for (x, y) in CLICK_PAIRS {
            for t in [0.0, 0.1, 0.5, 2.0, 7.0] {
                let a = two_click_correlation(x, y, t, &p).unwrap();
                let b = two_click_correlation_compositional(x, y, t, &p).unwrap();
                assert!((a - b).abs() < 1e-12, "{x:?}{y:?} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn desk_values_at_zero_delay() {
        let p = SdmParams::desk();
        let g = |x, y| two_click_correlation(x, y, 0.0, &p).unwrap();
        assert!((g(B, B) - 1.101_785_5).abs() < 1e-6);
        assert!((g(A, A) - 2.199_408_7).abs() < 1e-6);
        assert!((g(B, A) - 0.650_597_1).abs() < 1e-6);
        assert!((g(A, B) - 0.650_597_1).abs() < 1e-6);
    }

    #[test]
    fn decorrelates_at_long_times() {
        let p = SdmParams::desk();
        for (x, y) in CLICK_PAIRS {
            assert!((two_click_correlation(x, y, 40.0, &p).unwrap() - 1.0).abs() < 1e-10);
        }
        let fig = SdmParams::figure_scale();
        for (x, y) in CLICK_PAIRS {
            let v = two_click_correlation(x, y, 40.0, &fig).unwrap();
            assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn no_coupling_gives_independent_clicks() {
        let p = SdmParams::desk().with_xi(0.0);
        for t in [0.0, 0.3, 3.0] {
            assert_eq!(two_click_correlation(B, B, t, &p).unwrap(), 1.0);
        }
        assert!(matches!(two_click_correlation(A, B, 0.0, &p), Err(SdmError::DegenerateParams(_))));
    }

    #[test]
    fn deviation_from_unity_decays() {
        let p = SdmParams::desk();
        for (x, y) in CLICK_PAIRS {
            let mut last = f64::INFINITY;
            for i in 0..60 {
                let d = (two_click_correlation(x, y, 0.1 * i as f64, &p).unwrap() - 1.0).abs();
                assert!(d <= last + 1e-15);
                last = d;
            }
        }
    }

    #[test]
    fn vacuum_joint_probabilities_match_sequential_detection() {
        let p = SdmParams::desk();
        let vac: SharedCharFn = Arc::new(Vacuum);
        for (x, y) in CLICK_PAIRS {
            let joint = joint_click_probability(x, y, 0.0, vac.clone(), &p).unwrap();
            let o = |k: ClickKind| if k == B { Outcome::Excited } else { Outcome::Ground };
            let (_, rec) = detect_sequence(&CoherentOpSum::vacuum(), &p, &[o(x), o(y)]).unwrap();
            assert!((joint - rec.probability).abs() < 1e-12);
            let px = click_probability(x, &Vacuum, &p);
            let (_, single) = detect_sequence(&CoherentOpSum::vacuum(), &p, &[o(x)]).unwrap();
            assert!((px - single.probability).abs() < 1e-15);
        }
    }

    #[test]
    fn printed_forms_agree_at_zero_delay_only() {
        let p = SdmParams::desk();
        for (x, y) in CLICK_PAIRS {
            let a = two_click_correlation(x, y, 0.0, &p).unwrap();
            for rate in [1.0, 2.0] {
                let b = printed_two_click_correlation(x, y, 0.0, rate, &p).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
        let dev = printed_form_deviation(A, A, &[0.0, 0.1, 0.5, 2.0], 1.0, &p).unwrap();
        assert!(dev > 1e-3);
    }

    #[test]
    fn curve_rejects_descending_grid() {
        let p = SdmParams::desk();
        assert!(correlation_curve(B, A, &[0.0, 1.0, 0.5], &p).is_err());
        let c = correlation_curve(B, A, &[0.0, 0.5, 1.0], &p).unwrap();
        assert_eq!(c.label(), "G_eg");
        assert_eq!(c.values.len(), 3);
    }
}
