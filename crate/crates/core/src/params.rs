//! Physical configuration of the strongly-driven micromaser and the
//! phase-space coordinate conventions shared by every engine.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdmError};

/// Micromaser configuration.
///
/// The complex per-transit displacement is always `ξ = −i·xi_mag`; nothing
/// downstream may depend on the sign of ξ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdmParams {
    /// |ξ| = gτ/2, displacement per atom transit.
    pub xi_mag: f64,
    /// Pump parameter N_ex = r/γ (atoms per cavity lifetime).
    pub n_ex: f64,
    /// Mean thermal photon number of the bath.
    pub nbar: f64,
    /// Cavity decay rate; sets the unit of time.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_gamma() -> f64 {
    1.0
}

impl SdmParams {
    pub fn new(xi_mag: f64, n_ex: f64, nbar: f64, gamma: f64) -> Result<Self> {
        let p = Self {
            xi_mag,
            n_ex,
            nbar,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    /// Desk-scale parameters used for every oracle comparison.
    pub fn desk() -> Self {
        Self {
            xi_mag: 0.5,
            n_ex: 2.0,
            nbar: 0.1,
            gamma: 1.0,
        }
    }

    /// Paper-scale parameters of the transient/steady-state figures.
    pub fn figure_scale() -> Self {
        Self {
            xi_mag: std::f64::consts::PI,
            n_ex: 50.0,
            nbar: 0.03,
            gamma: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn nonneg(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(SdmError::InvalidParams {
                    name,
                    reason: format!("must be finite and >= 0, got {v}"),
                })
            }
        }
        nonneg("xi_mag", self.xi_mag)?;
        nonneg("n_ex", self.n_ex)?;
        nonneg("nbar", self.nbar)?;
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(SdmError::InvalidParams {
                name: "gamma",
                reason: format!("must be finite and > 0, got {}", self.gamma),
            });
        }
        Ok(())
    }

    /// ξ = −i|ξ|.
    pub fn xi(&self) -> Complex64 {
        Complex64::new(0.0, -self.xi_mag)
    }

    /// Atomic injection rate r = N_ex·γ.
    pub fn pump_rate(&self) -> f64 {
        self.n_ex * self.gamma
    }

    /// Steady-state mean photon number N_ex|ξ|² + n̄.
    pub fn steady_mean_photons(&self) -> f64 {
        self.n_ex * self.xi_mag * self.xi_mag + self.nbar
    }

    pub fn with_xi(mut self, xi_mag: f64) -> Self {
        self.xi_mag = xi_mag;
        self
    }
}

/// A point of the complex phase plane (β for characteristic functions,
/// α for Wigner functions).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub re: f64,
    pub im: f64,
}

impl PhasePoint {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    /// Gain-frame coordinates (x, y) defined by ξ*β = |ξ|(x + iy) with
    /// ξ = −i|ξ|, i.e. x = −Im β, y = Re β. The pumping acts on y only.
    pub fn gain_coords(&self) -> (f64, f64) {
        (-self.im, self.re)
    }

    pub fn from_gain_coords(x: f64, y: f64) -> Self {
        Self { re: y, im: -x }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for PhasePoint {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<PhasePoint> for Complex64 {
    fn from(p: PhasePoint) -> Self {
        p.to_complex()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_nonfinite() {
        assert!(SdmParams::new(-0.1, 1.0, 0.0, 1.0).is_err());
        assert!(SdmParams::new(0.1, f64::NAN, 0.0, 1.0).is_err());
        assert!(SdmParams::new(0.1, 1.0, -1e-9, 1.0).is_err());
        assert!(SdmParams::new(0.1, 1.0, 0.0, 0.0).is_err());
        assert!(SdmParams::new(0.0, 0.0, 0.0, 2.0).is_ok());
    }

    #[test]
    fn gain_coordinates_reproduce_xi_star_beta() {
        let p = SdmParams::desk();
        let beta = Complex64::new(0.3, -1.7);
        let (x, y) = PhasePoint::from(beta).gain_coords();
        let lhs = p.xi().conj() * beta;
        assert!((lhs - Complex64::new(p.xi_mag * x, p.xi_mag * y)).norm() < 1e-15);
        let back = PhasePoint::from_gain_coords(x, y).to_complex();
        assert_eq!(back, beta);
    }

    #[test]
    fn gamma_defaults_to_one_in_json() {
        let p: SdmParams = serde_json::from_str(r#"{"xi_mag":0.5,"n_ex":2,"nbar":0.1}"#).unwrap();
        assert_eq!(p.gamma, 1.0);
        assert!(serde_json::from_str::<SdmParams>(r#"{"xi_mag":0.5,"n_ex":2,"nbar":0.1,"r":3}"#).is_err());
    }
}
