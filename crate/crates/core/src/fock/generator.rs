//! The master-equation generator on a truncated number basis.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::displacement::displacement_matrix;
use crate::charfn::ClickKind;
use crate::error::Result;
use crate::params::SdmParams;

pub type CMatrix = DMatrix<Complex64>;
type RMatrix = DMatrix<f64>;

/// Complex matrix held as separate real and imaginary parts so products run
/// through the real gemm kernel.
#[derive(Debug, Clone)]
struct Split {
    re: RMatrix,
    im: RMatrix,
}

impl Split {
    fn from_complex(m: &CMatrix) -> Self {
        Self {
            re: m.map(|z| z.re),
            im: m.map(|z| z.im),
        }
    }

    fn mul(&self, other: &Split) -> Split {
        let mut re = &self.re * &other.re;
        re.gemm(-1.0, &self.im, &other.im, 1.0);
        let mut im = &self.re * &other.im;
        im.gemm(1.0, &self.im, &other.re, 1.0);
        Split { re, im }
    }

    /// self·ρ·other
    fn sandwich(&self, rho: &Split, other: &Split) -> Split {
        self.mul(rho).mul(other)
    }

    fn add_into(&self, out: &mut CMatrix, factor: f64) {
        for ((o, r), i) in out.iter_mut().zip(self.re.iter()).zip(self.im.iter()) {
            o.re += factor * r;
            o.im += factor * i;
        }
    }
}

/// Precomputed operators for one parameter set and dimension.
#[derive(Debug, Clone)]
pub struct FockGenerator {
    params: SdmParams,
    dim: usize,
    /// D(ξ) and D(−ξ) = D(ξ)†.
    d_plus: CMatrix,
    d_minus: CMatrix,
    dp: Split,
    dm: Split,
    // √(n+1) for the lowering operator, zero beyond the edge
    sqrt_up: Vec<f64>,
    // diagonal of the truncated a·a†, which is zero on the top level so the
    // dissipator stays exactly trace preserving
    aad: Vec<f64>,
}

impl FockGenerator {
    pub fn new(params: &SdmParams, dim: usize) -> Result<Self> {
        params.validate()?;
        let d_plus = displacement_matrix(params.xi(), dim)?;
        let d_minus = d_plus.adjoint();
        let sqrt_up = (0..dim).map(|n| ((n + 1) as f64).sqrt()).collect();
        let aad = (0..dim).map(|n| if n + 1 < dim { (n + 1) as f64 } else { 0.0 }).collect();
        Ok(Self {
            params: *params,
            dim,
            dp: Split::from_complex(&d_plus),
            dm: Split::from_complex(&d_minus),
            d_plus,
            d_minus,
            sqrt_up,
            aad,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &SdmParams {
        &self.params
    }

    pub fn d_plus(&self) -> &CMatrix {
        &self.d_plus
    }

    pub fn d_minus(&self) -> &CMatrix {
        &self.d_minus
    }

    /// Thermal loss: (γ/2)(n̄+1)(2aρa† − a†aρ − ρa†a) + (γ/2)n̄(2a†ρa − aa†ρ − ρaa†).
    pub fn loss(&self, rho: &CMatrix) -> CMatrix {
        let n = self.dim;
        let g = self.params.gamma;
        let down = 0.5 * g * (self.params.nbar + 1.0);
        let up = 0.5 * g * self.params.nbar;
        CMatrix::from_fn(n, n, |i, j| {
            let mut v = -(down * (i + j) as f64 + up * (self.aad[i] + self.aad[j])) * rho[(i, j)];
            if i + 1 < n && j + 1 < n {
                v += 2.0 * down * self.sqrt_up[i] * self.sqrt_up[j] * rho[(i + 1, j + 1)];
            }
            if i > 0 && j > 0 {
                v += 2.0 * up * self.sqrt_up[i - 1] * self.sqrt_up[j - 1] * rho[(i - 1, j - 1)];
            }
            v
        })
    }

    /// Unobserved transit ½[D(ξ)ρD(−ξ) + D(−ξ)ρD(ξ)], which equals 𝒜 + ℬ.
    pub fn gain_map(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        self.add_gain(rho, 0.5, &mut out);
        out
    }

    fn add_gain(&self, rho: &CMatrix, factor: f64, out: &mut CMatrix) {
        let r = Split::from_complex(rho);
        self.dp.sandwich(&r, &self.dm).add_into(out, factor);
        self.dm.sandwich(&r, &self.dp).add_into(out, factor);
    }

    /// Unnormalized click map ¼[D(−ξ)ρD(ξ) + D(ξ)ρD(−ξ) ± D(−ξ)ρD(−ξ) ± D(ξ)ρD(ξ)].
    pub fn click(&self, rho: &CMatrix, kind: ClickKind) -> CMatrix {
        let r = Split::from_complex(rho);
        let mut out = CMatrix::zeros(self.dim, self.dim);
        let s = 0.25 * kind.sign();
        self.dm.sandwich(&r, &self.dp).add_into(&mut out, 0.25);
        self.dp.sandwich(&r, &self.dm).add_into(&mut out, 0.25);
        self.dm.sandwich(&r, &self.dm).add_into(&mut out, s);
        self.dp.sandwich(&r, &self.dp).add_into(&mut out, s);
        out
    }

    /// Full generator r(Gρ − ρ) + ℒρ with r = N_ex·γ.
    pub fn rhs(&self, rho: &CMatrix) -> CMatrix {
        let r = self.params.pump_rate();
        let mut out = self.loss(rho);
        if r != 0.0 {
            self.add_gain(rho, 0.5 * r, &mut out);
            out.zip_apply(rho, |o, x| *o -= x * r);
        }
        out
    }
}
