//! Phase-space grids and the χ → W Fourier transform.
//!
//! Wigner functions use the normalization (1/π)∫W d²α = 1, so the vacuum is
//! W₀(α) = 2e^{−2|α|²} and W(α) = (1/π)∫χ(β)e^{αβ*−α*β} d²β.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfn::CharFn;
use crate::error::{Result, SdmError};

/// Uniform sampling of one phase-space axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        let a = Self { min, max, n };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || !(self.min.is_finite() && self.max.is_finite()) || self.max <= self.min {
            return Err(SdmError::InvalidParams {
                name: "grid",
                reason: format!("need min < max and n >= 2, got {}:{}:{}", self.min, self.max, self.n),
            });
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }
}

impl FromStr for AxisSpec {
    type Err = SdmError;

    /// Parses `min:max:n`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || SdmError::InvalidParams {
            name: "grid",
            reason: format!("expected min:max:n, got `{s}`"),
        };
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let min = parts[0].trim().parse::<f64>().map_err(|_| bad())?;
        let max = parts[1].trim().parse::<f64>().map_err(|_| bad())?;
        let n = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
        AxisSpec::new(min, max, n)
    }
}

/// Rectangle over (Re α, Im α).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: AxisSpec,
    pub y: AxisSpec,
}

impl GridSpec {
    pub fn new(x: AxisSpec, y: AxisSpec) -> Self {
        Self { x, y }
    }

    pub fn square(min: f64, max: f64, n: usize) -> Result<Self> {
        let a = AxisSpec::new(min, max, n)?;
        Ok(Self { x: a, y: a })
    }

    pub fn cell_area(&self) -> f64 {
        self.x.step() * self.y.step()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    /// Real Wigner samples, normalized so that (1/π)∫W d²α = 1.
    Wigner,
    /// Complex characteristic-function samples.
    CharFn,
}

impl GridKind {
    pub fn tag(self) -> &'static str {
        match self {
            GridKind::Wigner => "wigner_pi_normalized",
            GridKind::CharFn => "chi_symmetric",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "wigner_pi_normalized" => Some(GridKind::Wigner),
            "chi_symmetric" => Some(GridKind::CharFn),
            _ => None,
        }
    }
}

/// Sampled phase-space function, row-major with Im α (or Im β) as the slow
/// index: `values[iy * nx + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub spec: GridSpec,
    pub kind: GridKind,
    pub values: Vec<Complex64>,
}

impl PhaseSpaceGrid {
    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[iy * self.spec.x.n + ix]
    }

    pub fn real_at(&self, ix: usize, iy: usize) -> f64 {
        self.at(ix, iy).re
    }

    /// Real parts as a dense row-major vector.
    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// (1/π)·Σ W·ΔA, equal to 1 when the grid covers the distribution.
    pub fn wigner_norm(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.re).sum();
        sum * self.spec.cell_area() / std::f64::consts::PI
    }

    /// Trapezoid-weighted version of [`wigner_norm`](Self::wigner_norm).
    pub fn wigner_norm_trapezoid(&self) -> f64 {
        let (nx, ny) = (self.spec.x.n, self.spec.y.n);
        let w = |i: usize, n: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        let mut sum = 0.0;
        for iy in 0..ny {
            for ix in 0..nx {
                sum += w(ix, nx) * w(iy, ny) * self.real_at(ix, iy);
            }
        }
        sum * self.spec.cell_area() / std::f64::consts::PI
    }

    pub fn min_real(&self) -> f64 {
        self.values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min)
    }

    pub fn max_real(&self) -> f64 {
        self.values.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Serializes as CSV: a `#` header naming the grid fields, a `#` line with
    /// their values, then one `x,y,value` row per point (`x,y,re,im` for
    /// complex grids) in 17 significant digits.
    pub fn to_csv(&self) -> String {
        let s = &self.spec;
        let mut out = String::with_capacity(64 * s.x.n * s.y.n);
        out.push_str("# x_min,x_max,nx,y_min,y_max,ny,kind\n");
        let _ = writeln!(
            out,
            "# {},{},{},{},{},{},{}",
            fmt_f64(s.x.min),
            fmt_f64(s.x.max),
            s.x.n,
            fmt_f64(s.y.min),
            fmt_f64(s.y.max),
            s.y.n,
            self.kind.tag()
        );
        for iy in 0..s.y.n {
            let y = s.y.point(iy);
            for ix in 0..s.x.n {
                let x = s.x.point(ix);
                let v = self.at(ix, iy);
                match self.kind {
                    GridKind::Wigner => {
                        let _ = writeln!(out, "{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(v.re));
                    }
                    GridKind::CharFn => {
                        let _ = writeln!(out, "{},{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(v.re), fmt_f64(v.im));
                    }
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |msg: String| SdmError::InvalidParams {
            name: "grid csv",
            reason: msg,
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        if header.trim() != "# x_min,x_max,nx,y_min,y_max,ny,kind" {
            return Err(bad(format!("unexpected header `{header}`")));
        }
        let meta = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| bad("missing metadata line".into()))?;
        let f: Vec<&str> = meta.trim().split(',').collect();
        if f.len() != 7 {
            return Err(bad(format!("metadata has {} fields, expected 7", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
        let cnt = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad count `{s}`")));
        let spec = GridSpec::new(
            AxisSpec::new(num(f[0])?, num(f[1])?, cnt(f[2])?)?,
            AxisSpec::new(num(f[3])?, num(f[4])?, cnt(f[5])?)?,
        );
        let kind = GridKind::from_tag(f[6]).ok_or_else(|| bad(format!("unknown kind `{}`", f[6])))?;
        let expected_cols = if kind == GridKind::Wigner { 3 } else { 4 };
        let mut values = Vec::with_capacity(spec.x.n * spec.y.n);
        for (lineno, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != expected_cols {
                return Err(bad(format!("row {} has {} columns", lineno + 3, cols.len())));
            }
            let re = num(cols[2])?;
            let im = if expected_cols == 4 { num(cols[3])? } else { 0.0 };
            values.push(Complex64::new(re, im));
        }
        if values.len() != spec.x.n * spec.y.n {
            return Err(bad(format!("expected {} rows, found {}", spec.x.n * spec.y.n, values.len())));
        }
        Ok(Self { spec, kind, values })
    }
}

/// Shortest text that round-trips the double exactly, in exponent form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Samples χ on a grid over (Re β, Im β).
pub fn sample_charfn(chi: &dyn CharFn, spec: &GridSpec, parallel: Parallelism) -> PhaseSpaceGrid {
    let xs = spec.x.points();
    let ys = spec.y.points();
    let row = |iy: usize| -> Vec<Complex64> { xs.iter().map(|&x| chi.eval(Complex64::new(x, ys[iy]))).collect() };
    let rows: Vec<Vec<Complex64>> = match parallel {
        Parallelism::Sequential => (0..ys.len()).map(row).collect(),
        Parallelism::Rows => (0..ys.len()).into_par_iter().map(row).collect(),
    };
    PhaseSpaceGrid {
        spec: *spec,
        kind: GridKind::CharFn,
        values: rows.into_iter().flatten().collect(),
    }
}

/// Row-parallel evaluation is bitwise identical to the sequential path
/// because every output point is reduced in a fixed order by one thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    #[default]
    Rows,
}

/// Quadrature box and steps over β = u + iv.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Half-width along Re β.
    pub half_width_re: f64,
    /// Half-width along Im β.
    pub half_width_im: f64,
    pub step_re: f64,
    pub step_im: f64,
}

/// |χ| on the quadrature boundary above this is a hard error.
pub const BOUNDARY_LIMIT: f64 = 1e-10;
/// Target decay of |χ| at the boundary for automatically chosen boxes.
pub const BOUNDARY_TARGET: f64 = 1e-14;
/// Imaginary residue of W above this is a hard error.
pub const IMAG_LIMIT: f64 = 1e-6;

impl Quadrature {
    /// Square box of half-width `trunc_radius`, with steps resolving the
    /// output grid and the state's own extent.
    pub fn square(chi: &dyn CharFn, grid: &GridSpec, trunc_radius: f64) -> Self {
        let (ext_re, ext_im) = wigner_extent(chi);
        Self {
            half_width_re: trunc_radius,
            half_width_im: trunc_radius,
            step_re: alias_free_step(grid.y.max_abs(), ext_im),
            step_im: alias_free_step(grid.x.max_abs(), ext_re),
        }
    }

    /// Box found by scanning where |χ| exceeds [`BOUNDARY_TARGET`], steps as
    /// in [`square`](Self::square).
    pub fn auto(chi: &dyn CharFn, grid: &GridSpec) -> Self {
        let (re, im) = support_box(chi);
        let mut q = Self::square(chi, grid, 0.0);
        q.half_width_re = re;
        q.half_width_im = im;
        q
    }

    fn nodes(half_width: f64, step: f64) -> Vec<(f64, f64)> {
        let n = (half_width / step).ceil().max(1.0) as usize;
        let h = half_width / n as f64;
        (0..=2 * n)
            .map(|i| {
                let w = if i == 0 || i == 2 * n { 0.5 * h } else { h };
                (-half_width + i as f64 * h, w)
            })
            .collect()
    }
}

/// W(α) is periodic in Im α with period π/step_re in the discretized sum, so
/// the aliases must clear both the requested window and the distribution.
fn alias_free_step(window: f64, extent: f64) -> f64 {
    std::f64::consts::PI / (2.0 * (window + extent))
}

/// Rough extents of W along (Re α, Im α) from the second derivatives of χ at
/// the origin: ⟨(Im α)²⟩ = −∂²χ/∂u²/4 and ⟨(Re α)²⟩ = −∂²χ/∂v²/4.
fn wigner_extent(chi: &dyn CharFn) -> (f64, f64) {
    let h = 1e-3;
    let c0 = chi.eval(Complex64::new(0.0, 0.0)).re;
    let d2 = |dir: Complex64| (chi.eval(dir * h).re + chi.eval(-dir * h).re - 2.0 * c0) / (h * h);
    let var_im = (-d2(Complex64::new(1.0, 0.0)) / 4.0).max(0.25);
    let var_re = (-d2(Complex64::new(0.0, 1.0)) / 4.0).max(0.25);
    (10.0 * var_re.sqrt() + 3.0, 10.0 * var_im.sqrt() + 3.0)
}

/// Smallest box (half-widths along Re β, Im β) outside which sampled |χ|
/// stays below the target.
fn support_box(chi: &dyn CharFn) -> (f64, f64) {
    let cap = chi.support_hint().max(4.0);
    let h = 0.05;
    let n = (cap / h).ceil() as usize;
    let coords: Vec<f64> = (0..=2 * n).map(|i| -cap + i as f64 * h).collect();
    let (re, im) = coords
        .par_iter()
        .map(|&v| {
            let mut re_max: f64 = 0.0;
            let mut im_max: f64 = 0.0;
            for &u in &coords {
                if chi.eval(Complex64::new(u, v)).norm() >= BOUNDARY_TARGET {
                    re_max = re_max.max(u.abs());
                    im_max = im_max.max(v.abs());
                }
            }
            (re_max, im_max)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    (re + 0.5, im + 0.5)
}

/// W on `grid` by trapezoid quadrature of (1/π)∫χ(β)e^{αβ*−α*β}d²β.
///
/// The kernel factorizes as e^{2i·Im α·Re β}·e^{−2i·Re α·Im β}, so the
/// transform is done one axis at a time.
pub fn wigner_from_charfn(
    chi: &dyn CharFn,
    grid: &GridSpec,
    quad: &Quadrature,
    parallel: Parallelism,
) -> Result<PhaseSpaceGrid> {
    grid.x.validate()?;
    grid.y.validate()?;
    let us = Quadrature::nodes(quad.half_width_re, quad.step_re);
    let vs = Quadrature::nodes(quad.half_width_im, quad.step_im);

    // boundary audit
    let edge = {
        let (u0, u1) = (us[0].0, us[us.len() - 1].0);
        let (v0, v1) = (vs[0].0, vs[vs.len() - 1].0);
        let a = vs
            .iter()
            .map(|&(v, _)| chi.eval(Complex64::new(u0, v)).norm().max(chi.eval(Complex64::new(u1, v)).norm()));
        let b = us
            .iter()
            .map(|&(u, _)| chi.eval(Complex64::new(u, v0)).norm().max(chi.eval(Complex64::new(u, v1)).norm()));
        a.chain(b).fold(0.0, f64::max)
    };
    if edge > BOUNDARY_LIMIT {
        return Err(SdmError::Truncation(format!(
            "|chi| = {edge:e} on the quadrature boundary (half-widths {}, {})",
            quad.half_width_re, quad.half_width_im
        )));
    }

    let xs = grid.x.points(); // Re α
    let ys = grid.y.points(); // Im α

    // T[j][ix] = Σ_k w_k χ(u_j + i v_k) e^{−2i Re α_ix v_k}
    let kernel_v: Vec<Vec<Complex64>> = xs
        .iter()
        .map(|&ar| vs.iter().map(|&(v, w)| Complex64::from_polar(w, -2.0 * ar * v)).collect())
        .collect();
    let partial = |&(u, _): &(f64, f64)| -> Vec<Complex64> {
        let samples: Vec<Complex64> = vs.iter().map(|&(v, _)| chi.eval(Complex64::new(u, v))).collect();
        kernel_v
            .iter()
            .map(|k| k.iter().zip(&samples).map(|(a, b)| a * b).sum())
            .collect()
    };
    let t: Vec<Vec<Complex64>> = match parallel {
        Parallelism::Sequential => us.iter().map(partial).collect(),
        Parallelism::Rows => us.par_iter().map(partial).collect(),
    };

    // W[iy][ix] = (1/π) Σ_j w_j T[j][ix] e^{2i Im α_iy u_j}
    let inv_pi = 1.0 / std::f64::consts::PI;
    let row = |&ai: &f64| -> Vec<Complex64> {
        let phases: Vec<Complex64> = us.iter().map(|&(u, w)| Complex64::from_polar(w, 2.0 * ai * u)).collect();
        (0..xs.len())
            .map(|ix| phases.iter().zip(&t).map(|(p, tj)| p * tj[ix]).sum::<Complex64>() * inv_pi)
            .collect()
    };
    let rows: Vec<Vec<Complex64>> = match parallel {
        Parallelism::Sequential => ys.iter().map(row).collect(),
        Parallelism::Rows => ys.par_iter().map(row).collect(),
    };
    let mut values: Vec<Complex64> = rows.into_iter().flatten().collect();

    let max_imag = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if max_imag > IMAG_LIMIT {
        return Err(SdmError::NonReal(max_imag));
    }
    for v in &mut values {
        v.im = 0.0;
    }
    Ok(PhaseSpaceGrid {
        spec: *grid,
        kind: GridKind::Wigner,
        values,
    })
}

/// Convenience wrapper choosing the quadrature automatically.
pub fn wigner_auto(chi: &dyn CharFn, grid: &GridSpec, parallel: Parallelism) -> Result<PhaseSpaceGrid> {
    let quad = Quadrature::auto(chi, grid);
    wigner_from_charfn(chi, grid, &quad, parallel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::{FnCharFn, Vacuum};

    #[test]
    fn axis_parsing() {
        let a: AxisSpec = "-8:8:161".parse().unwrap();
        assert_eq!((a.min, a.max, a.n), (-8.0, 8.0, 161));
        assert!((a.step() - 0.1).abs() < 1e-15);
        assert!("1:0:5".parse::<AxisSpec>().is_err());
        assert!("0:1:1".parse::<AxisSpec>().is_err());
        assert!("0:1".parse::<AxisSpec>().is_err());
    }

    #[test]
    fn vacuum_wigner() {
        let grid = GridSpec::square(-3.0, 3.0, 41).unwrap();
        let w = wigner_auto(&Vacuum, &grid, Parallelism::Sequential).unwrap();
        for iy in 0..41 {
            for ix in 0..41 {
                let (x, y) = (grid.x.point(ix), grid.y.point(iy));
                let exact = 2.0 * (-2.0 * (x * x + y * y)).exp();
                assert!((w.real_at(ix, iy) - exact).abs() < 1e-10);
            }
        }
        assert!((w.real_at(20, 20) - 2.0).abs() < 1e-10);
        assert!((w.wigner_norm_trapezoid() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn boundary_audit_rejects_small_box() {
        let grid = GridSpec::square(-1.0, 1.0, 5).unwrap();
        let mut q = Quadrature::auto(&Vacuum, &grid);
        q.half_width_re = 2.0;
        q.half_width_im = 2.0;
        assert!(matches!(
            wigner_from_charfn(&Vacuum, &grid, &q, Parallelism::Sequential),
            Err(SdmError::Truncation(_))
        ));
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        // χ(β) = e^{−|β|²/2}·e^{i Re β} breaks χ(−β) = χ(β)*
        let bad = FnCharFn(|b: Complex64| Complex64::from_polar((-0.5 * b.norm_sqr()).exp(), b.re) * Complex64::new(0.0, 1.0));
        let grid = GridSpec::square(-2.0, 2.0, 9).unwrap();
        assert!(matches!(
            wigner_auto(&bad, &grid, Parallelism::Sequential),
            Err(SdmError::NonReal(_))
        ));
    }

    #[test]
    fn parallel_and_sequential_are_bitwise_equal() {
        let grid = GridSpec::square(-2.0, 2.0, 17).unwrap();
        let a = wigner_auto(&Vacuum, &grid, Parallelism::Sequential).unwrap();
        let b = wigner_auto(&Vacuum, &grid, Parallelism::Rows).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip() {
        let grid = GridSpec::new(AxisSpec::new(-1.0, 1.0, 3).unwrap(), AxisSpec::new(0.0, 2.0, 4).unwrap());
        let w = wigner_auto(&Vacuum, &grid, Parallelism::Sequential).unwrap();
        let text = w.to_csv();
        assert!(text.starts_with("# x_min,x_max,nx,y_min,y_max,ny,kind\n"));
        assert_eq!(PhaseSpaceGrid::from_csv(&text).unwrap(), w);
        let chi = sample_charfn(&Vacuum, &grid, Parallelism::Sequential);
        assert_eq!(PhaseSpaceGrid::from_csv(&chi.to_csv()).unwrap(), chi);
    }
}
