//! Truncated number-basis engine: the full master equation integrated
//! directly, with observables computed by matrix traces.

pub mod displacement;
pub mod generator;
pub mod integrator;
pub mod phase;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

pub use displacement::{coherent_amplitudes, displacement_block, displacement_matrix, padded_dimension};
pub use generator::{CMatrix, FockGenerator};
pub use integrator::{Dopri5, StepStats};
pub use phase::{pegg_barnett, PhaseDistribution};

use crate::charfn::ClickKind;
use crate::coherent::CoherentOpSum;
use crate::error::{Result, SdmError};
use crate::params::SdmParams;
use crate::propagator::{FieldStats, Moments};
use crate::wigner::{fmt_f64, GridKind, GridSpec, Parallelism, PhaseSpaceGrid};

/// Tail population allowed in the top 10% of levels.
pub const TAIL_LIMIT: f64 = 1e-8;
/// Default integrator tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Residual max|ℒ₀ρ| that defines convergence to the steady state.
pub const STEADY_RESIDUAL: f64 = 1e-10;
/// Norm lost through the top of the basis before a run counts as truncated.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-9;

fn check_drift(drift: f64, dim: usize) -> Result<()> {
    if drift >= TRACE_DRIFT_LIMIT {
        return Err(SdmError::Truncation(format!(
            "trace drifted by {drift:e} on a {dim}-level basis"
        )));
    }
    Ok(())
}

/// Hermitian density matrix on `dim` number states.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    pub data: CMatrix,
    /// Population of the top 10% of levels.
    pub tail_mass: f64,
}

/// Population in the top ⌈dim/10⌉ levels.
pub fn tail_mass(data: &CMatrix) -> f64 {
    let n = data.nrows();
    let top = n.div_ceil(10);
    (n - top..n).map(|k| data[(k, k)].re).sum::<f64>().abs()
}

impl FockDensityMatrix {
    pub fn from_matrix(data: CMatrix) -> Self {
        let tail_mass = tail_mass(&data);
        Self { data, tail_mass }
    }

    pub fn vacuum(dim: usize) -> Self {
        let mut data = CMatrix::zeros(dim, dim);
        data[(0, 0)] = Complex64::new(1.0, 0.0);
        Self::from_matrix(data)
    }

    /// Thermal state with mean occupation `nbar`, populations truncated but
    /// not renormalized.
    pub fn thermal(nbar: f64, dim: usize) -> Self {
        let q = nbar / (nbar + 1.0);
        let mut data = CMatrix::zeros(dim, dim);
        for n in 0..dim {
            data[(n, n)] = Complex64::new(q.powi(n as i32) / (nbar + 1.0), 0.0);
        }
        Self::from_matrix(data)
    }

    pub fn coherent(alpha: Complex64, dim: usize) -> Self {
        let v = DMatrix::from_vec(dim, 1, coherent_amplitudes(alpha, dim));
        Self::from_matrix(&v * v.adjoint())
    }

    /// Σ c·|k⟩⟨b| expanded on number states.
    pub fn from_opsum(s: &CoherentOpSum, dim: usize) -> Self {
        let mut data = CMatrix::zeros(dim, dim);
        for d in s.terms() {
            let k = DMatrix::from_vec(dim, 1, coherent_amplitudes(d.ket, dim));
            let b = DMatrix::from_vec(dim, 1, coherent_amplitudes(d.bra, dim));
            data += (&k * b.adjoint()) * d.coeff;
        }
        Self::from_matrix(data)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.data - self.data.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace().re;
        if !(tr > 0.0) {
            return Err(SdmError::DegenerateOutcome(tr));
        }
        Ok(Self::from_matrix(&self.data / Complex64::new(tr, 0.0)))
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.data[(n, n)].re).collect()
    }

    /// Errors when the top levels hold more than the tail limit.
    pub fn audit(&self) -> Result<()> {
        if self.tail_mass >= TAIL_LIMIT {
            return Err(SdmError::Truncation(format!(
                "tail mass {:e} in the top levels of a {}-level basis",
                self.tail_mass,
                self.dim()
            )));
        }
        Ok(())
    }

    /// CSV `m,n,re,im` for entries with |ρ_mn| > 1e-12.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,re,im\n");
        let n = self.dim();
        for m in 0..n {
            for k in 0..n {
                let v = self.data[(m, k)];
                if v.norm() > 1e-12 {
                    out.push_str(&format!("{m},{k},{},{}\n", fmt_f64(v.re), fmt_f64(v.im)));
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str, dim: usize) -> Result<Self> {
        let mut data = CMatrix::zeros(dim, dim);
        let bad = |line: usize, msg: &str| SdmError::Domain(format!("density CSV line {}: {msg}", line + 1));
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                if line.trim() != "m,n,re,im" {
                    return Err(bad(i, "expected header `m,n,re,im`"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(i, "expected 4 fields"));
            }
            let m: usize = f[0].parse().map_err(|_| bad(i, "bad row index"))?;
            let k: usize = f[1].parse().map_err(|_| bad(i, "bad column index"))?;
            let re: f64 = f[2].parse().map_err(|_| bad(i, "bad real part"))?;
            let im: f64 = f[3].parse().map_err(|_| bad(i, "bad imaginary part"))?;
            if m >= dim || k >= dim {
                return Err(bad(i, "index outside the basis"));
            }
            data[(m, k)] = Complex64::new(re, im);
        }
        Ok(Self::from_matrix(data))
    }
}

/// ⌈(|ξ|(2 + 2N_ex) + 3√(n̄+1))²⌉ clamped to [16, 400].
pub fn dimension_heuristic(params: &SdmParams) -> usize {
    let reach = params.xi_mag * (2.0 + 2.0 * params.n_ex) + 3.0 * (params.nbar + 1.0).sqrt();
    (reach * reach).ceil().clamp(16.0, 400.0) as usize
}

/// States sampled along one trajectory with integration diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FockDensityMatrix>,
    pub stats: StepStats,
    /// Largest |Tr ρ(t) − Tr ρ(0)| seen at the sample times.
    pub max_trace_drift: f64,
}

/// Integrates ρ' = ℒ₀ρ and records ρ at each requested time (ascending,
/// ≥ 0). Fails with a truncation error if the tail mass or the trace drift
/// exceeds its limit at any sample.
pub fn evolve_sampled(gen: &FockGenerator, rho0: &FockDensityMatrix, times: &[f64], tol: f64) -> Result<Trajectory> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(SdmError::Domain("sample times must be ascending and non-negative".into()));
    }
    if rho0.dim() != gen.dim() {
        return Err(SdmError::InvalidParams {
            name: "dim",
            reason: format!("state has {} levels, generator {}", rho0.dim(), gen.dim()),
        });
    }
    let mut ode = Dopri5::new(|r: &CMatrix| gen.rhs(r), tol);
    let mut y = rho0.data.clone();
    let tr0 = y.trace();
    let mut t = 0.0;
    let mut states = Vec::with_capacity(times.len());
    let mut drift: f64 = 0.0;
    for &ts in times {
        ode.advance(&mut y, t, ts)?;
        t = ts;
        let state = FockDensityMatrix::from_matrix(y.clone());
        state.audit()?;
        drift = drift.max((state.trace() - tr0).norm());
        check_drift(drift, gen.dim())?;
        states.push(state);
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        stats: ode.stats,
        max_trace_drift: drift,
    })
}

/// ρ(t_final) from ρ₀.
pub fn evolve(gen: &FockGenerator, rho0: &FockDensityMatrix, t_final: f64, tol: f64) -> Result<FockDensityMatrix> {
    let mut traj = evolve_sampled(gen, rho0, &[t_final], tol)?;
    Ok(traj.states.pop().expect("one sample"))
}

/// Result of relaxing to the stationary state.
#[derive(Debug, Clone)]
pub struct SteadyReport {
    pub rho: FockDensityMatrix,
    pub residual: f64,
    pub elapsed: f64,
    pub stats: StepStats,
    pub trace_drift: f64,
}

/// Integrates from the vacuum in chunks of 2/γ until max|ℒ₀ρ| < `residual`.
///
/// An explicit integrator leaves the stiff modes excited at the level of its
/// local tolerance, which puts a floor of roughly |λ_max|·tol under the
/// residual. Once the transient is over the tolerance is therefore tightened
/// to a thousandth of the target residual.
pub fn steady_state_with(gen: &FockGenerator, tol: f64, residual: f64, t_max: f64) -> Result<SteadyReport> {
    let dim = gen.dim();
    let chunk = 2.0 / gen.params().gamma;
    let polish_tol = (1e-3 * residual).clamp(1e-14, tol);
    let mut ode = Dopri5::new(|r: &CMatrix| gen.rhs(r), tol);
    let mut y = FockDensityMatrix::vacuum(dim).data;
    let mut t = 0.0;
    loop {
        ode.advance(&mut y, t, t + chunk)?;
        t += chunk;
        check_drift((y.trace() - 1.0).norm(), dim)?;
        let res = gen.rhs(&y).camax();
        if res < residual {
            let rho = FockDensityMatrix::from_matrix(y);
            rho.audit()?;
            let trace_drift = (rho.trace() - 1.0).norm();
            return Ok(SteadyReport {
                rho,
                residual: res,
                elapsed: t,
                stats: ode.stats,
                trace_drift,
            });
        }
        if res < 1e3 * residual.max(tol) {
            ode.set_tol(polish_tol);
        }
        if t >= t_max {
            return Err(SdmError::NotConverged(format!(
                "steady-state residual {res:e} after γt = {}",
                t * gen.params().gamma
            )));
        }
    }
}

/// Steady state on a basis chosen by the dimension heuristic, enlarged by a
/// quarter at a time until the tail and trace-drift audits pass.
pub fn steady_state(params: &SdmParams) -> Result<(FockGenerator, SteadyReport)> {
    let mut dim = dimension_heuristic(params);
    loop {
        let gen = FockGenerator::new(params, dim)?;
        match steady_state_with(&gen, DEFAULT_TOL, STEADY_RESIDUAL, 400.0 / params.gamma) {
            Err(SdmError::Truncation(_)) if dim < 400 => dim = (dim + dim / 4).min(400),
            Ok(rep) => return Ok((gen, rep)),
            Err(e) => return Err(e),
        }
    }
}

/// Unnormalized click map and its trace.
pub fn oracle_click(gen: &FockGenerator, rho: &FockDensityMatrix, kind: ClickKind) -> (FockDensityMatrix, f64) {
    let out = FockDensityMatrix::from_matrix(gen.click(&rho.data, kind));
    let tr = out.trace().re;
    (out, tr)
}

/// ⟨a⟩, ⟨a†a⟩, ⟨a²⟩ and (Δn)² by direct traces.
pub fn oracle_moments(rho: &FockDensityMatrix) -> (Moments, f64) {
    let d = &rho.data;
    let n = rho.dim();
    let tr = d.trace().re;
    let mut mean_a = Complex64::new(0.0, 0.0);
    let mut mean_a2 = Complex64::new(0.0, 0.0);
    let (mut n1, mut n2) = (0.0, 0.0);
    for k in 0..n {
        let kf = k as f64;
        n1 += kf * d[(k, k)].re;
        n2 += kf * kf * d[(k, k)].re;
        // Tr[ρa] = Σ √(k+1) ρ_{k+1,k}
        if k + 1 < n {
            mean_a += (kf + 1.0).sqrt() * d[(k + 1, k)];
        }
        if k + 2 < n {
            mean_a2 += ((kf + 1.0) * (kf + 2.0)).sqrt() * d[(k + 2, k)];
        }
    }
    let m = Moments {
        mean_a: mean_a / tr,
        mean_n: n1 / tr,
        mean_a2: mean_a2 / tr,
    };
    let var_n = n2 / tr - m.mean_n * m.mean_n;
    (m, var_n)
}

pub fn oracle_stats(rho: &FockDensityMatrix) -> FieldStats {
    let (m, var_n) = oracle_moments(rho);
    FieldStats::from_moments(&m, var_n)
}

/// Tr[ρ D(β)].
pub fn oracle_charfn(rho: &FockDensityMatrix, beta: Complex64) -> Complex64 {
    let n = rho.dim();
    let d = displacement_block(beta, n, n);
    // Tr[ρD] = Σ_{mk} ρ_{mk} D_{km}
    rho.data.iter().zip(d.transpose().iter()).map(|(a, b)| a * b).sum()
}

/// W(α) = 2·Tr[D(−α)ρD(α)Π] with Π the photon-number parity, so that
/// (1/π)∫W d²α = 1. The displaced state is formed on a padded basis.
pub fn oracle_wigner_point(rho: &FockDensityMatrix, alpha: Complex64) -> f64 {
    let n = rho.dim();
    let rows = padded_dimension(alpha, n);
    let x = displacement_block(-alpha, rows, n);
    let xr = &x * &rho.data;
    let mut w = 0.0;
    for m in 0..rows {
        let mut diag = Complex64::new(0.0, 0.0);
        for k in 0..n {
            diag += xr[(m, k)] * x[(m, k)].conj();
        }
        w += if m % 2 == 0 { diag.re } else { -diag.re };
    }
    2.0 * w
}

pub fn oracle_wigner(rho: &FockDensityMatrix, grid: &GridSpec, parallel: Parallelism) -> PhaseSpaceGrid {
    let (nx, ny) = (grid.x.n, grid.y.n);
    let row = |iy: usize| -> Vec<Complex64> {
        (0..nx)
            .map(|ix| Complex64::new(oracle_wigner_point(rho, Complex64::new(grid.x.point(ix), grid.y.point(iy))), 0.0))
            .collect()
    };
    let rows: Vec<Vec<Complex64>> = match parallel {
        Parallelism::Sequential => (0..ny).map(row).collect(),
        Parallelism::Rows => (0..ny).into_par_iter().map(row).collect(),
    };
    PhaseSpaceGrid {
        spec: *grid,
        kind: GridKind::Wigner,
        values: rows.into_iter().flatten().collect(),
    }
}
