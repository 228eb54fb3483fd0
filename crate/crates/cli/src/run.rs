//! Scenario dispatch. Every run writes its files plus a manifest into the
//! configured output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use sdm_core::coherent::CoherentOpSum;
use sdm_core::correlations::{click_probability, two_click_correlation, CLICK_PAIRS};
use sdm_core::dynamics::{all_detection_records, multi_atom_unobserved, wigner_opsum};
use sdm_core::fock::{self, oracle_stats, pegg_barnett};
use sdm_core::propagator::{steady_stats, transient_moments, Evolved, FieldStats, Moments, SteadyState};
use sdm_core::wigner::{fmt_f64, wigner_auto, GridKind, GridSpec, Parallelism, PhaseSpaceGrid};
use sdm_core::{wigner, SdmError, SdmParams, SharedCharFn, Vacuum};
use serde::Serialize;

use crate::config::{
    CatsOpts, CorrelationsOpts, Detect, EvolveOpts, PhaseOpts, RunConfig, Scenario, StatsOpts, SteadyOpts,
};
use crate::error::{CliError, CliResult};
use crate::manifest::{Manifest, OutputDir};
use crate::validate::{self, ValidationReport, PRINTED_FORM_RATES};

/// What a successful run leaves behind.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    /// Text meant for standard output.
    pub stdout: String,
    pub report: Option<ValidationReport>,
}

pub fn run(cfg: &RunConfig) -> CliResult<RunOutcome> {
    cfg.validate()?;
    let p = cfg.params;
    let mut out = OutputDir::create(&cfg.out)?;
    log::info!("{} into {}", cfg.scenario.name(), cfg.out.display());
    let mut tolerances = BTreeMap::new();
    let mut stdout = String::new();
    let mut report = None;
    match &cfg.scenario {
        Scenario::Cats(o) => cats(&p, o, &mut out)?,
        Scenario::Evolve(o) => {
            wigner_tolerances(&mut tolerances);
            evolve(&p, o, &mut out)?
        }
        Scenario::Steady(o) => {
            wigner_tolerances(&mut tolerances);
            if o.fock {
                fock_tolerances(&mut tolerances);
            }
            steady(&p, o, &mut out)?
        }
        Scenario::Stats(o) => {
            if o.oracle {
                fock_tolerances(&mut tolerances);
            }
            stdout = stats(&p, o, &mut out)?
        }
        Scenario::Correlations(o) => correlations(&p, o, &mut out)?,
        Scenario::Phase(o) => {
            fock_tolerances(&mut tolerances);
            phase(&p, o, &mut out)?
        }
        Scenario::Validate(_) => {
            fock_tolerances(&mut tolerances);
            validation_tolerances(&mut tolerances);
            let r = validate::validate(&p)?;
            out.write_json("validate.json", &r)?;
            stdout = r.to_table();
            report = Some(r);
        }
    }
    let manifest = out.finish(&p, &cfg.scenario, tolerances)?;
    if let Some(r) = &report {
        if !r.passed() {
            let names: Vec<&str> = r.failures().iter().map(|c| c.name.as_str()).collect();
            return Err(CliError::Tolerance(format!("{}\n{stdout}", names.join(", "))));
        }
    }
    Ok(RunOutcome {
        manifest,
        stdout,
        report,
    })
}

fn wigner_tolerances(t: &mut BTreeMap<String, f64>) {
    t.insert("wigner_boundary".into(), wigner::BOUNDARY_LIMIT);
    t.insert("wigner_imaginary".into(), wigner::IMAG_LIMIT);
}

fn fock_tolerances(t: &mut BTreeMap<String, f64>) {
    t.insert("fock_tail_mass".into(), fock::TAIL_LIMIT);
    t.insert("fock_integrator".into(), fock::DEFAULT_TOL);
    t.insert("fock_steady_residual".into(), fock::STEADY_RESIDUAL);
    t.insert("fock_trace_drift".into(), fock::TRACE_DRIFT_LIMIT);
}

fn validation_tolerances(t: &mut BTreeMap<String, f64>) {
    t.insert("moments".into(), validate::MOMENT_TOL);
    t.insert("mandel_q".into(), validate::MANDEL_TOL);
    t.insert("propagator".into(), validate::PROPAGATOR_TOL);
    t.insert("semigroup".into(), validate::SEMIGROUP_TOL);
    t.insert("correlations".into(), validate::CORRELATION_TOL);
    t.insert("decorrelation".into(), validate::DECORRELATION_TOL);
    t.insert("phase".into(), validate::PHASE_TOL);
    t.insert("fixed_point".into(), validate::FIXED_POINT_TOL);
    t.insert("click_sum".into(), validate::CLICK_SUM_TOL);
}

/// Exact Wigner function of a dyad sum sampled on a grid.
pub fn opsum_grid(s: &CoherentOpSum, spec: &GridSpec) -> PhaseSpaceGrid {
    let xs = spec.x.points();
    let ys = spec.y.points();
    let values: Vec<Complex64> = ys
        .par_iter()
        .flat_map_iter(|&y| {
            xs.iter()
                .map(move |&x| Complex64::new(wigner_opsum(s, Complex64::new(x, y)), 0.0))
                .collect::<Vec<_>>()
        })
        .collect();
    PhaseSpaceGrid {
        spec: *spec,
        kind: GridKind::Wigner,
        values,
    }
}

fn cats(p: &SdmParams, o: &CatsOpts, out: &mut OutputDir) -> CliResult<()> {
    let spec = o.grid.spec();
    match o.detect {
        Detect::None => {
            let s = multi_atom_unobserved(o.atoms, p)?;
            out.write(&format!("wigner_m{}.csv", o.atoms), &opsum_grid(&s, &spec).to_csv())?;
        }
        Detect::All => {
            let mut records = String::from("record,probability\n");
            for (rec, state) in all_detection_records(o.atoms, p) {
                let _ = writeln!(records, "{},{}", rec.label(), fmt_f64(rec.probability));
                match state {
                    Some(s) => {
                        out.write(&format!("wigner_{}.csv", rec.label()), &opsum_grid(&s, &spec).to_csv())?;
                    }
                    None => log::warn!("record {} is forbidden, no grid written", rec.label()),
                }
            }
            out.write("records.csv", &records)?;
        }
    }
    Ok(())
}

/// File name for a grid sampled at time t.
pub fn time_file(prefix: &str, t: f64) -> String {
    format!("{prefix}_t{t}.csv")
}

fn evolve(p: &SdmParams, o: &EvolveOpts, out: &mut OutputDir) -> CliResult<()> {
    let spec = o.grid.spec();
    let (chi0, m0): (SharedCharFn, Moments) = match o.alpha0 {
        Some([re, im]) => {
            let a = Complex64::new(re, im);
            (Arc::new(CoherentOpSum::coherent(a)), Moments::coherent(a))
        }
        None => (Arc::new(Vacuum), Moments::vacuum()),
    };
    let mut moments = String::from("t,mean_n,re_a,im_a,var_x1,var_x2\n");
    for &t in &o.times.0 {
        let chi = Evolved::new(chi0.clone(), t, *p)?;
        let w = wigner_auto(&chi, &spec, Parallelism::Rows)?;
        log::info!("γt = {t}: W in [{:.4}, {:.4}]", w.min_real(), w.max_real());
        out.write(&time_file("wigner", t), &w.to_csv())?;
        let m = transient_moments(t, &m0, p);
        let s = FieldStats::from_moments(&m, f64::NAN);
        let _ = writeln!(
            moments,
            "{},{},{},{},{},{}",
            fmt_f64(t),
            fmt_f64(m.mean_n),
            fmt_f64(m.mean_a.re),
            fmt_f64(m.mean_a.im),
            fmt_f64(s.var_x1),
            fmt_f64(s.var_x2)
        );
    }
    out.write("moments.csv", &moments)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsRecord {
    pub mean_n: f64,
    pub var_n: f64,
    pub var_x1: f64,
    pub var_x2: f64,
    pub mandel_q: f64,
    pub fano_f: f64,
}

impl From<FieldStats> for StatsRecord {
    fn from(s: FieldStats) -> Self {
        Self {
            mean_n: s.mean_n,
            var_n: s.var_n,
            var_x1: s.var_x1,
            var_x2: s.var_x2,
            mandel_q: s.mandel_q,
            fano_f: s.fano_f,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRecord {
    #[serde(flatten)]
    pub stats: StatsRecord,
    pub fock_dim: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsOutput {
    #[serde(flatten)]
    pub stats: StatsRecord,
    pub params: SdmParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleRecord>,
}

fn oracle_record(p: &SdmParams) -> CliResult<(fock::FockGenerator, fock::SteadyReport, OracleRecord)> {
    let (gen, rep) = fock::steady_state(p)?;
    let rec = OracleRecord {
        stats: oracle_stats(&rep.rho).into(),
        fock_dim: gen.dim(),
        residual: rep.residual,
    };
    Ok((gen, rep, rec))
}

fn stats(p: &SdmParams, o: &StatsOpts, out: &mut OutputDir) -> CliResult<String> {
    let oracle = if o.oracle { Some(oracle_record(p)?.2) } else { None };
    let record = StatsOutput {
        stats: steady_stats(p)?.into(),
        params: *p,
        oracle,
    };
    out.write_json("stats.json", &record)?;
    let mut text = serde_json::to_string_pretty(&record).expect("serializable stats");
    text.push('\n');
    Ok(text)
}

fn steady(p: &SdmParams, o: &SteadyOpts, out: &mut OutputDir) -> CliResult<()> {
    let ss = SteadyState::new(*p);
    let w = wigner_auto(&ss, &o.grid.spec(), Parallelism::Rows)?;
    out.write("wigner_ss.csv", &w.to_csv())?;
    let oracle = if o.fock {
        let (_, rep, rec) = oracle_record(p)?;
        out.write("rho.csv", &rep.rho.to_csv())?;
        Some(rec)
    } else {
        None
    };
    let record = StatsOutput {
        stats: steady_stats(p)?.into(),
        params: *p,
        oracle,
    };
    out.write_json("stats.json", &record)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct CorrelationSidecar {
    params: SdmParams,
    p_e: f64,
    p_g: f64,
    columns: Vec<String>,
    printed_forms: Vec<validate::PrintedFormDelta>,
}

fn correlations(p: &SdmParams, o: &CorrelationsOpts, out: &mut OutputDir) -> CliResult<()> {
    let times = &o.times.0;
    let mut columns = Vec::new();
    let mut labels = Vec::new();
    let mut printed_forms = Vec::new();
    for (first, second) in CLICK_PAIRS {
        let label = format!("G_{}{}", first.level(), second.level());
        let values = times
            .iter()
            .map(|&t| match two_click_correlation(first, second, t, p) {
                Ok(g) => Ok(g),
                Err(SdmError::DegenerateParams(_)) => Ok(f64::NAN),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        for rate in PRINTED_FORM_RATES {
            let delta = times
                .iter()
                .zip(&values)
                .map(|(&t, g)| {
                    sdm_core::correlations::printed_two_click_correlation(first, second, t, rate * p.gamma, p)
                        .map(|v| (v - g).abs())
                })
                .collect::<Result<Vec<f64>, _>>()
                .ok()
                .map(|d| d.into_iter().fold(0.0, f64::max));
            printed_forms.push(validate::PrintedFormDelta {
                rate_a: rate,
                pair: label.clone(),
                max_abs_delta: delta,
            });
        }
        columns.push(values);
        labels.push(label);
    }
    let mut csv = format!("t,{}\n", labels.join(","));
    for (i, &t) in times.iter().enumerate() {
        let row: Vec<String> = columns.iter().map(|c| fmt_f64(c[i])).collect();
        let _ = writeln!(csv, "{},{}", fmt_f64(t), row.join(","));
    }
    out.write("correlations.csv", &csv)?;
    let ss = SteadyState::new(*p);
    let sidecar = CorrelationSidecar {
        params: *p,
        p_e: click_probability(sdm_core::ClickKind::B, &ss, p),
        p_g: click_probability(sdm_core::ClickKind::A, &ss, p),
        columns: labels,
        printed_forms,
    };
    out.write_json("correlations.json", &sidecar)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct PhaseSummary {
    fock_dim: usize,
    residual: f64,
    n_theta: usize,
    maxima: Vec<f64>,
    norm: f64,
    mirror_defect: f64,
}

fn phase(p: &SdmParams, o: &PhaseOpts, out: &mut OutputDir) -> CliResult<()> {
    let (gen, rep) = fock::steady_state(p)?;
    let pd = pegg_barnett(&rep.rho, o.n_theta)?;
    out.write("phase.csv", &pd.to_csv())?;
    out.write("rho.csv", &rep.rho.to_csv())?;
    let summary = PhaseSummary {
        fock_dim: gen.dim(),
        residual: rep.residual,
        n_theta: o.n_theta,
        maxima: pd.local_maxima().into_iter().map(|i| pd.thetas[i]).collect(),
        norm: pd.norm(),
        mirror_defect: pd.mirror_defect(),
    };
    out.write_json("phase.json", &summary)?;
    Ok(())
}
