//! Run configuration. Command-line flags and JSON config files both resolve
//! to a [`RunConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use sdm_core::wigner::{AxisSpec, GridSpec};
use sdm_core::SdmParams;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_OUT: &str = "sdm-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: SdmParams,
    pub scenario: Scenario,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from(DEFAULT_OUT)
}

impl RunConfig {
    /// Parses a JSON config; serde reports the line and column of the
    /// offending field.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        self.params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        match &self.scenario {
            Scenario::Cats(o) => {
                if o.detect == Detect::All && !(1..=MAX_DETECTED_ATOMS).contains(&o.atoms) {
                    return Err(CliError::Config(format!(
                        "--detect all needs 1..={MAX_DETECTED_ATOMS} atoms, got {}",
                        o.atoms
                    )));
                }
                if o.atoms > 64 {
                    return Err(CliError::Config(format!("at most 64 atoms, got {}", o.atoms)));
                }
            }
            Scenario::Evolve(o) => o.times.check_nonnegative()?,
            Scenario::Correlations(o) => {
                o.times.check_nonnegative()?;
                o.times.check_ascending()?;
            }
            Scenario::Phase(o) => {
                if o.n_theta < 64 {
                    return Err(CliError::Config(format!("--n-theta must be at least 64, got {}", o.n_theta)));
                }
            }
            Scenario::Steady(_) | Scenario::Stats(_) | Scenario::Validate(_) => {}
        }
        Ok(())
    }
}

/// Upper limit for `--detect all`, which writes 2^m grids.
pub const MAX_DETECTED_ATOMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scenario {
    Cats(CatsOpts),
    Evolve(EvolveOpts),
    Steady(SteadyOpts),
    Stats(StatsOpts),
    Correlations(CorrelationsOpts),
    Phase(PhaseOpts),
    Validate(ValidateOpts),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Cats(_) => "cats",
            Scenario::Evolve(_) => "evolve",
            Scenario::Steady(_) => "steady",
            Scenario::Stats(_) => "stats",
            Scenario::Correlations(_) => "correlations",
            Scenario::Phase(_) => "phase",
            Scenario::Validate(_) => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Detect {
    /// Atoms pass unobserved.
    None,
    /// One grid per detection record.
    All,
}

/// Re α and Im α axes of a Wigner grid. The Im axis defaults to the Re axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct GridOpts {
    /// Re α axis as min:max:n
    #[arg(long, default_value = "-4:4:81", allow_hyphen_values = true)]
    #[serde(deserialize_with = "axis_from_str", default = "default_axis")]
    pub grid: AxisSpec,
    /// Im α axis as min:max:n
    #[arg(long, allow_hyphen_values = true)]
    #[serde(deserialize_with = "opt_axis_from_str", default)]
    pub grid_im: Option<AxisSpec>,
}

impl GridOpts {
    pub fn spec(&self) -> GridSpec {
        GridSpec::new(self.grid, self.grid_im.unwrap_or(self.grid))
    }
}

fn default_axis() -> AxisSpec {
    AxisSpec::new(-4.0, 4.0, 81).expect("valid default axis")
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AxisRepr {
    Text(String),
    Fields(AxisSpec),
}

impl AxisRepr {
    fn resolve<E: serde::de::Error>(self) -> Result<AxisSpec, E> {
        let axis = match self {
            AxisRepr::Text(s) => s.parse().map_err(E::custom)?,
            AxisRepr::Fields(a) => a,
        };
        axis.validate().map_err(E::custom)?;
        Ok(axis)
    }
}

fn axis_from_str<'de, D: Deserializer<'de>>(d: D) -> Result<AxisSpec, D::Error> {
    AxisRepr::deserialize(d)?.resolve()
}

fn opt_axis_from_str<'de, D: Deserializer<'de>>(d: D) -> Result<Option<AxisSpec>, D::Error> {
    Option::<AxisRepr>::deserialize(d)?.map(AxisRepr::resolve).transpose()
}

/// Ascending or listed sample times, given as `t1,t2,...` or `min:max:n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TimeGrid(pub Vec<f64>);

impl TimeGrid {
    fn check_nonnegative(&self) -> CliResult<()> {
        if self.0.is_empty() || self.0.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CliError::Config(format!("times must be finite and >= 0, got {self}")));
        }
        Ok(())
    }

    fn check_ascending(&self) -> CliResult<()> {
        if self.0.windows(2).any(|w| w[1] < w[0]) {
            return Err(CliError::Config(format!("times must be ascending, got {self}")));
        }
        Ok(())
    }
}

impl fmt::Display for TimeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|t| t.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for TimeGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.contains(':') {
            let axis: AxisSpec = s.parse().map_err(|e: sdm_core::SdmError| e.to_string())?;
            return Ok(TimeGrid(axis.points()));
        }
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad time `{p}` in `{s}`")))
            .collect::<Result<Vec<_>, _>>()
            .map(TimeGrid)
    }
}

impl<'de> Deserialize<'de> for TimeGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            List(Vec<f64>),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::List(v) => Ok(TimeGrid(v)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct CatsOpts {
    /// Number of atoms sent through the vacuum cavity
    #[arg(long, default_value_t = 1)]
    #[serde(default = "one")]
    pub atoms: usize,
    #[arg(long, value_enum, default_value_t = Detect::None)]
    #[serde(default = "detect_none")]
    pub detect: Detect,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridOpts,
}

fn one() -> usize {
    1
}

fn detect_none() -> Detect {
    Detect::None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct EvolveOpts {
    /// Sample times in units of 1/γ
    #[arg(long, default_value = "0,0.1,0.3,0.5,20")]
    pub times: TimeGrid,
    /// Coherent initial amplitude as re,im (vacuum if omitted)
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    #[serde(default)]
    pub alpha0: Option<[f64; 2]>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridOpts,
}

fn parse_complex(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || format!("expected re,im, got `{s}`");
    if parts.len() != 2 {
        return Err(bad());
    }
    let re = parts[0].trim().parse().map_err(|_| bad())?;
    let im = parts[1].trim().parse().map_err(|_| bad())?;
    Ok([re, im])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SteadyOpts {
    /// Also compute the Fock-basis steady state and dump ρ
    #[arg(long)]
    #[serde(default)]
    pub fock: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridOpts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct StatsOpts {
    /// Add Fock-basis values next to the closed forms
    #[arg(long)]
    #[serde(default)]
    pub oracle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct CorrelationsOpts {
    /// Delay times in units of 1/γ
    #[arg(long, default_value = "0:10:101")]
    pub times: TimeGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct PhaseOpts {
    /// Number of phase samples on [−π, π)
    #[arg(long, default_value_t = 256)]
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
}

fn default_n_theta() -> usize {
    256
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ValidateOpts {}

/// Physical parameters as command-line flags.
#[derive(Debug, Clone, Copy, Args)]
pub struct ParamArgs {
    /// Pump parameter N_ex (atoms per cavity lifetime)
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub nex: f64,
    /// Mean thermal photon number
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub nbar: f64,
    /// Displacement per transit |ξ|
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub xi: f64,
    /// Cavity decay rate γ
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub gamma: f64,
}

impl ParamArgs {
    pub fn to_params(self) -> CliResult<SdmParams> {
        SdmParams::new(self.xi, self.nex, self.nbar, self.gamma).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let cfg = RunConfig::from_json(
            r#"{
                "params": {"xi_mag": 3.14159, "n_ex": 50, "nbar": 0.03},
                "scenario": {"kind": "evolve", "times": [0, 0.1], "grid": "-4:4:41", "grid_im": "-60:60:161"},
                "out": "figs"
            }"#,
        )
        .unwrap();
        let Scenario::Evolve(o) = &cfg.scenario else { panic!() };
        assert_eq!(o.times.0, vec![0.0, 0.1]);
        assert_eq!(o.grid.spec().y.n, 161);
        assert_eq!(cfg.params.gamma, 1.0);
        let echoed = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&echoed).unwrap(), cfg);
    }

    #[test]
    fn time_grids_accept_ranges() {
        let t: TimeGrid = "0:1:5".parse().unwrap();
        assert_eq!(t.0, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let t: TimeGrid = "0.5,2".parse().unwrap();
        assert_eq!(t.0, vec![0.5, 2.0]);
        assert!("0,x".parse::<TimeGrid>().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = RunConfig::from_json(
            "{\"params\": {\"xi_mag\": 0.5, \"n_ex\": 2, \"nbar\": 0.1},\n \"scenario\": {\"kind\": \"phase\", \"ntheta\": 128}}",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("ntheta") && msg.contains("line 2"), "{msg}");
        let err = RunConfig::from_json(r#"{"params": {"xi_mag": 0.5, "n_ex": 2, "nbar": 0.1, "r": 1}, "scenario": {"kind": "stats"}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("unknown field"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn rejects_out_of_range_values() {
        let bad = [
            r#"{"params": {"xi_mag": -1, "n_ex": 2, "nbar": 0.1}, "scenario": {"kind": "stats"}}"#,
            r#"{"params": {"xi_mag": 1, "n_ex": 2, "nbar": 0.1}, "scenario": {"kind": "cats", "atoms": 11, "detect": "all"}}"#,
            r#"{"params": {"xi_mag": 1, "n_ex": 2, "nbar": 0.1}, "scenario": {"kind": "correlations", "times": [1, 0]}}"#,
            r#"{"params": {"xi_mag": 1, "n_ex": 2, "nbar": 0.1}, "scenario": {"kind": "cats", "grid": "4:-4:10"}}"#,
            r#"{"params": {"xi_mag": 1, "n_ex": 2, "nbar": 0.1}, "scenario": {"kind": "cats", "atomz": 2}}"#,
            r#"{"params": {"xi_mag": 1, "n_ex": 2, "nbar": 0.1}, "scenario": {"kind": "evolve", "times": [0], "grid_re": "-1:1:3"}}"#,
        ];
        for text in bad {
            assert!(RunConfig::from_json(text).is_err(), "{text}");
        }
    }
}
