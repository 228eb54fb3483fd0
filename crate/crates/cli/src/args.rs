//! Command-line flags.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{
    CatsOpts, CorrelationsOpts, EvolveOpts, ParamArgs, PhaseOpts, RunConfig, Scenario, StatsOpts, SteadyOpts,
    ValidateOpts, DEFAULT_OUT,
};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "sdm", version, about = "Strongly-driven micromaser simulator")]
pub struct Cli {
    /// Read the whole run configuration from a JSON file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Only report errors
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    /// Report progress in detail
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Output directory
    #[arg(long, default_value = DEFAULT_OUT)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wigner grids of the field after m atoms cross the vacuum cavity
    Cats {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: CatsOpts,
    },
    /// Wigner grids of the open-system evolution at the given times
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: EvolveOpts,
    },
    /// Steady-state Wigner grid and statistics
    Steady {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: SteadyOpts,
    },
    /// Steady-state photon statistics as JSON
    Stats {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: StatsOpts,
    },
    /// Two-click correlation functions
    Correlations {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: CorrelationsOpts,
    },
    /// Pegg–Barnett phase distribution of the Fock-basis steady state
    Phase {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: PhaseOpts,
    },
    /// Closed forms against the Fock-basis oracle
    Validate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: ValidateOpts,
    },
}

impl Cli {
    /// The configuration named by `--config` or assembled from the flags.
    pub fn resolve(self) -> CliResult<RunConfig> {
        match (self.config, self.command) {
            (Some(path), None) => RunConfig::from_file(&path),
            (Some(_), Some(_)) => Err(CliError::Config("give either --config or a subcommand, not both".into())),
            (None, None) => Err(CliError::Config("no subcommand given (see --help)".into())),
            (None, Some(cmd)) => {
                let (common, scenario) = match cmd {
                    Command::Cats { common, opts } => (common, Scenario::Cats(opts)),
                    Command::Evolve { common, opts } => (common, Scenario::Evolve(opts)),
                    Command::Steady { common, opts } => (common, Scenario::Steady(opts)),
                    Command::Stats { common, opts } => (common, Scenario::Stats(opts)),
                    Command::Correlations { common, opts } => (common, Scenario::Correlations(opts)),
                    Command::Phase { common, opts } => (common, Scenario::Phase(opts)),
                    Command::Validate { common, opts } => (common, Scenario::Validate(opts)),
                };
                let cfg = RunConfig {
                    params: common.params.to_params()?,
                    scenario,
                    out: common.out,
                };
                cfg.validate()?;
                Ok(cfg)
            }
        }
    }

    pub fn log_level(&self) -> log::LevelFilter {
        if self.quiet {
            log::LevelFilter::Error
        } else if self.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Info
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Detect;

    fn resolve(args: &[&str]) -> CliResult<RunConfig> {
        Cli::try_parse_from(args).expect("flags parse").resolve()
    }

    #[test]
    fn cats_example_flags() {
        let cfg = resolve(&["sdm", "cats", "--atoms", "2", "--detect", "none", "--xi", "3.14159", "--grid", "-8:8:161"])
            .unwrap();
        let Scenario::Cats(o) = &cfg.scenario else { panic!() };
        assert_eq!((o.atoms, o.detect), (2, Detect::None));
        assert_eq!(o.grid.spec().y.n, 161);
        assert_eq!(cfg.params.xi_mag, "3.14159".parse::<f64>().unwrap());
    }

    #[test]
    fn evolve_example_flags() {
        let cfg = resolve(&["sdm", "evolve", "--nex", "50", "--nbar", "0.03", "--xi", "3.14159", "--times", "0,0.1,0.3,0.5,20"])
            .unwrap();
        let Scenario::Evolve(o) = &cfg.scenario else { panic!() };
        assert_eq!(o.times.0, vec![0.0, 0.1, 0.3, 0.5, 20.0]);
        assert_eq!(cfg.params.n_ex, 50.0);
    }

    #[test]
    fn flags_and_config_are_exclusive() {
        assert!(resolve(&["sdm"]).is_err());
        let err = resolve(&["sdm", "--config", "x.json", "stats"]).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert_eq!(resolve(&["sdm", "stats", "--xi", "-1"]).unwrap_err().exit_code(), 1);
    }
}
