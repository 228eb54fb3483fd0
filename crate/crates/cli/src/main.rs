use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use sdm_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(cli.log_level())
        .format_timestamp(None)
        .init();
    sdm_cli::configure_threads();
    let result = cli.resolve().and_then(|cfg| sdm_cli::run(&cfg));
    match result {
        Ok(outcome) => {
            let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
