use std::process::ExitCode;

use clap::Parser;
use solenoid_cli::{configure_workers, execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_workers().and_then(|()| execute(&cli));
    match result {
        Ok(manifest) => {
            println!(
                "{}: wrote {} files to {} in {:.2}s",
                manifest.config.experiment.name(),
                manifest.files.len() + 1,
                manifest.config.output_dir.display(),
                manifest.wall_clock_seconds
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
