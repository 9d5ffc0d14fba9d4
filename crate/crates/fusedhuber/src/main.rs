use std::process::ExitCode;

use clap::Parser;
use fusedhuber::cli::{run_command, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.flags.resolve() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_command(cli.command, &cfg) {
        Ok(summary) if summary.failures > 0 => {
            eprintln!("{} cells failed; see {}", summary.failures, summary.out.display());
            ExitCode::from(1)
        }
        Ok(summary) => {
            println!("wrote {} files to {}", summary.files.len(), summary.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
