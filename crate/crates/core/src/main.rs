use std::process::ExitCode;

use clap::Parser;
use depthtrack::harness::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout();
    match run(cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("depthtrack: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
