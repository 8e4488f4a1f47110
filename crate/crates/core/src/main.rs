use std::io;
use std::process::ExitCode;

use clap::Parser;
use pooltest::cli::{configure_threads, emit, execute, exit_code, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stderr = io::stderr();
    if let Err(e) = configure_threads(std::env::var("POOLTEST_THREADS").ok().as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(exit_code(&e) as u8);
    }
    let code = match execute(&cli) {
        Ok(outcome) => emit(outcome, &mut io::stdout(), &mut stderr),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
