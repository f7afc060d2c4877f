use std::process::ExitCode;

use aniso_besov::cli;

fn main() -> ExitCode {
    if let Err(e) = cli::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(cli::exit_code(&e) as u8);
    }
    ExitCode::from(cli::run(std::env::args_os()) as u8)
}
