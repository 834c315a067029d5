//! Execution helper: speaks line-delimited JSON frames on stdin/stdout.

use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdin = io::stdin().lock();
    let stdout = io::stdout().lock();
    match annotium::wrapper::serve_broker(stdin, stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("annotium-broker: {e}");
            ExitCode::FAILURE
        }
    }
}
