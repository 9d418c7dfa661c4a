use std::process::ExitCode;

fn main() -> ExitCode {
    match kelly_market::cli::run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
