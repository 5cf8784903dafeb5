use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(purekit::cli::run(std::env::args_os()) as u8)
}
