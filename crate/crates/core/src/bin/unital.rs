use std::process::ExitCode;

fn main() -> ExitCode {
    unital_core::cli::run(std::env::args_os())
}
