use std::process::ExitCode;

fn main() -> ExitCode {
    motret_cli::run(std::env::args_os())
}
