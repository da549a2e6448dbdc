use std::process::ExitCode;

fn main() -> ExitCode {
    tdu_platform::cli::main_with(std::env::args_os())
}
