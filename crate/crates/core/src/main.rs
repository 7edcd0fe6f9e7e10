use std::process::ExitCode;

fn main() -> ExitCode {
    dcmh::cli::main_with_args(std::env::args_os())
}
