use std::process::ExitCode;

fn main() -> ExitCode {
    gasketdim::cli::main_with_args(std::env::args_os())
}
