use std::process::ExitCode;

fn main() -> ExitCode {
    tutor_attention::cli::main_with_args(std::env::args_os())
}
