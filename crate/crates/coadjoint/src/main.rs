use std::process::ExitCode;

fn main() -> ExitCode {
    coadjoint::cli::main_with_args(std::env::args_os())
}
