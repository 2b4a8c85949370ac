use std::process::ExitCode;

fn main() -> ExitCode {
    lcpow::cli::main_entry()
}
