use std::process::ExitCode;

fn main() -> ExitCode {
    qclt::cli::main()
}
