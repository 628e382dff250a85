use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(psdp::cli::run(std::env::args().skip(1)))
}
