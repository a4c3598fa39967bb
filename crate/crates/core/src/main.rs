use std::process::ExitCode;

fn main() -> ExitCode {
    let status = flowdoc::cli::run(std::env::args_os(), &mut std::io::stderr());
    ExitCode::from(status as u8)
}
