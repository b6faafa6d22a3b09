use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    if let Err(e) = thermolux_cli::configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    let out = thermolux_cli::run(std::env::args_os());
    // Broken pipes are not worth reporting.
    let _ = std::io::stdout().lock().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().lock().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
