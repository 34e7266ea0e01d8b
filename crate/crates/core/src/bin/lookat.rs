use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = lookat::cli::run_from_args(std::env::args_os());
    print!("{}", outcome.stdout);
    let _ = std::io::stdout().flush();
    for line in &outcome.diagnostics {
        eprintln!("{line}");
    }
    ExitCode::from(outcome.exit_code as u8)
}
