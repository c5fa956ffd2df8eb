use std::process::ExitCode;

use clap::Parser;
use semicut_cli::{run, Cli};

fn main() -> ExitCode {
    // Usage errors are input errors; help and version output are not.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    let outcome = run(cli).and_then(|report| {
        if let Some(text) = report.emit()? {
            print!("{text}");
        }
        Ok(report.exit_code())
    });
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
