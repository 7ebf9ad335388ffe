use std::process::ExitCode;

use clap::Parser;
use nzkl_cli::app::{execute, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            for r in &outcome.reports {
                println!("{r}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                let path = outcome.report_path.as_deref().map(|p| p.display().to_string()).unwrap_or_default();
                eprintln!("check failed; see {path}");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
