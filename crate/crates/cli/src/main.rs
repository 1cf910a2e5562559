use std::process::ExitCode;

use clap::Parser;
use siegel_lab::{init_threads, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let result = init_threads().and_then(|()| run(cli));
    match result {
        Ok(report) => {
            for c in &report.checks {
                println!("{} {}: {} (expected {})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.observed, c.expected);
            }
            println!("wrote {}", out.display());
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
