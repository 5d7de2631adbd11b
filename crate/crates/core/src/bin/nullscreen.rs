use std::process::ExitCode;

use nullscreen::runner::{emit_report, exit_code, run, RunConfig};

const USAGE: &str = "usage: nullscreen [--config FILE] [--entry NAME] [--n N] [--seed S] \
[--suites a,b,...] [--format text|json] [--out PATH] [--<key> VALUE]...";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") {
        println!("{USAGE}");
        return ExitCode::SUCCESS;
    }
    let config = match RunConfig::from_args(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("nullscreen: {e}\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("nullscreen: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let text = emit_report(&report, config.format);
    match &config.output_path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("nullscreen: cannot write {}: {e}", path.display());
                return ExitCode::from(3);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(exit_code(&report) as u8)
}
