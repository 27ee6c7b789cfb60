use std::process::ExitCode;

use clap::Parser;
use sdp_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::Cap { bounds, .. } = &e {
                println!("{}", serde_json::json!({ "status": "cap", "achieved": bounds }));
            }
            eprintln!("sdp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
