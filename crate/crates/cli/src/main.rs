use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use countgauss_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.global.output {
                Some(path) => std::fs::write(path, &out.text).map_err(|e| CliError::io(path, e)),
                None => std::io::stdout()
                    .write_all(out.text.as_bytes())
                    .map_err(|e| CliError::io("<stdout>", e)),
            };
            match written {
                Ok(()) => ExitCode::from(out.code as u8),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
