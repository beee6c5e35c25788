use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use fem_accuracy::cli::{configure_threads, execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> fem_accuracy::Result<Vec<String>> {
        configure_threads()?;
        let mut out: Box<dyn Write> = match &cli.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        let failed = execute(&cli, out.as_mut())?;
        out.flush()?;
        Ok(failed)
    };
    match run() {
        Ok(failed) if failed.is_empty() => ExitCode::SUCCESS,
        Ok(failed) => {
            for name in failed {
                eprintln!("check failed: {name}");
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
