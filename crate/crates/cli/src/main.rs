use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use coblab_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.into_config().and_then(|config| {
        let report = run(&config)?;
        if config.out.is_none() {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(report.body.as_bytes());
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code as u8)
        }
    }
}
