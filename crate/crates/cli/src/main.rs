mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

fn write_out(path: Option<&std::path::Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Enumerate(a) => write_out(a.output.out.as_deref(), commands::enumerate(a)?.as_bytes()),
        Command::Data(a) => write_out(a.out.as_deref(), &commands::data(a)?),
        Command::Fit(a) => write_out(a.output.out.as_deref(), commands::fit(a)?.as_bytes()),
        Command::Bootstrap(a) => write_out(a.output.out.as_deref(), commands::bootstrap(a)?.as_bytes()),
        Command::Diagnose(a) => write_out(a.output.out.as_deref(), commands::diagnose_cmd(a)?.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let err = serde_json::json!({ "error": { "code": e.code, "message": e.message } });
            eprintln!("{err}");
            ExitCode::FAILURE
        }
    }
}
