mod cli;
mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::cli::Cli;
use crate::config::Resolver;
use crate::error::CliError;
use crate::output::Format;

fn run(cli: Cli) -> Result<(), CliError> {
    let mut r = Resolver::load(cli.config.as_deref())?;
    let format = r.value("format", cli.format, Format::Json)?;
    let out: Option<PathBuf> = r.optional("out", cli.out)?;
    let (command, emitted) = commands::run(&mut r, cli.command)?;
    let echo = r.finish()?;
    output::write(command, echo, emitted, format, out.as_deref())
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
