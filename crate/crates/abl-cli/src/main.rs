mod args;
mod commands;
mod manifest;
mod util;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::RunConfig;
use util::{usage, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("abl: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Learn {
            input,
            alignment,
            selection,
            min_length,
            output,
        } => commands::cmd_learn(&input, alignment, selection, min_length, &output),
        Command::Select {
            space,
            selection,
            mean,
            seed,
            output,
        } => commands::cmd_select(&space, selection, mean, seed, &output),
        Command::Eval {
            learned,
            gold,
            exclude_trivial_brackets,
            output,
        } => commands::cmd_eval(&learned, &gold, exclude_trivial_brackets, output.as_deref()),
        Command::Run {
            gold,
            alignment,
            selection,
            mean,
            trials,
            seed,
            min_length,
            exclude_trivial_brackets,
            no_shuffle,
            output,
            from_manifest,
        } => {
            let cfg = match from_manifest {
                Some(path) => RunConfig::from_manifest(&path, output.as_deref())?,
                None => RunConfig {
                    gold: require(gold, "--gold")?,
                    alignment: require(alignment, "--alignment")?,
                    selection: require(selection, "--selection")?,
                    mean,
                    trials,
                    seed,
                    min_length,
                    exclude_trivial: exclude_trivial_brackets,
                    shuffle: !no_shuffle,
                    output: require(output, "--output")?,
                },
            };
            commands::cmd_run(&cfg)
        }
        Command::Baseline {
            input,
            gold,
            direction,
            exclude_trivial_brackets,
            output,
        } => commands::cmd_baseline(
            input.as_deref(),
            gold.as_deref(),
            direction,
            exclude_trivial_brackets,
            output.as_deref(),
        ),
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| usage(format!("{} is required", flag)))
}
