mod args;
mod commands;
mod source;

use std::process::ExitCode;

use args::{Cli, Command, ConfigFile, Globals, Merge};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // a check ran and failed
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let g = cli.global.merge(Globals {
        seed: file.seed,
        out: file.out,
        budget_ms: file.budget_ms,
    });
    match cli.command {
        Command::Oracle(a) => commands::oracle(&g, a.merge(file.oracle)),
        Command::Run(a) => commands::run(&g, a.merge(file.run)),
        Command::Bench(a) => commands::bench(&g, a.merge(file.bench)),
        Command::Verify(a) => commands::verify(&g, a.merge(file.verify)),
        Command::Ce(a) => commands::ce(&g, a.merge(file.ce)),
    }
}
