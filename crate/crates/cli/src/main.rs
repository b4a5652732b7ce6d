//! `serial-rank`: command-line front end of serial-core.
//!
//! Exit codes: 0 success, 1 usage error, 2 input validation error,
//! 3 non-convergence.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Failure;
use manifest::Run;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(anyhow::anyhow!("--threads must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(anyhow::Error::from)?;
    }
    let start = Instant::now();
    let mut run = Run::new(&cli.out)?;
    let result = match &cli.command {
        Command::Stats(a) => commands::stats(a, &mut run),
        Command::LdfTable(a) => commands::ldf_table(a, &mut run),
        Command::Df(a) => commands::df(a, &mut run),
        Command::Rank(a) => commands::rank_cmd(a, &mut run),
        Command::Simulate(a) => commands::simulate(a, &mut run),
        Command::Harden(a) => commands::harden(a, &mut run),
        Command::OracleCheck(a) => commands::oracle(a, &mut run),
        Command::Generate(a) => commands::generate_cmd(a, &mut run),
    };
    let code = result.as_ref().map_or_else(Failure::exit_code, |_| 0);
    let args = serde_json::to_value(cli).map_err(anyhow::Error::from)?;
    let name = args["command"].as_object().and_then(|o| o.keys().next().cloned()).unwrap_or_default();
    run.finish(&name, args, code, start.elapsed().as_secs_f64())?;
    result
}
