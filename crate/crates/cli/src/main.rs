mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use commands::Ctx;
use output::{usage, CliError, CliResult};

fn run(cli: &Cli) -> CliResult<Option<CliError>> {
    if let Some(k) = cli.global.workers {
        if k == 0 {
            return Err(usage("--workers must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Core(freewords::Error::Internal(format!("thread pool: {e}"))))?;
    }
    let ctx = Ctx { budget: cli.global.budget, format: cli.global.format };
    let mut out = commands::run(&cli.command, &ctx)?;
    out.config.push(("budget".into(), cli.global.budget.to_string()));
    let text = out.render();
    match &cli.global.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            println!("{}", out.summary);
            println!("wrote {}", path.display());
        }
        None => {
            print!("{text}");
            eprintln!("{}", out.summary);
        }
    }
    Ok(out.failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let err = match run(&cli) {
        Ok(None) => return ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => e,
    };
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code())
}
