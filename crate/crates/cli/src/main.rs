use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mfc_cli::runner::workers_from_env;
use mfc_cli::{parse_config, run, Overrides, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "mfc", version, about = "Mean-field control verification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `[output] dir`).
        #[arg(long)]
        outdir: Option<PathBuf>,
        /// Also write sample trajectories to `paths.csv`.
        #[arg(long)]
        dump_paths: bool,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved for tolerance failures
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { code(EXIT_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    let Command::Run {
        config,
        outdir,
        dump_paths,
    } = cli.command;
    let workers = match workers_from_env(std::env::var("MFC_WORKERS").ok().as_deref()) {
        Ok(w) => w,
        Err(msg) => {
            eprintln!("error: {msg}");
            return code(EXIT_ERROR);
        }
    };
    let cfg = match parse_config(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return code(EXIT_ERROR);
        }
    };
    code(run(
        &cfg,
        &Overrides {
            outdir,
            dump_paths,
            workers,
        },
    ))
}
