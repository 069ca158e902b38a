use std::process::ExitCode;

use causal_audit_cli::api;
use causal_audit_cli::cli::{Cli, Command};
use causal_audit_cli::server::{self, AppState};
use clap::Parser;
use tracing_subscriber::EnvFilter;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("CAUSAL_AUDIT_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();

    if let Command::Serve { port, graph_dir } = &cli.command {
        let state = match graph_dir {
            Some(dir) => match AppState::from_dir(dir) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: cannot load graphs from {}: {e}", dir.display());
                    return ExitCode::from(1);
                }
            },
            None => AppState::default(),
        };
        let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
        return match rt.block_on(server::serve(*port, state)) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        };
    }

    match causal_audit_cli::cli::execute(&cli.command) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", api::render(&e.payload()));
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
