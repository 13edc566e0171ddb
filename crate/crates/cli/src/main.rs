use std::net::{IpAddr, SocketAddr};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use voxhand_cli::args::{Cli, Command};
use voxhand_cli::commands::{cmd_agreement, cmd_build_db, cmd_estimate, cmd_evaluate, cmd_import, cmd_synth};
use voxhand_cli::service::{serve, AppState};
use voxhand_cli::{CliError, CliResult, RunConfig};

fn run(cli: &Cli) -> CliResult<Vec<String>> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cli.apply(&mut cfg);
    match &cli.command {
        Command::Synth(_) => cmd_synth(&cfg),
        Command::Import(a) => cmd_import(&cfg, &a.format),
        Command::BuildDb(_) => cmd_build_db(&cfg),
        Command::Estimate(_) => cmd_estimate(&cfg),
        Command::Evaluate(_) => cmd_evaluate(&cfg),
        Command::Agreement(_) => cmd_agreement(&cfg),
        Command::Serve(_) => {
            let dataset = cfg.require(&cfg.paths.dataset, "dataset")?;
            let log = cfg.paths.annotations.clone().unwrap_or_else(|| dataset.join("accepted.jsonl"));
            let host: IpAddr = cfg
                .serve
                .host
                .as_deref()
                .unwrap_or("127.0.0.1")
                .parse()
                .map_err(|e| CliError::Usage(format!("host: {e}")))?;
            let addr = SocketAddr::new(host, cfg.serve.port.unwrap_or(8080));
            let state = AppState::open(dataset, &log)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
            rt.block_on(serve(state, addr))?;
            Ok(vec![])
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
