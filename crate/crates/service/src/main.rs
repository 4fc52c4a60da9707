use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use floodprio_core::prioritizer::WeightVector;
use floodprio_service::{ScenarioConfig, ScenarioService, ServiceError};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "floodprio", version, about = "Flood response prioritisation maps")]
struct Cli {
    /// Scenario store directory.
    #[arg(long, global = true, default_value = "./scenarios")]
    store: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a scenario from a config file and compute version 1.
    Run { config: PathBuf },
    /// Recompute a scenario against a new flood extent.
    UpdateFlood { scenario: String, flood: PathBuf },
    /// Rescore the latest version with weights `none,low,medium,high`.
    UpdateWeights { scenario: String, weights: WeightVector },
    /// Write the priority map GeoJSON of a version.
    Export {
        scenario: String,
        #[arg(long)]
        version: Option<u32>,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the summary of a version.
    Summary {
        scenario: String,
        #[arg(long)]
        version: Option<u32>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Serialize)]
struct Outcome<'a> {
    scenario_id: &'a str,
    version: u32,
    summary: &'a floodprio_service::pipeline::Summary,
    timings: &'a floodprio_service::pipeline::Timings,
    #[serde(skip_serializing_if = "Option::is_none")]
    monotonicity: Option<&'a floodprio_service::service::MonotonicityAudit>,
}

fn print_json(value: &impl Serialize) -> Result<(), ServiceError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ServiceError::internal(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn print_result(r: &floodprio_service::ScenarioResult) -> Result<(), ServiceError> {
    print_json(&Outcome {
        scenario_id: &r.scenario_id,
        version: r.version,
        summary: &r.summary,
        timings: &r.timings,
        monotonicity: r.monotonicity.as_ref(),
    })
}

fn run(cli: Cli) -> Result<(), ServiceError> {
    let svc = ScenarioService::open(&cli.store)?;
    match cli.command {
        Command::Run { config } => print_result(&svc.run_scenario(&ScenarioConfig::load(&config)?)?),
        Command::UpdateFlood { scenario, flood } => {
            let text = std::fs::read_to_string(&flood)
                .map_err(|e| ServiceError::not_found(format!("{}: {e}", flood.display())))?;
            print_result(&svc.update_flood(&scenario, &text)?)
        }
        Command::UpdateWeights { scenario, weights } => print_result(&svc.update_weights(&scenario, &weights)?),
        Command::Export { scenario, version, out } => {
            let (_, bytes) = svc.get_priomap(&scenario, version)?;
            match out {
                Some(path) => std::fs::write(path, bytes)?,
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&bytes)?;
                }
            }
            Ok(())
        }
        Command::Summary { scenario, version } => print_json(&svc.get_summary(&scenario, version)?),
        Command::Serve { addr } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                axum::serve(listener, floodprio_service::http::router(svc))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await
            })?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("floodprio: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
