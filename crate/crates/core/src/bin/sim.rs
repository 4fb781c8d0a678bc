use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stimuli_core::ergodicity::{reduce_to_line, verify_certificate, ConfigSnapshot, MoveCertificate, PlaneConfig};
use stimuli_core::lattice::LatticeSnapshot;
use stimuli_core::live::{LiveConfig, LiveServer};
use stimuli_core::scenario::{run_scenario, write_outputs, RunOptions, Scenario};

#[derive(Parser)]
#[command(name = "sim", version, about = "Adaptive stimuli and foraging simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run all trials of a scenario and write metric files.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write per-trial state-change traces.
        #[arg(long)]
        trace: bool,
    },
    /// Reduction certificates for configurations with one pinned agent.
    Ergodicity {
        #[command(subcommand)]
        command: ErgoCmd,
    },
    /// Serve a lattice scenario over a WebSocket at /ws.
    Serve {
        scenario: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Snapshot every this many iterations.
        #[arg(long, default_value_t = 1000)]
        stride: u64,
        /// Iterations per second.
        #[arg(long, default_value_t = 100_000.0)]
        ips: f64,
        /// Write the replayable command log here on shutdown.
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ErgoCmd {
    /// Reduce a configuration to a straight line.
    Reduce {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Point the final line in this direction (0-5).
        #[arg(long)]
        direction: Option<usize>,
    },
    /// Replay a certificate move by move.
    Verify { certificate: PathBuf },
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_config(path: &Path) -> Result<PlaneConfig, String> {
    let text = read(path)?;
    let res = match serde_json::from_str::<ConfigSnapshot>(&text) {
        Ok(c) => PlaneConfig::from_snapshot(&c),
        Err(plain) => match serde_json::from_str::<LatticeSnapshot>(&text) {
            Ok(s) => PlaneConfig::from_lattice_snapshot(&s),
            Err(_) => return Err(format!("{}: not a configuration or lattice snapshot: {plain}", path.display())),
        },
    };
    res.map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Cmd::Run { scenario, seed, trials, jobs, out, trace } => {
            let mut sc = Scenario::load(&scenario).map_err(|e| e.to_string())?;
            if let Some(s) = seed {
                sc.seed = s;
            }
            if let Some(k) = trials {
                sc.trials = k;
            }
            let outputs = run_scenario(&sc, &RunOptions { jobs, trace }).map_err(|e| e.to_string())?;
            write_outputs(&sc, &outputs, &out).map_err(|e| e.to_string())?;
            let converged = outputs.iter().filter(|o| o.record.converged).count();
            println!("{} trials, {} converged; outputs in {}", outputs.len(), converged, out.display());
        }
        Cmd::Ergodicity { command: ErgoCmd::Reduce { config, out, direction } } => {
            let cfg = load_config(&config)?;
            if direction.is_some_and(|d| d > 5) {
                return Err("direction must be between 0 and 5".into());
            }
            let (cert, stats) = reduce_to_line(&cfg, direction).map_err(|e| e.to_string())?;
            let json = serde_json::to_string_pretty(&cert).map_err(|e| e.to_string())?;
            std::fs::write(&out, json).map_err(|e| format!("{}: {e}", out.display()))?;
            println!("{} agents, {} moves, {} spine combs; certificate in {}", cfg.len(), cert.moves.len(), stats.spine_combs, out.display());
        }
        Cmd::Ergodicity { command: ErgoCmd::Verify { certificate } } => {
            let cert: MoveCertificate = serde_json::from_str(&read(&certificate)?).map_err(|e| format!("{}: {e}", certificate.display()))?;
            verify_certificate(&cert).map_err(|e| format!("invalid certificate: {e}"))?;
            println!("valid: {} moves", cert.moves.len());
        }
        Cmd::Serve { scenario, port, host, stride, ips, log } => {
            let sc = Scenario::load(&scenario).map_err(|e| e.to_string())?;
            let addr: SocketAddr = format!("{host}:{port}").parse().map_err(|e| format!("bad address: {e}"))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(async move {
                let cfg = LiveConfig { stride, ips, ..LiveConfig::default() };
                let server = LiveServer::start(sc, addr, cfg).await.map_err(|e| e.to_string())?;
                eprintln!("serving on ws://{}/ws (ctrl-c to stop)", server.addr());
                tokio::signal::ctrl_c().await.map_err(|e| e.to_string())?;
                let commands = server.shutdown().await;
                if let Some(path) = log {
                    let json = serde_json::to_string_pretty(&commands).map_err(|e| e.to_string())?;
                    std::fs::write(&path, json).map_err(|e| format!("{}: {e}", path.display()))?;
                }
                Ok::<(), String>(())
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
