use std::io::{BufReader, Write};
use std::net::TcpListener;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use r2g_core::demogen::{Env, EnvConfig, SuccessMode};
use r2g_core::grasping::GraspConfig;

use crate::inputs::{limit_meshes, load_pool, load_task, read_config};
use crate::protocol::serve;
use crate::{CmdResult, Classify};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Thresholds {
    Generation,
    Evaluation,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub task: String,
    /// Listen on this address instead of stdin/stdout; the bound address is
    /// printed on stdout. One client is served, then the server exits.
    #[arg(long)]
    pub tcp: Option<String>,
    /// Which success thresholds decide `success`.
    #[arg(long, value_enum, default_value_t = Thresholds::Evaluation)]
    pub thresholds: Thresholds,
    #[arg(long)]
    pub mesh_dir: Option<PathBuf>,
    #[arg(long)]
    pub n_meshes: Option<usize>,
    /// TOML file with environment settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: ServeArgs) -> CmdResult {
    let config: EnvConfig = read_config(args.config.as_deref())?;
    let (mut task, track) = load_task(&args.task)?;
    limit_meshes(&mut task, args.n_meshes)?;
    let pool = load_pool(args.mesh_dir.as_deref(), &GraspConfig::default())?;
    let mode = match args.thresholds {
        Thresholds::Generation => SuccessMode::Generation,
        Thresholds::Evaluation => SuccessMode::Evaluation,
    };
    let mut env = Env::new(task, pool, config, track, mode).invalid("building the environment")?;
    let summary = match &args.tcp {
        None => {
            let stdin = std::io::stdin();
            serve(&mut env, stdin.lock(), std::io::stdout().lock()).runtime("serving stdio")?
        }
        Some(addr) => {
            let listener = TcpListener::bind(addr).invalid(format!("binding {addr}"))?;
            let local = listener.local_addr().runtime("reading the bound address")?;
            let mut stdout = std::io::stdout();
            writeln!(stdout, "listening on {local}").and_then(|_| stdout.flush()).runtime("writing stdout")?;
            let (stream, peer) = listener.accept().runtime("accepting a client")?;
            log::info!("client {peer}");
            let reader = BufReader::new(stream.try_clone().runtime("cloning the socket")?);
            serve(&mut env, reader, stream).runtime("serving tcp")?
        }
    };
    log::info!(
        "session: {} episodes, {} steps, {} errors",
        summary.episodes,
        summary.steps,
        summary.errors
    );
    Ok(())
}
