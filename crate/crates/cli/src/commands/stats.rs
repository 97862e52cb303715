use std::path::PathBuf;

use clap::Args;

use r2g_core::dataset::dataset_stats;

use crate::{CmdResult, Classify};

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
}

pub fn run(args: StatsArgs) -> CmdResult {
    let stats = dataset_stats(&args.dataset).invalid(format!("reading {}", args.dataset.display()))?;
    println!("{}", serde_json::to_string_pretty(&stats).runtime("serializing")?);
    Ok(())
}
