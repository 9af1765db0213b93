mod config;

use anyhow::{Context, Result};
use clap::Parser;

use ren_core::csvio::{emit_csv, emit_summary_csv, write_results};
use ren_core::experiment::{run_experiment, summarize};

use config::Cli;

fn main() -> Result<()> {
    let run = Cli::parse().with_config_file()?.resolve()?;
    let rows = run_experiment(&run.spec).context("sweep failed")?;

    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells did not complete; see the status column", rows.len());
    }

    match &run.out {
        Some(path) => emit_csv(&rows, path)?,
        None => write_results(&rows, std::io::stdout().lock()).context("writing to stdout")?,
    }
    if let Some(path) = &run.summary {
        emit_summary_csv(&summarize(&rows), path)?;
    }
    Ok(())
}
