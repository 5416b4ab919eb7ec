use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use isosect_cli::args::Args;
use isosect_cli::run_in;

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("TOOL_THREADS") {
        let n: usize = v.parse().with_context(|| format!("TOOL_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = configure_threads().and_then(|_| {
        let (config, base) = args.into_config()?;
        run_in(&config, &base)
    });
    match outcome {
        Ok(report) => {
            println!(
                "{} {}: wrote {} ({})",
                report.config.pipeline.name(),
                report.config.body_spec,
                report.config.out_dir.join("report.json").display(),
                report.content_hash
            );
            if let Some(v) = report.verdict() {
                println!("verdict: {}", serde_json::to_string(&v).unwrap_or_default().trim_matches('"'));
            }
            ExitCode::from(report.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
