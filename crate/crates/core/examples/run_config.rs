//! Runs a JSON experiment config, like `herding run`, and prints the summary.
//!
//! cargo run --release --example run_config -- configs/upset_tail.json

use herding::experiments::{execute, ExperimentConfig, RunOptions, SUMMARY_FILE};

fn main() -> herding::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/mistake_curve.json".into());
    let config = ExperimentConfig::load(path.as_ref())?;
    let manifest = execute(&config, &RunOptions::default())?;
    println!("config sha256 {}", manifest.config_sha256);
    for (file, sum) in &manifest.files {
        println!("  {file:<24} {}", &sum[..16]);
    }
    print!("{}", std::fs::read_to_string(config.output_dir.join(SUMMARY_FILE))?);
    Ok(())
}
