use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use herding::experiments::{execute, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "herding", version, about = "Run social-learning experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Overrides master_seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads (0 = all cores). Never changes results.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Also write the full paths of the first N trials.
        #[arg(long, num_args = 0..=1, default_missing_value = "10", value_name = "N")]
        dump_trajectories: Option<u64>,
    },
}

fn main() -> ExitCode {
    let Command::Run {
        config,
        seed,
        output_dir,
        threads,
        dump_trajectories,
    } = Cli::parse().command;

    let result = ExperimentConfig::load(&config).and_then(|mut c| {
        if let Some(s) = seed {
            c = c.with_seed(s);
        }
        if let Some(d) = output_dir {
            c = c.with_output_dir(d);
        }
        let opts = RunOptions {
            threads,
            dump_trajectories: dump_trajectories.unwrap_or(0),
        };
        execute(&c, &opts).map(|m| (c, m))
    });
    match result {
        Ok((c, m)) => {
            println!(
                "{}: wrote {} files to {}",
                m.experiment,
                m.files.len() + 1,
                c.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
