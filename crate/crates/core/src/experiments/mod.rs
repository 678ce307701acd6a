//! Config-driven experiments: one per asymptotic claim, each writing CSV
//! tables, a summary and a reproducibility manifest.

mod config;
mod output;
mod run;

pub use config::{
    default_checkpoints, default_ttl_horizons, ConditioningSpec, ExperimentConfig, ExperimentKind, QFormula,
    RateSpec, SamplerSpec, TailSpec,
};
pub use output::{emit_outputs, sha256_hex, Cell, ExperimentOutput, RunManifest, Table, MANIFEST_FILE, SUMMARY_FILE};
pub use run::{run_experiment, RunOptions};

use crate::error::Result;

/// Runs the experiment and writes its outputs. Errors carry the experiment
/// name; nothing is left in the output directory when a run fails.
pub fn execute(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    let started = output::now_ms();
    let name = config.experiment.name();
    let out = run_experiment(config, opts).map_err(|e| e.context(format!("experiment {name}")))?;
    emit_outputs(&out, config, started).map_err(|e| e.context(format!("writing {name} outputs")))
}
