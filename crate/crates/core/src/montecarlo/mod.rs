//! Monte Carlo trajectories of the action process and their estimators.

mod aggregate;
mod estimate;
mod simulate;
mod trajectory;

pub use aggregate::{
    merge_aggregates, run_baseline, run_trials, AggregateStats, BaselineStats, CheckpointSums, Conditioning,
    Diagnostics, SimulationPlan, TtlSums,
};
pub use estimate::*;
pub use simulate::{
    replay_actions, simulate_baseline_llr, simulate_trajectory, Sampler, TrajectoryOptions, THINNING_THRESHOLD,
};
pub use trajectory::{
    extract_runs_and_upsets, ActionBlock, Checkpoint, RunDecomposition, SwitchEvent, Trajectory, TrajectoryStats,
    TRAJECTORY_CSV_HEADER,
};
