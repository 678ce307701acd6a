//! A single simulated history: blocks of identical actions, upsets, and the
//! replay check.

use herding::montecarlo::{replay_actions, simulate_trajectory, TrajectoryOptions};
use herding::signal::{GaussianSignalModel, StateOfWorld};

fn main() -> herding::Result<()> {
    let model = GaussianSignalModel::new(1.0)?;
    let opts = TrajectoryOptions {
        checkpoints: vec![1, 10, 100, 1000, 10_001],
        ..Default::default()
    };
    for trial in 0..5 {
        let (traj, stats) = simulate_trajectory(&model, StateOfWorld::Plus, 10_000, 42, trial, &opts)?;
        let replayed = replay_actions(&model, 0.0, &traj.actions());
        assert_eq!(replayed[10_000].to_bits(), traj.final_ell.to_bits());
        println!(
            "trial {trial}: {} blocks, first mistake {}, last mistake {}, final ell {:.3}",
            traj.blocks.len(),
            stats.t_first_mistake,
            stats.t_last_mistake,
            traj.final_ell
        );
    }
    Ok(())
}
