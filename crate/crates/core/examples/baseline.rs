//! Observed signals against observed actions: the full-information ratio
//! grows linearly, the public one does not.

use herding::belief::ell_star_at;
use herding::montecarlo::{run_baseline, SimulationPlan};
use herding::signal::GaussianSignalModel;

fn main() -> herding::Result<()> {
    let model = GaussianSignalModel::new(2.0)?;
    let mut plan = SimulationPlan::new(&model, 10_000, 500, 2);
    plan.checkpoints = vec![10, 100, 1000, 10_000];
    let base = run_baseline(&plan, 1)?;
    let star = ell_star_at(&model, 0.0, &plan.checkpoints)?;
    for ((t, mean, se), (_, ell)) in base.mean_rate().into_iter().zip(star) {
        println!("t = {t:>6}: signals {mean:.4} +/- {se:.4} per agent, actions {:.2e}", ell / t as f64);
    }
    Ok(())
}
