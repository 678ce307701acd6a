//! Probability of a mistake at time t, Rao-Blackwellized and by counting.

use herding::experiments::default_checkpoints;
use herding::montecarlo::{estimate_mistake_curve, run_trials, SimulationPlan};
use herding::signal::GaussianSignalModel;

fn main() -> herding::Result<()> {
    let model = GaussianSignalModel::new(1.0)?;
    let mut plan = SimulationPlan::new(&model, 2000, 5000, 1);
    plan.checkpoints = default_checkpoints(2000);
    let agg = run_trials(&plan, 1)?;
    println!("{:>6} {:>12} {:>12} {:>10}", "t", "p_rb", "p_naive", "stderr");
    for r in estimate_mistake_curve(&agg)? {
        println!(
            "{:>6} {:>12.4e} {:>12.4e} {:>10.2e}",
            r.t,
            r.p_rb,
            r.p_naive.unwrap_or(f64::NAN),
            r.stderr_rb
        );
    }
    Ok(())
}
