//! Time until the last mistake, as a censored mean at growing horizons.

use herding::montecarlo::{estimate_time_to_learn, run_trials, SimulationPlan};
use herding::signal::{GaussianSignalModel, PolyTailSignalModel, SignalModel};

fn report(name: &str, model: &dyn SignalModel) -> herding::Result<()> {
    let mut plan = SimulationPlan::new(model, 100_000, 1000, 3);
    plan.ttl_horizons = vec![1000, 10_000, 100_000];
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    for r in estimate_time_to_learn(&run_trials(&plan, threads)?)? {
        println!(
            "{name:>9} H = {:>6}: lower bound {:>9.2}, censored {:.4}{}",
            r.horizon,
            r.lower_bound,
            r.censored_frac,
            if r.unreliable { " (unreliable)" } else { "" }
        );
    }
    Ok(())
}

fn main() -> herding::Result<()> {
    report("polytail", &PolyTailSignalModel::new(2.0)?)?;
    report("gaussian", &GaussianSignalModel::new(1.0)?)
}
