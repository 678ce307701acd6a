//! How often the herd changes its mind: survival of the upset count with a
//! geometric fit.

use herding::montecarlo::{estimate_upset_tail, run_trials, SimulationPlan};
use herding::signal::GaussianSignalModel;

fn main() -> herding::Result<()> {
    let model = GaussianSignalModel::new(1.0)?;
    let plan = SimulationPlan::new(&model, 500, 20_000, 7);
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let tail = estimate_upset_tail(&run_trials(&plan, threads)?)?;
    for r in tail.rows.iter().take(12) {
        println!("P(upsets >= {:>2}) = {:.5}  [{:.5}, {:.5}]", r.n, r.survival, r.lo, r.hi);
    }
    println!("log-survival slope {:.4}, R^2 {:.4}", tail.fit.slope, tail.fit.r_squared);
    Ok(())
}
