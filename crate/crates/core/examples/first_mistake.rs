//! Exact law of the first mistake and its polynomial tail.

use herding::belief::first_mistake_distribution;
use herding::signal::GaussianSignalModel;

fn main() -> herding::Result<()> {
    let model = GaussianSignalModel::new(1.0)?;
    let d = first_mistake_distribution(&model, 1_000_000, 0.0)?;
    println!("P(T1 = 1) = {:.6}", d.prob(1));
    for t in [10, 100, 1000, 10_000, 100_000, 1_000_000] {
        println!(
            "t = {t:>7}: P(T1 = t) = {:.3e}, sum s P(T1 = s) up to t = {:.2}",
            d.prob(t),
            d.partial_mean(t)
        );
    }
    println!("P(no mistake in 1e6 agents) = {:.4}", d.survivor());
    Ok(())
}
