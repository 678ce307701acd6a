use herding::belief::first_mistake_distribution;
use herding::montecarlo::{simulate_trajectory, Sampler, TrajectoryOptions};
use herding::signal::{GaussianSignalModel, StateOfWorld};

// Fraction of trials whose first mistake lands in (lo, hi], with its
// distance from the exact probability in binomial standard errors.
fn late_first_mistakes(sampler: Sampler, lo: u64, hi: u64, trials: u64) -> (f64, f64) {
    let m = GaussianSignalModel::new(3.0).unwrap();
    let exact = first_mistake_distribution(&m, hi, 0.0).unwrap();
    let p: f64 = (lo + 1..=hi).map(|t| exact.prob(t)).sum();
    let opts = TrajectoryOptions {
        sampler,
        ..TrajectoryOptions::default()
    };
    let hits = (0..trials)
        .filter(|&i| {
            let (_, s) = simulate_trajectory(&m, StateOfWorld::Plus, hi, 21, i, &opts).unwrap();
            s.t_first_mistake > lo && s.t_first_mistake <= hi
        })
        .count() as f64;
    let n = trials as f64;
    let z = (hits / n - p) / (p * (1.0 - p) / n).sqrt();
    (p, z)
}

#[test]
fn both_samplers_match_the_exact_late_first_mistake_law() {
    for sampler in [Sampler::Thinned, Sampler::Literal] {
        let (p, z) = late_first_mistakes(sampler, 100, 2000, 20_000);
        assert!(p > 1e-3, "{p}");
        assert!(z.abs() < 4.0, "{sampler:?}: p = {p}, z = {z}");
    }
}
