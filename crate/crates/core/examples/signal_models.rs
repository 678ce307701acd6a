//! The three signal families side by side: left tails, the LLR identity and
//! sampling.

use herding::rng::TrialRng;
use herding::signal::{check_llr_identity, ModelSpec, SignalModel, StateOfWorld};

fn main() -> herding::Result<()> {
    let specs = [
        ModelSpec::Gaussian { sigma: 1.0 },
        ModelSpec::Polytail { k: 2.0 },
        ModelSpec::Ratetarget {
            q_table: (-1..=2000).map(|x| 1.0 / (x as f64 + 2.0)).collect(),
            cutoff_mass: 1e-12,
            max_support: 100_000,
        },
    ];
    for spec in &specs {
        let m = spec.build()?;
        println!("{}", spec.family());
        for x in [1.0, 5.0, 20.0, 100.0] {
            println!("  ln G-(-{x}) = {:.6}", m.ln_cdf(StateOfWorld::Minus, -x));
        }
        let grid: Vec<f64> = (-5..=5).map(|i| i as f64 + 0.5).collect();
        println!("  LLR identity error {:.2e}", check_llr_identity(&m, &grid)?.max_error);
        let mut rng = TrialRng::new(1, 0);
        let draws: Vec<String> = (0..5).map(|_| format!("{:.3}", m.sample(StateOfWorld::Plus, &mut rng))).collect();
        println!("  draws under +1: {}", draws.join(" "));
    }
    Ok(())
}
