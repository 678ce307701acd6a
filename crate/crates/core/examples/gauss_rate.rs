//! Growth of the all-correct public ratio for Gaussian signals against
//! (2 sqrt 2 / sigma) sqrt(log t) and the comparison envelopes.

use herding::asymptotics::{gaussian_rate_prediction, log_spaced_times, GaussianEnvelope};
use herding::belief::ell_star_at;
use herding::signal::GaussianSignalModel;

fn main() -> herding::Result<()> {
    let sigma = 1.0;
    let model = GaussianSignalModel::new(sigma)?;
    let lower = GaussianEnvelope::new(0.0, model.tau(), 0.0)?;
    let upper = GaussianEnvelope::new(0.1, model.tau(), 0.0)?;
    let times = log_spaced_times(10, 1_000_000);
    println!("{:>8} {:>9} {:>9} {:>7} {:>9} {:>9}", "t", "ell*", "pred", "ratio", "f_0", "f_0.1");
    for (t, ell) in ell_star_at(&model, 0.0, &times)? {
        let tf = t as f64;
        let pred = gaussian_rate_prediction(sigma, tf)?;
        println!(
            "{t:>8} {ell:>9.4} {pred:>9.4} {:>7.4} {:>9.4} {:>9.4}",
            ell / pred,
            lower.value(tf)?,
            upper.value(tf)?
        );
    }
    Ok(())
}
