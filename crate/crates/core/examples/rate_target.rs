//! A discrete signal built so the public ratio grows like t / log t.

use herding::asymptotics::log_spaced_times;
use herding::belief::ell_star_at;
use herding::signal::{build_rate_target, DEFAULT_MAX_SUPPORT};

fn main() -> herding::Result<()> {
    let q: Vec<f64> = (-1..=100_000i64).map(|x| 1.0 / (x as f64 + std::f64::consts::E).ln()).collect();
    let model = build_rate_target(&q, 1e-12, DEFAULT_MAX_SUPPORT)?;
    println!("support [-{0}, {0}]", model.half_width());
    for (t, ell) in ell_star_at(&model, 0.0, &log_spaced_times(10, 1_000_000))? {
        let r = t as f64 / (t as f64).ln();
        println!("t = {t:>7}: ell* = {ell:>10.2}, ell* / (t / log t) = {:.4}", ell / r);
    }
    Ok(())
}
