//! f' = G(-f) against its closed forms and against the discrete recurrence.

use herding::asymptotics::{
    closed_form_exponential_tail, iterate_recurrence_at, log_spaced_times, solve_belief_ode, solve_tail_ode,
};
use herding::belief::ell_star_at;
use herding::signal::PolyTailSignalModel;

fn main() -> herding::Result<()> {
    let times = log_spaced_times(10, 1_000_000);
    let stops: Vec<f64> = times.iter().map(|&t| t as f64).collect();

    let sol = solve_tail_ode(|x| (-x).exp(), 1.0, 2f64.ln(), 1e6, &stops)?;
    let rec = iterate_recurrence_at(|x| (-x).exp(), 2f64.ln(), &times)?;
    println!("exponential tail, f = log(t + 1)");
    for (t, a) in rec {
        let exact = closed_form_exponential_tail(1.0, t as f64)?;
        println!("  t = {t:>7}: ode err {:.1e}, recurrence / f = {:.6}", sol.eval(t as f64)? / exact - 1.0, a / exact);
    }

    let model = PolyTailSignalModel::new(2.0)?;
    let sol = solve_belief_ode(&model, 1.0, 0.0, 1e6, &stops)?;
    println!("polytail k = 2, ell* against the ODE");
    for (t, ell) in ell_star_at(&model, 0.0, &times)? {
        println!("  t = {t:>7}: ell* = {ell:.4}, f = {:.4}", sol.eval(t as f64)?);
    }
    Ok(())
}
