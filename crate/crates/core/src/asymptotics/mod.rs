//! Growth of the public ratio predicted by f'(t) = G_-(-f(t)), its closed
//! forms, the Gaussian envelopes, and the recurrence iterator it is compared
//! against.

mod envelope;
mod ode;
mod recurrence;

use crate::error::{Error, Result};
use crate::signal::{SignalModel, StateOfWorld};

pub use envelope::{gaussian_envelope_solutions, GaussianEnvelope};
pub use ode::{solve_ode, OdeOptions, OdeSolution, ODE_CSV_HEADER};
pub use recurrence::{
    iterate_recurrence, iterate_recurrence_at, last_sign_change, log_spaced_times, ratio_curve,
};

/// Solves f' = tail(f) where `tail(x)` stands for G_-(-x).
pub fn solve_tail_ode<T>(tail: T, t0: f64, f0: f64, horizon: f64, stops: &[f64]) -> Result<OdeSolution>
where
    T: Fn(f64) -> f64,
{
    if !(f0 >= 0.0) {
        return Err(Error::validation("f0", format!("must be non-negative, got {f0}")));
    }
    solve_ode(|_, f| tail(f), t0, f0, horizon, stops, &OdeOptions::default())
}

/// Solves f' = G_-(-f) for a signal model.
pub fn solve_belief_ode<M: SignalModel + ?Sized>(
    model: &M,
    t0: f64,
    f0: f64,
    horizon: f64,
    stops: &[f64],
) -> Result<OdeSolution> {
    solve_tail_ode(|f| model.cdf(StateOfWorld::Minus, -f), t0, f0, horizon, stops)
}

/// log(t + c): the solution when G_-(-x) = e^-x.
pub fn closed_form_exponential_tail(c: f64, t: f64) -> Result<f64> {
    if !(t + c > 0.0) {
        return Err(Error::validation("t", format!("t + c must be positive, got {}", t + c)));
    }
    Ok((t + c).ln())
}

/// ((k+1)t + c)^(1/(k+1)): the solution when G_-(-x) = x^-k.
pub fn closed_form_polynomial_tail(k: f64, c: f64, t: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::validation("k", format!("must be positive, got {k}")));
    }
    let base = (k + 1.0) * t + c;
    if !(base > 0.0) {
        return Err(Error::validation("t", format!("(k+1)t + c must be positive, got {base}")));
    }
    Ok(base.powf(1.0 / (k + 1.0)))
}

/// (2 sqrt 2 / sigma) sqrt(log t), the Gaussian growth rate of ell.
pub fn gaussian_rate_prediction(sigma: f64, t: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::validation("sigma", format!("must be positive, got {sigma}")));
    }
    if !(t > 1.0) {
        return Err(Error::validation("t", format!("must exceed 1, got {t}")));
    }
    Ok(2.0 * std::f64::consts::SQRT_2 / sigma * t.ln().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub points_checked: usize,
    pub violations: usize,
    /// Grid point with the most negative second difference, if any.
    pub worst_x: Option<f64>,
}

impl ConvexityReport {
    pub fn is_convex(&self) -> bool {
        self.violations == 0
    }
}

/// Checks numerically that x -> G_-(-x) is convex on [x_lo, x_hi] with `n`
/// grid points. Second differences are compared against a rounding allowance,
/// so this is evidence rather than proof.
pub fn check_left_tail_convexity<M: SignalModel + ?Sized>(
    model: &M,
    x_lo: f64,
    x_hi: f64,
    n: usize,
) -> Result<ConvexityReport> {
    if !(x_hi > x_lo) || n < 3 {
        return Err(Error::validation("grid", "need x_hi > x_lo and at least 3 points"));
    }
    let h = (x_hi - x_lo) / (n - 1) as f64;
    let g: Vec<f64> = (0..n).map(|i| model.cdf(StateOfWorld::Minus, -(x_lo + i as f64 * h))).collect();
    let mut report = ConvexityReport {
        points_checked: n - 2,
        violations: 0,
        worst_x: None,
    };
    let mut worst = 0.0;
    for i in 1..n - 1 {
        let second = g[i - 1] - 2.0 * g[i] + g[i + 1];
        let allowance = 8.0 * f64::EPSILON * g[i - 1].abs();
        if second < -allowance {
            report.violations += 1;
            if second < worst {
                worst = second;
                report.worst_x = Some(x_lo + i as f64 * h);
            }
        }
    }
    Ok(report)
}
