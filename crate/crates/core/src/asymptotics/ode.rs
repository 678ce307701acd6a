use std::io::Write;

use crate::error::{Error, Result};
use crate::numeric::fmt_f64;

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (fifth minus embedded fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension of order 4
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u64,
    /// Initial step; chosen automatically when `None`.
    pub first_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 100_000_000,
            first_step: None,
        }
    }
}

/// Accepted steps of a scalar ODE solve. Between grid points the solution is
/// evaluated with the fourth-order Dormand-Prince continuous extension.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub t0: f64,
    pub f0: f64,
    pub t_grid: Vec<f64>,
    pub f_values: Vec<f64>,
    pub dfdt: Vec<f64>,
    /// Interpolation coefficients of step i, covering [t_grid[i], t_grid[i + 1]].
    dense: Vec<[f64; 4]>,
}

pub const ODE_CSV_HEADER: &str = "t,f,dfdt";

impl OdeSolution {
    pub fn horizon(&self) -> f64 {
        *self.t_grid.last().unwrap()
    }

    /// f(t) for t in [t0, horizon]; exact at grid points.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= self.t0 && t <= self.horizon()) {
            return Err(Error::validation(
                "t",
                format!("{t} outside the solved range [{}, {}]", self.t0, self.horizon()),
            ));
        }
        let i = self.t_grid.partition_point(|&g| g < t);
        if self.t_grid[i] == t {
            return Ok(self.f_values[i]);
        }
        let (ta, tb) = (self.t_grid[i - 1], self.t_grid[i]);
        let s = (t - ta) / (tb - ta);
        let s1 = 1.0 - s;
        let [r2, r3, r4, r5] = self.dense[i - 1];
        Ok(self.f_values[i - 1] + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5))))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{ODE_CSV_HEADER}")?;
        for i in 0..self.t_grid.len() {
            writeln!(
                w,
                "{},{},{}",
                fmt_f64(self.t_grid[i]),
                fmt_f64(self.f_values[i]),
                fmt_f64(self.dfdt[i])
            )?;
        }
        Ok(())
    }
}

/// Integrates f' = rhs(t, f) from (t0, f0) to `horizon` with an adaptive
/// Dormand-Prince 5(4) pair. Every time in `stops` inside the range is hit
/// exactly by an accepted step.
pub fn solve_ode<F>(rhs: F, t0: f64, f0: f64, horizon: f64, stops: &[f64], opts: &OdeOptions) -> Result<OdeSolution>
where
    F: Fn(f64, f64) -> f64,
{
    if !(t0.is_finite() && f0.is_finite()) {
        return Err(Error::validation("t0", "initial condition must be finite"));
    }
    if !(horizon > t0 && horizon.is_finite()) {
        return Err(Error::validation("horizon", format!("must exceed t0 = {t0}, got {horizon}")));
    }
    let mut stops: Vec<f64> = stops.iter().copied().filter(|&s| s > t0 && s < horizon).collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops.push(horizon);
    let mut next_stop = 0;

    let eval = |t: f64, y: f64| -> Result<f64> {
        let v = rhs(t, y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!("right-hand side is {v} at t = {t}, f = {y}")))
        }
    };

    let mut t = t0;
    let mut y = f0;
    let mut k1 = eval(t, y)?;
    let mut sol = OdeSolution {
        t0,
        f0,
        t_grid: vec![t],
        f_values: vec![y],
        dfdt: vec![k1],
        dense: Vec::new(),
    };

    let mut h = match opts.first_step {
        Some(h) => h,
        None => {
            // Hairer, Norsett & Wanner's starting-step heuristic.
            let scale = opts.atol + opts.rtol * y.abs();
            let d0 = y.abs() / scale;
            let d1 = k1.abs() / scale;
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            let h0 = h0.min(horizon - t);
            let k_euler = eval(t + h0, y + h0 * k1)?;
            let d2 = (k_euler - k1).abs() / scale / h0;
            let h1 = if d1.max(d2) <= 1e-15 {
                (1e-6f64).max(h0 * 1e-3)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            };
            (100.0 * h0).min(h1).min(horizon - t)
        }
    };

    let mut steps = 0u64;
    while t < horizon {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Numerical(format!("ODE exceeded {} steps at t = {t}", opts.max_steps)));
        }
        let target = stops[next_stop];
        let mut landing = false;
        if t + h >= target {
            h = target - t;
            landing = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::Numerical(format!("ODE step size collapsed to {h:e} at t = {t}")));
        }
        let k2 = eval(t + C2 * h, y + h * A21 * k1)?;
        let k3 = eval(t + C3 * h, y + h * (A31 * k1 + A32 * k2))?;
        let k4 = eval(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
        let k5 = eval(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))?;
        let k6 = eval(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))?;
        let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let t_new = if landing { target } else { t + h };
        let k7 = eval(t_new, y_new)?;
        let err_abs = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = opts.atol + opts.rtol * y.abs().max(y_new.abs());
        let err = (err_abs / scale).abs();

        if err <= 1.0 {
            let dy = y_new - y;
            let bspl = h * k1 - dy;
            sol.dense.push([
                dy,
                bspl,
                dy - h * k7 - bspl,
                h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            ]);
            t = t_new;
            y = y_new;
            k1 = k7;
            sol.t_grid.push(t);
            sol.f_values.push(y);
            sol.dfdt.push(k1);
            if landing {
                next_stop += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_matches_closed_form() {
        let sol = solve_ode(|_, y| y, 0.0, 1.0, 5.0, &[2.5], &OdeOptions::default()).unwrap();
        assert!(sol.t_grid.contains(&2.5));
        for &t in &[1.0, 2.5, 5.0] {
            let v = sol.eval(t).unwrap();
            assert!((v / t.exp() - 1.0).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn logarithmic_solution_over_many_decades() {
        let stops: Vec<f64> = (1..=6).map(|j| 10f64.powi(j)).collect();
        let sol = solve_ode(|_, y| (-y).exp(), 1.0, 0.0, 1e6, &stops, &OdeOptions::default()).unwrap();
        for &t in &stops {
            let v = sol.eval(t).unwrap();
            assert!((v / t.ln() - 1.0).abs() < 1e-8, "t={t} {v}");
        }
        // dense output between grid points
        for t in [1.5, 123.456, 5.5e4, 987_654.0] {
            let v = sol.eval(t).unwrap();
            assert!((v / t.ln() - 1.0).abs() < 1e-8, "t={t} {v}");
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(solve_ode(|_, y| y, 1.0, 1.0, 0.5, &[], &OdeOptions::default()).is_err());
        let e = solve_ode(|_, y| 1.0 / (1.0 - y), 0.0, 0.0, 1.0, &[], &OdeOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Numerical(_)), "{e}");
        let sol = solve_ode(|_, _| 1.0, 0.0, 0.0, 1.0, &[], &OdeOptions::default()).unwrap();
        assert!(sol.eval(2.0).is_err());
    }
}
