use std::io::Write;

use super::{d_plus, BeliefState};
use crate::error::{Error, Result};
use crate::numeric::{fmt_f64, CompensatedSum};
use crate::signal::{SignalModel, StateOfWorld};

/// The public ratio along the path on which every agent so far played +1.
#[derive(Debug, Clone, PartialEq)]
pub struct EllStarPath {
    pub prior_llr: f64,
    /// values[t - 1] = ell*_t for t = 1..=horizon.
    pub values: Vec<f64>,
}

impl EllStarPath {
    pub fn horizon(&self) -> u64 {
        self.values.len() as u64
    }

    /// ell*_t, 1-based.
    pub fn at(&self, t: u64) -> f64 {
        self.values[(t - 1) as usize]
    }
}

fn check_horizon(horizon: u64) -> Result<()> {
    if horizon == 0 {
        return Err(Error::validation("horizon", "must be at least 1"));
    }
    Ok(())
}

/// ell*_1..=ell*_horizon, starting from ell*_1 = prior_llr.
pub fn ell_star_path<M: SignalModel + ?Sized>(model: &M, horizon: u64, prior_llr: f64) -> Result<EllStarPath> {
    check_horizon(horizon)?;
    let mut values = Vec::with_capacity(horizon as usize);
    let mut state = BeliefState::new(prior_llr);
    values.push(state.ell());
    for _ in 1..horizon {
        state.advance(d_plus(model, state.ell()));
        values.push(state.ell());
    }
    Ok(EllStarPath { prior_llr, values })
}

/// ell*_t at the requested times only, without storing the whole path.
/// `times` must be increasing and start at 1 or later.
pub fn ell_star_at<M: SignalModel + ?Sized>(model: &M, prior_llr: f64, times: &[u64]) -> Result<Vec<(u64, f64)>> {
    if times.first() == Some(&0) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("checkpoints", "must be strictly increasing times >= 1"));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut state = BeliefState::new(prior_llr);
    for &t in times {
        while state.t() < t {
            state.advance(d_plus(model, state.ell()));
        }
        out.push((t, state.ell()));
    }
    Ok(out)
}

/// Exact law of the first mistake T_1 under the plus state, up to a horizon.
#[derive(Debug, Clone)]
pub struct FirstMistakeDistribution {
    pub ell_star: EllStarPath,
    /// ln P(T_1 = t), index t - 1.
    pub ln_probs: Vec<f64>,
    /// ln P(T_1 > t), index t - 1.
    pub ln_survivor: Vec<f64>,
}

pub const FIRST_MISTAKE_CSV_HEADER: &str = "t,ell_star,p_first_mistake,log10_p,survivor_mass_running";

impl FirstMistakeDistribution {
    pub fn horizon(&self) -> u64 {
        self.ln_probs.len() as u64
    }

    /// P(T_1 = t), 1-based.
    pub fn prob(&self, t: u64) -> f64 {
        self.ln_probs[(t - 1) as usize].exp()
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.ln_probs.iter().map(|l| l.exp())
    }

    /// P(T_1 > horizon).
    pub fn survivor(&self) -> f64 {
        self.ln_survivor.last().copied().unwrap_or(0.0).exp()
    }

    /// Sum of P(T_1 = t) over the horizon plus the survivor mass.
    pub fn total_mass(&self) -> f64 {
        let mut s = CompensatedSum::default();
        self.probs().for_each(|p| s.add(p));
        s.add(self.survivor());
        s.value()
    }

    /// sum over t <= h of t * P(T_1 = t).
    pub fn partial_mean(&self, h: u64) -> f64 {
        let mut s = CompensatedSum::default();
        for (i, l) in self.ln_probs.iter().take(h as usize).enumerate() {
            s.add((i as f64 + 1.0) * l.exp());
        }
        s.value()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{FIRST_MISTAKE_CSV_HEADER}")?;
        for i in 0..self.ln_probs.len() {
            let lp = self.ln_probs[i];
            writeln!(
                w,
                "{},{},{},{},{}",
                i + 1,
                fmt_f64(self.ell_star.values[i]),
                fmt_f64(lp.exp()),
                fmt_f64(lp / std::f64::consts::LN_10),
                fmt_f64(self.ln_survivor[i].exp())
            )?;
        }
        Ok(())
    }
}

/// P(T_1 = t) = G_+(-ell*_t) prod_{s<t} (1 - G_+(-ell*_s)), with the
/// product carried in log space.
pub fn first_mistake_distribution<M: SignalModel + ?Sized>(
    model: &M,
    horizon: u64,
    prior_llr: f64,
) -> Result<FirstMistakeDistribution> {
    let ell_star = ell_star_path(model, horizon, prior_llr)?;
    let n = ell_star.values.len();
    let mut ln_probs = Vec::with_capacity(n);
    let mut ln_survivor = Vec::with_capacity(n);
    let mut acc = CompensatedSum::default();
    for &ell in &ell_star.values {
        ln_probs.push(acc.value() + model.ln_cdf(StateOfWorld::Plus, -ell));
        acc.add(model.ln_sf(StateOfWorld::Plus, -ell));
        ln_survivor.push(acc.value());
    }
    if ln_probs.iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical("NaN in first-mistake probabilities".into()));
    }
    Ok(FirstMistakeDistribution {
        ell_star,
        ln_probs,
        ln_survivor,
    })
}
