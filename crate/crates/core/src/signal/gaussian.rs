use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{ModelSpec, SignalModel, StateOfWorld};
use crate::error::{Error, Result};
use crate::numeric::integrate;
use crate::numeric::special::{ln_ndtr, ndtr};

/// Signals are Normal(+/-1, sigma^2); the private LLR is 2s/sigma^2, so
/// L | state ~ Normal(state * 2/sigma^2, 4/sigma^2).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSignalModel {
    sigma: f64,
    mean: f64,
    sd: f64,
}

impl GaussianSignalModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::validation("sigma", format!("must be positive and finite, got {sigma}")));
        }
        Ok(Self {
            sigma,
            mean: 2.0 / (sigma * sigma),
            sd: 2.0 / sigma,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Standard deviation of L, usually written tau = 2/sigma.
    pub fn tau(&self) -> f64 {
        self.sd
    }

    /// |E(L | state)| = 2/sigma^2.
    pub fn llr_mean(&self) -> f64 {
        self.mean
    }

    #[inline]
    fn z(&self, state: StateOfWorld, x: f64) -> f64 {
        (x - f64::from(state.sign()) * self.mean) / self.sd
    }
}

impl SignalModel for GaussianSignalModel {
    fn cdf(&self, state: StateOfWorld, x: f64) -> f64 {
        ndtr(self.z(state, x))
    }

    fn ln_cdf(&self, state: StateOfWorld, x: f64) -> f64 {
        ln_ndtr(self.z(state, x))
    }

    fn ln_sf(&self, state: StateOfWorld, x: f64) -> f64 {
        ln_ndtr(-self.z(state, x))
    }

    fn sf(&self, state: StateOfWorld, x: f64) -> f64 {
        ndtr(-self.z(state, x))
    }

    fn sample(&self, state: StateOfWorld, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        f64::from(state.sign()) * self.mean + self.sd * z
    }

    fn tilted_minus_cdf(&self, x: f64) -> Result<f64> {
        let ln_norm = self.sd.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln();
        let (m, s) = (self.mean, self.sd);
        let r = integrate(
            |z: f64| {
                let u = (z + m) / s;
                (z - 0.5 * u * u - ln_norm).exp()
            },
            f64::NEG_INFINITY,
            x,
        )?;
        Ok(r.value)
    }

    fn is_discrete(&self) -> bool {
        false
    }

    fn spec(&self) -> ModelSpec {
        ModelSpec::Gaussian { sigma: self.sigma }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::TrialRng;
    use crate::signal::check_llr_identity;
    use StateOfWorld::{Minus, Plus};

    #[test]
    fn rejects_bad_sigma() {
        assert!(GaussianSignalModel::new(0.0).is_err());
        assert!(GaussianSignalModel::new(f64::NAN).is_err());
    }

    #[test]
    fn cdf_examples() {
        let m = GaussianSignalModel::new(2.0).unwrap();
        assert!((m.cdf(Minus, 0.0) - 0.691_462).abs() < 1e-6);
        assert!((m.cdf(Plus, 0.0) - 0.308_538).abs() < 1e-6);
    }

    #[test]
    fn far_log_survival() {
        let m = GaussianSignalModel::new(2.0).unwrap();
        // survival of Normal(-0.5, 1) at 40 is Phi(-40.5)
        assert!((m.ln_sf(Minus, 40.0) + 824.745_849_244_038).abs() < 1e-9);
        assert!(m.ln_sf(Minus, -1e3).abs() < 1e-300);
    }

    #[test]
    fn identity_holds() {
        let m = GaussianSignalModel::new(2.0).unwrap();
        let grid: Vec<f64> = (-3..=3).map(f64::from).collect();
        let r = check_llr_identity(&m, &grid).unwrap();
        assert!(r.max_error <= 1e-8, "{r:?}");
    }

    #[test]
    fn sample_mean() {
        let m = GaussianSignalModel::new(2.0).unwrap();
        let mut rng = TrialRng::new(11, 0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| m.sample(Plus, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.004, "{mean}");
    }
}
