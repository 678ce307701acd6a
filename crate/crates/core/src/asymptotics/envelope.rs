use crate::error::{Error, Result};

/// Comparison tails for the Gaussian model,
/// F_eta(x) = exp(-(1 - eta) x^2 / (2 tau^2)) / x, and the exact solutions
/// of f' = F_eta(f):
///
/// ```text
/// f_eta(t) = sqrt(2) tau / sqrt(1 - eta) * sqrt(log(t + c) + log((1 - eta) / tau^2))
/// ```
///
/// eta = 0 bounds ell* from below, eta > 0 from above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianEnvelope {
    pub eta: f64,
    pub tau: f64,
    pub c_shift: f64,
}

impl GaussianEnvelope {
    pub fn new(eta: f64, tau: f64, c_shift: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::validation("eta", format!("must lie in [0, 1), got {eta}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::validation("tau", format!("must be positive, got {tau}")));
        }
        if !c_shift.is_finite() {
            return Err(Error::validation("c_shift", "must be finite"));
        }
        Ok(Self { eta, tau, c_shift })
    }

    /// F_eta(x).
    pub fn tail(&self, x: f64) -> f64 {
        (-(1.0 - self.eta) * x * x / (2.0 * self.tau * self.tau)).exp() / x
    }

    /// First time at which f_eta is defined.
    pub fn domain_start(&self) -> f64 {
        self.tau * self.tau / (1.0 - self.eta) - self.c_shift
    }

    /// Time from which this envelope lies on or above the eta = 0 envelope
    /// with the same tau and shift: t + c >= tau^2 (1 - eta)^(-1/eta).
    pub fn above_lower_from(&self) -> f64 {
        let factor = if self.eta == 0.0 {
            std::f64::consts::E
        } else {
            (1.0 - self.eta).powf(-1.0 / self.eta)
        };
        self.tau * self.tau * factor - self.c_shift
    }

    /// f_eta(t).
    pub fn value(&self, t: f64) -> Result<f64> {
        let s = t + self.c_shift;
        let inner = if s > 0.0 {
            s.ln() + ((1.0 - self.eta) / (self.tau * self.tau)).ln()
        } else {
            f64::NAN
        };
        if !(inner > 0.0) {
            return Err(Error::validation(
                "t",
                format!("envelope undefined at t = {t}; needs t > {}", self.domain_start()),
            ));
        }
        Ok(std::f64::consts::SQRT_2 * self.tau / (1.0 - self.eta).sqrt() * inner.sqrt())
    }
}

/// Free-function form of [`GaussianEnvelope::value`].
pub fn gaussian_envelope_solutions(eta: f64, tau: f64, c_shift: f64, t: f64) -> Result<f64> {
    GaussianEnvelope::new(eta, tau, c_shift)?.value(t)
}
