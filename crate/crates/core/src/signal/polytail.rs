use rand::RngCore;

use super::{ModelSpec, SignalModel, StateOfWorld};
use crate::error::{Error, Result};
use crate::numeric::integrate;
use crate::numeric::special::ln_upper_gamma;
use crate::rng::open01;

/// Normalizing constant c for the polynomial-tail density pair: the unique
/// c with c * (int_1^inf e^-x x^(-k-1) dx + int_1^inf x^(-k-1) dx) = 1.
///
/// The exponential branch is integrated numerically; the polynomial branch
/// is 1/k.
pub fn poly_tail_normalizer(k: f64) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::validation("k", format!("must be positive and finite, got {k}")));
    }
    let exp_branch = integrate(|x: f64| (-x - (k + 1.0) * x.ln()).exp(), 1.0, f64::INFINITY)
        .map_err(|e| e.context(format!("normalizer for k = {k}")))?;
    Ok(1.0 / (exp_branch.value + 1.0 / k))
}

/// Private LLR with polynomial tails on the side of the wrong state:
///
/// f_-(x) = c e^-x x^(-k-1) for x >= 1, 0 on (-1, 1), c (-x)^(-k-1) for
/// x <= -1, and f_+(x) = f_-(-x). Under this pair the LLR of a draw is the
/// draw itself, and G_-(-x) = 1 - G_+(x) = (c/k) x^-k for x > 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTailSignalModel {
    k: f64,
    c: f64,
    ln_c: f64,
    /// c/k, the mass of the polynomial branch.
    poly_mass: f64,
}

const NEWTON_TOL: f64 = 1e-12;

impl PolyTailSignalModel {
    pub fn new(k: f64) -> Result<Self> {
        let c = poly_tail_normalizer(k)?;
        Ok(Self {
            k,
            c,
            ln_c: c.ln(),
            poly_mass: c / k,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn normalizer(&self) -> f64 {
        self.c
    }

    /// Tail onset; fixed at 1.
    pub fn x0(&self) -> f64 {
        1.0
    }

    /// ln(c * Gamma(-k, y)) for y >= 1: the minus-state survival on the
    /// exponential branch.
    #[inline]
    fn ln_exp_branch_sf(&self, y: f64) -> f64 {
        self.ln_c + ln_upper_gamma(-self.k, y)
    }

    fn minus_cdf(&self, y: f64) -> f64 {
        if y <= -1.0 {
            self.poly_mass * (-y).powf(-self.k)
        } else if y < 1.0 {
            self.poly_mass
        } else {
            -self.ln_exp_branch_sf(y).exp_m1()
        }
    }

    fn minus_ln_cdf(&self, y: f64) -> f64 {
        if y <= -1.0 {
            self.poly_mass.ln() - self.k * (-y).ln()
        } else if y < 1.0 {
            self.poly_mass.ln()
        } else {
            (-self.ln_exp_branch_sf(y).exp()).ln_1p()
        }
    }

    fn minus_ln_sf(&self, y: f64) -> f64 {
        if y < 1.0 {
            (-self.minus_cdf(y)).ln_1p()
        } else {
            self.ln_exp_branch_sf(y)
        }
    }

    /// Solves c * Gamma(-k, y) = survival for y >= 1 by bracketed Newton on
    /// the log scale.
    fn invert_exp_branch(&self, survival: f64) -> f64 {
        let target = survival.ln();
        let h = |y: f64| self.ln_exp_branch_sf(y) - target;
        let mut lo = 1.0;
        let mut hi = 1.0 + (-target).max(1.0);
        while h(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        let mut y = 0.5 * (lo + hi);
        for _ in 0..200 {
            let ln_sf = self.ln_exp_branch_sf(y);
            let hy = ln_sf - target;
            if hy.abs() < NEWTON_TOL {
                return y;
            }
            if hy > 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            // d/dy ln Gamma(-k, y) = -e^-y y^(-k-1) / Gamma(-k, y)
            let slope = -(-y - (self.k + 1.0) * y.ln() + self.ln_c - ln_sf).exp();
            let newton = y - hy / slope;
            y = if newton > lo && newton < hi && slope.is_finite() {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                return y;
            }
        }
        y
    }

    fn sample_minus(&self, rng: &mut dyn RngCore) -> f64 {
        let u = open01(rng);
        if u <= self.poly_mass {
            -(self.k * u / self.c).powf(-1.0 / self.k)
        } else {
            self.invert_exp_branch(1.0 - u)
        }
    }
}

impl SignalModel for PolyTailSignalModel {
    // L | plus has the law of -(L | minus).
    fn cdf(&self, state: StateOfWorld, x: f64) -> f64 {
        match state {
            StateOfWorld::Minus => self.minus_cdf(x),
            StateOfWorld::Plus => self.minus_ln_sf(-x).exp(),
        }
    }

    fn ln_cdf(&self, state: StateOfWorld, x: f64) -> f64 {
        match state {
            StateOfWorld::Minus => self.minus_ln_cdf(x),
            StateOfWorld::Plus => self.minus_ln_sf(-x),
        }
    }

    fn ln_sf(&self, state: StateOfWorld, x: f64) -> f64 {
        match state {
            StateOfWorld::Minus => self.minus_ln_sf(x),
            StateOfWorld::Plus => self.minus_ln_cdf(-x),
        }
    }

    fn sf(&self, state: StateOfWorld, x: f64) -> f64 {
        match state {
            StateOfWorld::Minus => self.minus_ln_sf(x).exp(),
            StateOfWorld::Plus => self.minus_cdf(-x),
        }
    }

    fn sample(&self, state: StateOfWorld, rng: &mut dyn RngCore) -> f64 {
        let v = self.sample_minus(rng);
        match state {
            StateOfWorld::Minus => v,
            StateOfWorld::Plus => -v,
        }
    }

    fn tilted_minus_cdf(&self, x: f64) -> Result<f64> {
        let (k, c) = (self.k, self.c);
        let poly = |z: f64| (z + c.ln() - (k + 1.0) * (-z).ln()).exp();
        let mut total = integrate(poly, f64::NEG_INFINITY, x.min(-1.0))?.value;
        if x > 1.0 {
            // e^z times the exponential-branch density
            let expo = |z: f64| z.exp() * c * (-z).exp() * z.powf(-k - 1.0);
            total += integrate(expo, 1.0, x)?.value;
        }
        Ok(total)
    }

    fn is_discrete(&self) -> bool {
        false
    }

    fn spec(&self) -> ModelSpec {
        ModelSpec::Polytail { k: self.k }
    }
}
