//! Tail-accurate special functions.
//!
//! Everything here returns logarithms where the plain value can underflow.
//! The normal CDF uses `erfc` directly in the central region (where it is
//! accurate in relative terms) and the Laplace continued fraction for the
//! Mills ratio in the far tail.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

/// ln(sqrt(2 pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `ln_ndtr` switches to the continued fraction.
const TAIL_SWITCH: f64 = -8.0;

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 10_000;

/// Standard normal CDF.
pub fn ndtr(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Natural log of the standard normal CDF, accurate in both tails.
pub fn ln_ndtr(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z == f64::INFINITY {
        return 0.0;
    }
    if z == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if z >= 0.0 {
        // Phi(z) = 1 - Phi(-z) with Phi(-z) <= 1/2
        (-0.5 * libm::erfc(z * FRAC_1_SQRT_2)).ln_1p()
    } else if z >= TAIL_SWITCH {
        (0.5 * libm::erfc(-z * FRAC_1_SQRT_2)).ln()
    } else {
        ln_ndtr_tail(-z)
    }
}

/// ln Phi(-x) for x > 0 via the Mills ratio continued fraction. Used by
/// `ln_ndtr` for x beyond 8 and exposed for cross-checking the switch.
pub fn ln_ndtr_tail(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    -0.5 * x * x - LN_SQRT_2PI + mills_ratio(x).ln()
}

/// Mills ratio R(x) = Phi(-x) / phi(x) for x > 0, by modified Lentz on
/// R = 1 / (x + 1/(x + 2/(x + 3/(x + ...)))).
pub fn mills_ratio(x: f64) -> f64 {
    let mut f = x.max(CF_TINY);
    let mut c = f;
    let mut d = 0.0;
    for n in 1..CF_MAX_ITER {
        let a = n as f64;
        d = x + a * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    1.0 / f
}

/// ln Gamma(a, x), the log of the upper incomplete gamma function, by the
/// Legendre continued fraction. Valid for any real `a` provided
/// `x >= max(1, a + 1)`; the polynomial-tail model only ever asks for
/// negative `a` and `x >= 1`.
pub fn ln_upper_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(x >= 1.0 && x >= a + 1.0, "continued fraction outside its domain");
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / CF_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..CF_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = b + an / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    -x + a * x.ln() + h.ln()
}

/// ln(1 - e^x) for x <= 0.
pub fn ln_1m_exp(x: f64) -> f64 {
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// ln(e^a + e^b) without overflow.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Logistic function e^x / (e^x + 1), evaluated without overflow.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
