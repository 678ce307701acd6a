//! Adaptive Gauss-Kronrod (7/15) quadrature with global bisection.
//!
//! Semi-infinite and infinite ranges are mapped onto (0, 1] with
//! x = a + (1 - t)/t, which keeps every node strictly inside the domain.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-15,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    if !value.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    Ok((value, error))
}

impl Quadrature {
    fn finite<F: Fn(f64) -> f64 + ?Sized>(&self, f: &F, a: f64, b: f64) -> Result<Integral> {
        let (value, error) = kronrod(f, a, b)?;
        let mut heap = BinaryHeap::new();
        heap.push(Piece { a, b, value, error });
        let mut total = value;
        let mut total_err = error;
        let mut evaluations = 15;
        loop {
            if total_err <= self.abs_tol.max(self.rel_tol * total.abs()) {
                // Re-sum in a fixed order so the result does not depend on
                // heap layout.
                let mut pieces: Vec<Piece> = heap.into_vec();
                pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
                let value = pieces.iter().map(|p| p.value).sum();
                return Ok(Integral {
                    value,
                    error: total_err,
                    evaluations,
                });
            }
            if heap.len() >= self.max_intervals {
                return Err(Error::Numerical(format!(
                    "quadrature on [{a}, {b}] did not converge: error estimate {total_err:e} after {} intervals",
                    heap.len()
                )));
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                return Err(Error::Numerical(format!(
                    "quadrature interval collapsed near {mid}"
                )));
            }
            let (lv, le) = kronrod(f, worst.a, mid)?;
            let (rv, re) = kronrod(f, mid, worst.b)?;
            evaluations += 30;
            total += lv + rv - worst.value;
            total_err += le + re - worst.error;
            heap.push(Piece {
                a: worst.a,
                b: mid,
                value: lv,
                error: le,
            });
            heap.push(Piece {
                a: mid,
                b: worst.b,
                value: rv,
                error: re,
            });
        }
    }

    /// Integrates `f` over `[a, b]`; either bound may be infinite.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Integral> {
        self.integrate_dyn(&f, a, b)
    }

    fn integrate_dyn(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<Integral> {
        if a.is_nan() || b.is_nan() {
            return Err(Error::Numerical("NaN integration bound".into()));
        }
        if a == b {
            return Ok(Integral {
                value: 0.0,
                error: 0.0,
                evaluations: 0,
            });
        }
        if a > b {
            let r = self.integrate_dyn(f, b, a)?;
            return Ok(Integral {
                value: -r.value,
                ..r
            });
        }
        match (a.is_finite(), b.is_finite()) {
            (true, true) => self.finite(f, a, b),
            (true, false) => self.finite(
                &|t: f64| {
                    let x = a + (1.0 - t) / t;
                    f(x) / (t * t)
                },
                0.0,
                1.0,
            ),
            (false, true) => self.finite(
                &|t: f64| {
                    let x = b - (1.0 - t) / t;
                    f(x) / (t * t)
                },
                0.0,
                1.0,
            ),
            (false, false) => {
                let left = self.integrate_dyn(f, f64::NEG_INFINITY, 0.0)?;
                let right = self.integrate_dyn(f, 0.0, f64::INFINITY)?;
                Ok(Integral {
                    value: left.value + right.value,
                    error: left.error + right.error,
                    evaluations: left.evaluations + right.evaluations,
                })
            }
        }
    }
}

/// Integrates with default tolerances.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<Integral> {
    Quadrature::default().integrate(f, a, b)
}
