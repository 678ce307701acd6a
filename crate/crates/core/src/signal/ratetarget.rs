use rand::RngCore;

use super::{ModelSpec, SignalModel, StateOfWorld};
use crate::error::{Error, Result};
use crate::numeric::special::ln_add_exp;
use crate::numeric::CompensatedSum;
use crate::rng::open01;

pub const DEFAULT_CUTOFF_MASS: f64 = 1e-12;
pub const DEFAULT_MAX_SUPPORT: usize = 100_000;

/// Below this a cumulative sum is read from the log-space table instead of
/// the linear one.
const LINEAR_FLOOR: f64 = 1e-280;

/// Integer-valued private signal whose left tail G_-(-x) follows a supplied
/// decreasing table Q, so that D_+ decays like Q.
///
/// With dQ(m) = Q(m-1) - Q(m) the minus-state weights are
/// nu(-m) = dQ(m) and nu(m) = dQ(m) e^-m; the plus-state weights are
/// nu(n) e^n. Both laws share the normalizer C and the LLR at n is n.
#[derive(Debug, Clone)]
pub struct RateTargetSignalModel {
    q_table: Vec<f64>,
    cutoff_mass: f64,
    max_support: usize,
    /// Support is the integers in [-half_width, half_width].
    half_width: usize,
    residual_mass: f64,
    normalizer: f64,
    dq: Vec<f64>,
    /// Minus-state point masses, indexed by n + half_width.
    mass: Vec<f64>,
    ln_mass: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    ln_left: Vec<f64>,
    ln_right: Vec<f64>,
}

/// Builds the discrete model from `q` = [Q(-1), Q(0), ..., Q(N_table)].
///
/// The support is cut at the smallest N whose residual nu-mass beyond +/-N
/// is below `cutoff_mass` (or at the end of the table), and closed by one
/// symmetric atom pair at +/-(N+1) that carries the remaining Q(N). The
/// closure is what a table ending in Q(N+1) = 0 would produce, so LLR(n) = n
/// and the mirror symmetry survive truncation exactly.
pub fn build_rate_target(q: &[f64], cutoff_mass: f64, max_support: usize) -> Result<RateTargetSignalModel> {
    if q.len() < 2 {
        return Err(Error::validation("q_table", "needs at least Q(-1) and Q(0)"));
    }
    if let Some((i, v)) = q.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::validation(
            "q_table",
            format!("entry {i} (Q({})) must be positive and finite, got {v}", i as i64 - 1),
        ));
    }
    if let Some(i) = q.windows(2).position(|w| w[1] >= w[0]) {
        return Err(Error::validation(
            "q_table",
            format!("must be strictly decreasing; Q({}) >= Q({})", i, i as i64 - 1),
        ));
    }
    if !(cutoff_mass > 0.0 && cutoff_mass <= 1e-6) {
        return Err(Error::validation("cutoff_mass", format!("must lie in (0, 1e-6], got {cutoff_mass}")));
    }
    let table_n = q.len() - 2;
    if table_n > max_support {
        return Err(Error::Truncation(format!(
            "Q table reaches N = {table_n}, above the support cap {max_support}"
        )));
    }
    let qv = |n: usize| q[n + 1]; // Q(n) for n >= 0
    let dq_at = |m: usize| q[m] - q[m + 1]; // Q(m-1) - Q(m)

    // residual(n) = sum over m > n of dQ(m) (1 + e^-m), with the closing
    // atom dQ(N_table + 1) = Q(N_table).
    let mut residual = vec![0.0; table_n + 1];
    let mut acc = CompensatedSum::new(qv(table_n) * (1.0 + (-((table_n + 1) as f64)).exp()));
    for n in (0..=table_n).rev() {
        residual[n] = acc.value();
        if n > 0 {
            acc.add(dq_at(n) * (1.0 + (-(n as f64)).exp()));
        }
    }
    let cut = residual.iter().position(|&r| r < cutoff_mass).unwrap_or(table_n);
    let half_width = cut + 1;

    let mut dq: Vec<f64> = (0..=cut).map(dq_at).collect();
    dq.push(qv(cut));

    let width = 2 * half_width + 1;
    let mut raw = vec![0.0; width];
    let mut ln_raw = vec![0.0; width];
    for (m, &d) in dq.iter().enumerate() {
        raw[half_width - m] = d;
        ln_raw[half_width - m] = d.ln();
        if m > 0 {
            ln_raw[half_width + m] = d.ln() - m as f64;
            raw[half_width + m] = ln_raw[half_width + m].exp();
        }
    }
    let mut total = CompensatedSum::default();
    raw.iter().for_each(|&v| total.add(v));
    let normalizer = total.value();
    let ln_c = normalizer.ln();

    let mass: Vec<f64> = raw.iter().map(|v| v / normalizer).collect();
    let ln_mass: Vec<f64> = ln_raw.iter().map(|v| v - ln_c).collect();

    let mut left = vec![0.0; width];
    let mut ln_left = vec![0.0; width];
    let mut lin = CompensatedSum::default();
    let mut lg = f64::NEG_INFINITY;
    for i in 0..width {
        lin.add(mass[i]);
        lg = ln_add_exp(lg, ln_mass[i]);
        left[i] = lin.value();
        ln_left[i] = lg;
    }
    let mut right = vec![0.0; width];
    let mut ln_right = vec![0.0; width];
    let mut lin = CompensatedSum::default();
    let mut lg = f64::NEG_INFINITY;
    for i in (0..width).rev() {
        lin.add(mass[i]);
        lg = ln_add_exp(lg, ln_mass[i]);
        right[i] = lin.value();
        ln_right[i] = lg;
    }

    Ok(RateTargetSignalModel {
        q_table: q.to_vec(),
        cutoff_mass,
        max_support,
        half_width,
        residual_mass: qv(cut),
        normalizer,
        dq,
        mass,
        ln_mass,
        left,
        right,
        ln_left,
        ln_right,
    })
}

impl RateTargetSignalModel {
    /// The normalizer C = sum of nu over the (closed) support.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Support is the integers in [-half_width, half_width].
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// nu-mass carried by the closing atom pair before normalization.
    pub fn residual_mass(&self) -> f64 {
        self.residual_mass
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q_table
    }

    /// Unnormalized nu(n); zero off the support.
    pub fn nu(&self, n: i64) -> f64 {
        let m = n.unsigned_abs() as usize;
        if m > self.half_width {
            return 0.0;
        }
        if n <= 0 {
            self.dq[m]
        } else {
            self.dq[m] * (-(n as f64)).exp()
        }
    }

    /// P(s = n | state).
    pub fn point_mass(&self, state: StateOfWorld, n: i64) -> f64 {
        let n = match state {
            StateOfWorld::Minus => n,
            StateOfWorld::Plus => -n,
        };
        match self.index(n) {
            Some(i) => self.mass[i],
            None => 0.0,
        }
    }

    fn index(&self, n: i64) -> Option<usize> {
        let h = self.half_width as i64;
        (n >= -h && n <= h).then(|| (n + h) as usize)
    }

    /// P(L <= n | minus).
    fn left_at(&self, n: i64) -> f64 {
        let h = self.half_width as i64;
        if n < -h {
            0.0
        } else if n >= h {
            1.0
        } else {
            self.left[(n + h) as usize]
        }
    }

    /// P(L >= n | minus).
    fn right_at(&self, n: i64) -> f64 {
        let h = self.half_width as i64;
        if n > h {
            0.0
        } else if n <= -h {
            1.0
        } else {
            self.right[(n + h) as usize]
        }
    }

    fn ln_left_at(&self, n: i64) -> f64 {
        let h = self.half_width as i64;
        if n < -h {
            return f64::NEG_INFINITY;
        }
        if n >= h {
            return 0.0;
        }
        let i = (n + h) as usize;
        let v = self.left[i];
        if v > 0.5 {
            (-self.right_at(n + 1)).ln_1p()
        } else if v > LINEAR_FLOOR {
            v.ln()
        } else {
            self.ln_left[i]
        }
    }

    fn ln_right_at(&self, n: i64) -> f64 {
        let h = self.half_width as i64;
        if n > h {
            return f64::NEG_INFINITY;
        }
        if n <= -h {
            return 0.0;
        }
        let i = (n + h) as usize;
        let v = self.right[i];
        if v > 0.5 {
            (-self.left_at(n - 1)).ln_1p()
        } else if v > LINEAR_FLOOR {
            v.ln()
        } else {
            self.ln_right[i]
        }
    }
}

// For plus: P(L <= y | plus) = P(L >= -y | minus) on the integer lattice.
impl SignalModel for RateTargetSignalModel {
    fn cdf(&self, state: StateOfWorld, x: f64) -> f64 {
        match state {
            StateOfWorld::Minus => self.left_at(x.floor() as i64),
            StateOfWorld::Plus => self.right_at((-x).ceil() as i64),
        }
    }

    fn ln_cdf(&self, state: StateOfWorld, x: f64) -> f64 {
        match state {
            StateOfWorld::Minus => self.ln_left_at(x.floor() as i64),
            StateOfWorld::Plus => self.ln_right_at((-x).ceil() as i64),
        }
    }

    fn ln_sf(&self, state: StateOfWorld, x: f64) -> f64 {
        match state {
            StateOfWorld::Minus => self.ln_right_at(x.floor() as i64 + 1),
            StateOfWorld::Plus => self.ln_left_at((-x).ceil() as i64 - 1),
        }
    }

    fn sf(&self, state: StateOfWorld, x: f64) -> f64 {
        match state {
            StateOfWorld::Minus => self.right_at(x.floor() as i64 + 1),
            StateOfWorld::Plus => self.left_at((-x).ceil() as i64 - 1),
        }
    }

    fn sample(&self, state: StateOfWorld, rng: &mut dyn RngCore) -> f64 {
        let u = open01(rng);
        let i = self.left.partition_point(|&c| c < u).min(self.left.len() - 1);
        let n = i as i64 - self.half_width as i64;
        match state {
            StateOfWorld::Minus => n as f64,
            StateOfWorld::Plus => -n as f64,
        }
    }

    /// Direct sum of e^n P(n | minus) over n <= x, built from nu rather than
    /// the cumulative tables.
    fn tilted_minus_cdf(&self, x: f64) -> Result<f64> {
        let h = self.half_width as i64;
        let top = (x.floor() as i64).min(h);
        let ln_c = self.normalizer.ln();
        let mut acc = CompensatedSum::default();
        for n in -h..=top {
            let nu = self.nu(n);
            if nu > 0.0 {
                acc.add((n as f64 + nu.ln() - ln_c).exp());
            } else if n > 0 {
                // nu underflowed; use the unscaled weight dQ(n)
                acc.add((self.dq[n as usize].ln() - ln_c).exp());
            }
        }
        Ok(acc.value())
    }

    fn is_discrete(&self) -> bool {
        true
    }

    fn spec(&self) -> ModelSpec {
        ModelSpec::Ratetarget {
            q_table: self.q_table.clone(),
            cutoff_mass: self.cutoff_mass,
            max_support: self.max_support,
        }
    }
}

impl RateTargetSignalModel {
    /// Log point masses under the minus state, for diagnostics.
    pub fn ln_point_mass_minus(&self, n: i64) -> f64 {
        match self.index(n) {
            Some(i) => self.ln_mass[i],
            None => f64::NEG_INFINITY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::check_llr_identity;
    use crate::rng::TrialRng;
    use StateOfWorld::{Minus, Plus};

    fn harmonic_table(n: usize) -> Vec<f64> {
        (-1..=n as i64).map(|x| 1.0 / (x as f64 + 2.0)).collect()
    }

    #[test]
    fn construction_arithmetic() {
        let m = build_rate_target(&harmonic_table(2000), 1e-12, DEFAULT_MAX_SUPPORT).unwrap();
        // nu(0) = Q(-1) - Q(0) = 1/2
        assert_eq!(m.nu(0), 0.5);
        assert!(m.normalizer() <= 2.0);
        let mut plus = CompensatedSum::default();
        let mut minus = CompensatedSum::default();
        let h = m.half_width() as i64;
        for n in -h..=h {
            plus.add(m.point_mass(Plus, n));
            minus.add(m.point_mass(Minus, n));
        }
        assert!((plus.value() - 1.0).abs() < 1e-12);
        assert!((minus.value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn llr_at_support_points_is_the_point() {
        let m = build_rate_target(&harmonic_table(500), 1e-12, DEFAULT_MAX_SUPPORT).unwrap();
        for n in -30..=30i64 {
            let llr = (m.point_mass(Plus, n) / m.point_mass(Minus, n)).ln();
            assert!((llr - n as f64).abs() < 1e-12, "n={n}: {llr}");
        }
    }

    #[test]
    fn cutoff_truncates_early_when_tail_is_light() {
        let q: Vec<f64> = (-1..=200).map(|x| (-(x as f64)).exp()).collect();
        let m = build_rate_target(&q, 1e-12, DEFAULT_MAX_SUPPORT).unwrap();
        // residual ~ Q(N) = e^-N < 1e-12 first at N = 28
        assert_eq!(m.half_width(), 29);
        assert!(m.residual_mass() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let err = build_rate_target(&[1.0, 1.0, 0.5], 1e-12, 10).unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "q_table"));
        let err = build_rate_target(&harmonic_table(20), 1e-12, 10).unwrap_err();
        assert!(matches!(err, Error::Truncation(_)));
        assert!(build_rate_target(&harmonic_table(5), 1e-3, 10).is_err());
    }

    #[test]
    fn identity_is_exact_on_integers() {
        let m = build_rate_target(&harmonic_table(3000), 1e-12, DEFAULT_MAX_SUPPORT).unwrap();
        let grid: Vec<f64> = (-40..=40).map(f64::from).collect();
        let r = check_llr_identity(&m, &grid).unwrap();
        assert!(r.max_error <= 1e-12, "{r:?}");
    }

    #[test]
    fn left_tail_follows_q() {
        let q = harmonic_table(3000);
        let m = build_rate_target(&q, 1e-12, DEFAULT_MAX_SUPPORT).unwrap();
        let c = m.normalizer();
        for &x in &[0.5, 1.0, 3.7, 100.0, 2999.0] {
            let expected = q[(x as f64).ceil() as usize - 1 + 1] / c;
            assert!((m.cdf(Minus, -x) - expected).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn samples_are_support_integers() {
        let m = build_rate_target(&harmonic_table(100), 1e-12, DEFAULT_MAX_SUPPORT).unwrap();
        let mut rng = TrialRng::new(5, 5);
        let h = m.half_width() as f64;
        for _ in 0..10_000 {
            let s = m.sample(Plus, &mut rng);
            assert_eq!(s.fract(), 0.0);
            assert!(s.abs() <= h);
        }
    }

    #[test]
    fn deep_tails_stay_finite_in_log_space() {
        let m = build_rate_target(&harmonic_table(5000), 1e-12, DEFAULT_MAX_SUPPORT).unwrap();
        let v = m.ln_cdf(Plus, -2000.0);
        assert!(v.is_finite() && v < -1990.0);
        let w = m.ln_sf(Minus, 2000.0);
        assert!(w.is_finite() && w < -1990.0);
    }
}
