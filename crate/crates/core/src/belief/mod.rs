//! Exact dynamics of the public log-likelihood ratio.
//!
//! Agent t plays +1 exactly when ell_t + L_t > 0. Everyone sees the action,
//! so the public ratio moves by D_+(ell_t) or D_-(ell_t), where
//!
//! ```text
//! D_+(x) = ln (1 - G_+(-x)) / (1 - G_-(-x))
//! D_-(x) = ln G_+(-x) / G_-(-x)
//! ```

mod path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::special::{ln_1m_exp, logistic};
use crate::signal::{SignalModel, StateOfWorld};

pub use path::{
    ell_star_at, ell_star_path, first_mistake_distribution, EllStarPath, FirstMistakeDistribution,
    FIRST_MISTAKE_CSV_HEADER,
};

/// An agent's binary action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Minus,
    Plus,
}

impl Action {
    pub fn sign(self) -> i8 {
        match self {
            Action::Minus => -1,
            Action::Plus => 1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Action::Minus => Action::Plus,
            Action::Plus => Action::Minus,
        }
    }

    /// The action that is correct in `state`.
    pub fn correct_for(state: StateOfWorld) -> Self {
        match state {
            StateOfWorld::Minus => Action::Minus,
            StateOfWorld::Plus => Action::Plus,
        }
    }

    pub fn matches(self, state: StateOfWorld) -> bool {
        self == Action::correct_for(state)
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.sign())
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match i64::deserialize(d)? {
            -1 => Ok(Action::Minus),
            1 => Ok(Action::Plus),
            v => Err(serde::de::Error::custom(format!("action must be -1 or +1, got {v}"))),
        }
    }
}

/// Action taken by an indifferent agent.
pub const TIE_ACTION: Action = Action::Minus;

/// Both tail probabilities below this switch D_+ and D_- to the first-order
/// form -ln(1 - z) = z, whose relative error is then below 1e-8.
pub const ASYMPTOTIC_SWITCH: f64 = 1e-8;

/// The decision rule: plus iff ell + llr > 0.
#[inline]
pub fn decide(ell: f64, llr: f64) -> Action {
    if ell + llr > 0.0 {
        Action::Plus
    } else {
        TIE_ACTION
    }
}

/// Past this |x| the smaller of the two tails in D_+ (or D_-) is dropped.
/// Because the LLR of L is L, G_+(-x) <= e^-x G_-(-x) for x >= 0 and
/// 1 - G_-(-x) <= e^x (1 - G_+(-x)) for x <= 0, so the relative change is
/// below e^-40 ~ 4e-18.
pub const DOMINATED_TAIL_CUTOFF: f64 = 40.0;

#[inline]
fn ln_switch() -> f64 {
    ASYMPTOTIC_SWITCH.ln()
}

/// ln D_+(x). Equals -inf when D_+ vanishes (past the edge of a finite
/// support, or when G_-(-x) underflows even in log space).
pub fn ln_d_plus<M: SignalModel + ?Sized>(model: &M, x: f64) -> f64 {
    let lb = model.ln_cdf(StateOfWorld::Minus, -x);
    if lb == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if lb < ln_switch() {
        if x > DOMINATED_TAIL_CUTOFF {
            return lb;
        }
        // D_+ ~ G_-(-x) - G_+(-x)
        let la = model.ln_cdf(StateOfWorld::Plus, -x);
        return lb + ln_1m_exp((la - lb).min(0.0));
    }
    d_plus_moderate(model, x).ln()
}

/// ln(-D_-(x)), the mirror of [`ln_d_plus`] for x toward -inf.
pub fn ln_neg_d_minus<M: SignalModel + ?Sized>(model: &M, x: f64) -> f64 {
    let la = model.ln_sf(StateOfWorld::Plus, -x);
    if la == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if la < ln_switch() {
        if x < -DOMINATED_TAIL_CUTOFF {
            return la;
        }
        // -D_- ~ (1 - G_+(-x)) - (1 - G_-(-x))
        let lb = model.ln_sf(StateOfWorld::Minus, -x);
        return la + ln_1m_exp((lb - la).min(0.0));
    }
    (-d_minus_moderate(model, x)).ln()
}

fn d_plus_moderate<M: SignalModel + ?Sized>(model: &M, x: f64) -> f64 {
    if x > DOMINATED_TAIL_CUTOFF {
        -model.ln_sf(StateOfWorld::Minus, -x)
    } else {
        model.ln_sf(StateOfWorld::Plus, -x) - model.ln_sf(StateOfWorld::Minus, -x)
    }
}

fn d_minus_moderate<M: SignalModel + ?Sized>(model: &M, x: f64) -> f64 {
    if x < -DOMINATED_TAIL_CUTOFF {
        model.ln_cdf(StateOfWorld::Plus, -x)
    } else {
        model.ln_cdf(StateOfWorld::Plus, -x) - model.ln_cdf(StateOfWorld::Minus, -x)
    }
}

/// Increment of ell after a +1 action at ell = x. Positive wherever the
/// model has mass on both sides of -x.
pub fn d_plus<M: SignalModel + ?Sized>(model: &M, x: f64) -> f64 {
    let lb = model.ln_cdf(StateOfWorld::Minus, -x);
    if lb < ln_switch() {
        ln_d_plus(model, x).exp()
    } else {
        d_plus_moderate(model, x)
    }
}

/// Increment of ell after a -1 action at ell = x; negative.
pub fn d_minus<M: SignalModel + ?Sized>(model: &M, x: f64) -> f64 {
    let la = model.ln_sf(StateOfWorld::Plus, -x);
    if la < ln_switch() {
        -ln_neg_d_minus(model, x).exp()
    } else {
        d_minus_moderate(model, x)
    }
}

/// Increment for the observed action.
#[inline]
pub fn increment<M: SignalModel + ?Sized>(model: &M, ell: f64, action: Action) -> f64 {
    match action {
        Action::Plus => d_plus(model, ell),
        Action::Minus => d_minus(model, ell),
    }
}

/// The public log-likelihood ratio before agent `t` acts.
///
/// ell is kept as a Neumaier pair so that millions of shrinking increments
/// do not lose precision against a growing total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefState {
    sum: f64,
    carry: f64,
    t: u64,
}

impl BeliefState {
    /// State before the first agent, with ell_1 = `prior_llr`.
    pub fn new(prior_llr: f64) -> Self {
        Self {
            sum: prior_llr,
            carry: 0.0,
            t: 1,
        }
    }

    #[inline]
    pub fn ell(&self) -> f64 {
        self.sum + self.carry
    }

    /// Index of the next agent to act.
    #[inline]
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn public_belief(&self) -> f64 {
        public_belief(self.ell())
    }

    /// Adds `delta` to ell and advances t.
    #[inline]
    pub fn advance(&mut self, delta: f64) {
        let s = self.sum + delta;
        if self.sum.abs() >= delta.abs() {
            self.carry += (self.sum - s) + delta;
        } else {
            self.carry += (delta - s) + self.sum;
        }
        self.sum = s;
        self.t += 1;
    }

    /// Records `action` and advances in place.
    #[inline]
    pub fn observe<M: SignalModel + ?Sized>(&mut self, model: &M, action: Action) {
        let delta = increment(model, self.ell(), action);
        self.advance(delta);
    }
}

/// The state after agent `state.t()` plays `action`.
pub fn update<M: SignalModel + ?Sized>(model: &M, state: &BeliefState, action: Action) -> BeliefState {
    let mut next = *state;
    next.observe(model, action);
    next
}

/// mu = e^ell / (e^ell + 1).
pub fn public_belief(ell: f64) -> f64 {
    logistic(ell)
}

/// ell_1 for a prior probability p0 of the plus state.
pub fn prior_llr(p0: f64) -> Result<f64> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::validation("prior", format!("must lie in (0, 1), got {p0}")));
    }
    Ok((p0 / (1.0 - p0)).ln())
}

/// P(a = +1 | ell, state) = 1 - G_state(-ell).
pub fn action_probability<M: SignalModel + ?Sized>(model: &M, ell: f64, state: StateOfWorld) -> f64 {
    model.sf(state, -ell)
}

/// P(a != current label | ell, state): the chance the next agent breaks a run
/// of `current`.
#[inline]
pub fn switch_probability<M: SignalModel + ?Sized>(model: &M, ell: f64, state: StateOfWorld, current: Action) -> f64 {
    match current {
        Action::Plus => model.cdf(state, -ell),
        Action::Minus => model.sf(state, -ell),
    }
}

/// One-step martingale defect of the public belief at ell; zero in exact
/// arithmetic.
pub fn martingale_residual<M: SignalModel + ?Sized>(model: &M, ell: f64) -> f64 {
    let mu = public_belief(ell);
    let p_plus = mu * action_probability(model, ell, StateOfWorld::Plus)
        + (1.0 - mu) * action_probability(model, ell, StateOfWorld::Minus);
    let p_minus = mu * model.cdf(StateOfWorld::Plus, -ell) + (1.0 - mu) * model.cdf(StateOfWorld::Minus, -ell);
    let up = public_belief(ell + d_plus(model, ell));
    let down = public_belief(ell + d_minus(model, ell));
    p_plus * up + p_minus * down - mu
}

/// min(mu, 1 - mu) = 1 / (e^|ell| + 1): the chance that the agent facing
/// public ratio ell would be wrong if only the public information counted.
#[inline]
pub fn rb_mistake_weight(ell: f64) -> f64 {
    1.0 / (ell.abs().exp() + 1.0)
}

const SCAN_STEP: f64 = 0.01;

fn scan_grid(search_limit: f64) -> Result<Vec<f64>> {
    if !(search_limit.is_finite() && search_limit > 0.0) {
        return Err(Error::validation("search_limit", format!("must be positive, got {search_limit}")));
    }
    let n = (search_limit / SCAN_STEP).round() as usize;
    Ok((0..=n).map(|i| i as f64 * SCAN_STEP).collect())
}

/// Smallest grid point (step 0.01 on [0, search_limit]) from which the
/// finite-difference slopes of u_+(x) = x + D_+(x) stay positive up to
/// `search_limit`.
pub fn u_plus_monotone_threshold<M: SignalModel + ?Sized>(model: &M, search_limit: f64) -> Result<f64> {
    let grid = scan_grid(search_limit)?;
    let u: Vec<f64> = grid.iter().map(|&x| x + d_plus(model, x)).collect();
    let mut first = None;
    for i in (0..grid.len() - 1).rev() {
        if u[i + 1] > u[i] {
            first = Some(grid[i]);
        } else {
            break;
        }
    }
    first.ok_or_else(|| {
        Error::NotFound(format!(
            "u_+ is not increasing near the search limit {search_limit}"
        ))
    })
}

/// Smallest grid point (step 0.01 on [0, search_limit]) from which
/// |x + D_-(x)| <= x holds at every grid point up to `search_limit`: past it
/// an upset against a large public ratio cannot increase |ell|.
pub fn minus_contraction_threshold<M: SignalModel + ?Sized>(model: &M, search_limit: f64) -> Result<f64> {
    let grid = scan_grid(search_limit)?;
    let mut first = None;
    for &x in grid.iter().rev() {
        if (x + d_minus(model, x)).abs() <= x {
            first = Some(x);
        } else {
            break;
        }
    }
    first.ok_or_else(|| {
        Error::NotFound(format!(
            "|x + D_-(x)| <= x fails at the search limit {search_limit}"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{build_rate_target, GaussianSignalModel, PolyTailSignalModel};
    use StateOfWorld::{Minus, Plus};

    fn gauss2() -> GaussianSignalModel {
        GaussianSignalModel::new(2.0).unwrap()
    }

    #[test]
    fn decision_rule_and_tie() {
        assert_eq!(decide(1.0, -0.5), Action::Plus);
        assert_eq!(decide(1.0, -1.0), Action::Minus);
        assert_eq!(decide(-3.0, 2.0), Action::Minus);
    }

    #[test]
    fn gaussian_increment_at_zero() {
        let m = gauss2();
        // ln(Phi(0.5) / Phi(-0.5))
        let expected = (0.691_462_461_274_013_1_f64 / 0.308_537_538_725_986_9).ln();
        assert!((d_plus(&m, 0.0) - expected).abs() < 1e-12);
        assert!((d_plus(&m, 0.0) - 0.806965).abs() < 1e-6);
        assert!((d_minus(&m, 0.0) + expected).abs() < 1e-12);
        for &x in &[0.0, 1.0, 5.0] {
            assert!((d_plus(&m, x) + d_minus(&m, -x)).abs() < 1e-9);
        }
    }

    #[test]
    fn increments_track_the_tails() {
        let m = gauss2();
        let r = (ln_d_plus(&m, 20.0) - m.ln_cdf(Minus, -20.0)).exp();
        assert!((0.99..=1.01).contains(&r));
        let r = (ln_neg_d_minus(&m, -20.0) - m.ln_sf(Plus, 20.0)).exp();
        assert!((0.99..=1.01).contains(&r));
    }

    #[test]
    fn branch_switch_is_continuous() {
        // Find where G_-(-x) crosses the switch and compare both formulas.
        let m = GaussianSignalModel::new(1.0).unwrap();
        let mut x = 5.0;
        while m.cdf(Minus, -x) > ASYMPTOTIC_SWITCH {
            x += 0.001;
        }
        let exact = d_plus_moderate(&m, x);
        let asym = ln_d_plus(&m, x).exp();
        assert!(((exact - asym) / exact).abs() < 2e-8, "{exact} {asym}");
    }

    #[test]
    fn dropping_the_dominated_tail_is_invisible() {
        let p = PolyTailSignalModel::new(2.0).unwrap();
        for &x in &[40.5, 45.0, 60.0] {
            let full = p.ln_sf(Plus, -x) - p.ln_sf(Minus, -x);
            assert!(((d_plus(&p, x) - full) / full).abs() < 1e-15);
            let full = p.ln_cdf(Plus, x) - p.ln_cdf(Minus, x);
            assert!(((d_minus(&p, -x) - full) / full).abs() < 1e-15);
        }
    }

    #[test]
    fn update_and_belief() {
        let m = gauss2();
        let s = update(&m, &BeliefState::new(0.0), Action::Plus);
        assert!((s.ell() - 0.806965).abs() < 1e-6);
        assert_eq!(s.t(), 2);
        let s2 = update(&m, &s, Action::Minus);
        assert!(s2.ell().abs() < d_plus(&m, 0.0));
        assert_eq!(public_belief(0.0), 0.5);
        assert!((public_belief(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!((public_belief(-(3f64.ln())) - 0.25).abs() < 1e-15);
        assert!(public_belief(1e4) <= 1.0 && public_belief(-1e4) >= 0.0);
        assert_eq!(rb_mistake_weight(0.0), 0.5);
        assert!((rb_mistake_weight(3f64.ln()) - 0.25).abs() < 1e-15);
        assert!((rb_mistake_weight(-(3f64.ln())) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rate_target_update_matches_mass_ratio() {
        let q: Vec<f64> = (-1..=200).map(|x| 1.0 / (x as f64 + 2.0)).collect();
        let m = build_rate_target(&q, 1e-12, 1000).unwrap();
        // plus at ell = 0 means L > 0, i.e. L >= 1
        let h = m.half_width() as i64;
        let p: f64 = (1..=h).map(|n| m.point_mass(Plus, n)).sum();
        let mm: f64 = (1..=h).map(|n| m.point_mass(Minus, n)).sum();
        assert!((d_plus(&m, 0.0) - (p / mm).ln()).abs() < 1e-12);
        // Off the lattice the mirror identity is exact. At an atom x = n the
        // tie rule sends L = -n to minus and breaks it.
        for n in -20..=20 {
            let x = n as f64 + 0.5;
            assert!((d_plus(&m, x) + d_minus(&m, -x)).abs() < 1e-9);
        }
        assert!((d_plus(&m, 3.0) + d_minus(&m, -3.0)).abs() > 1e-3);
    }

    #[test]
    fn action_probabilities() {
        let m = gauss2();
        assert!((action_probability(&m, 0.0, Plus) - 0.691462).abs() < 1e-6);
        assert!((action_probability(&m, 0.0, Minus) - 0.308538).abs() < 1e-6);
        assert!(action_probability(&m, 60.0, Minus) > 1.0 - 1e-15);
    }

    #[test]
    fn martingale_identity() {
        let m = gauss2();
        assert!(martingale_residual(&m, 0.0).abs() <= 1e-12);
        assert!(martingale_residual(&m, 2.0).abs() <= 1e-12);
        let q: Vec<f64> = (-1..=200).map(|x| 1.0 / (x as f64 + 2.0)).collect();
        let r = build_rate_target(&q, 1e-12, 1000).unwrap();
        assert!(martingale_residual(&r, 0.3).abs() <= 1e-12);
    }

    #[test]
    fn prior_conversion() {
        assert_eq!(prior_llr(0.5).unwrap(), 0.0);
        assert!((prior_llr(0.75).unwrap() - 3f64.ln()).abs() < 1e-15);
        let err = prior_llr(1.5).unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "prior"));
    }

    #[test]
    fn monotone_and_contraction_scans() {
        let g = GaussianSignalModel::new(1.0).unwrap();
        let x = u_plus_monotone_threshold(&g, 30.0).unwrap();
        assert!(x < 10.0);
        let p = PolyTailSignalModel::new(2.0).unwrap();
        let xp = u_plus_monotone_threshold(&p, 40.0).unwrap();
        assert!(xp < 20.0);
        for dx in [1.0, 2.0] {
            let a = xp + dx;
            assert!(a + SCAN_STEP + d_plus(&p, a + SCAN_STEP) >= a + d_plus(&p, a));
        }
        let xc = minus_contraction_threshold(&p, 100.0).unwrap();
        assert!(xc < 100.0);
    }

    #[test]
    fn compensated_state_tracks_many_small_steps() {
        let mut s = BeliefState::new(1.0);
        for _ in 0..10_000_000 {
            s.advance(1e-7);
        }
        assert!((s.ell() - 2.0).abs() < 1e-12);
    }
}
