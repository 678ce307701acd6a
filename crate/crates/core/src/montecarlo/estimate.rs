use crate::belief::FirstMistakeDistribution;
use crate::error::{Error, Result};
use crate::numeric::{linear_fit, LinearFit};

use super::aggregate::AggregateStats;

/// Two-sided 95% normal quantile used for Wilson intervals.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Minimum trials for the upset-tail fit.
pub const UPSET_TAIL_MIN_TRIALS: u64 = 10_000;

/// Survival bins with fewer trials than this are left out of the fit.
pub const UPSET_FIT_MIN_COUNT: u64 = 50;

/// Wilson score interval for k successes in n trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// One row of the mistake-probability curve. `t` follows the convention
/// that ell_{t+1} carries the mistake probability of agent t, so the row
/// built from ell_1 (the prior) is t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MistakeRow {
    pub t: u64,
    /// Mean of 1 / (e^|ell_{t+1}| + 1).
    pub p_rb: f64,
    pub stderr_rb: f64,
    /// Fraction of trials with a_t != theta; none for t = 0.
    pub p_naive: Option<f64>,
    pub stderr_naive: Option<f64>,
}

pub const MISTAKES_CSV_HEADER: &str = "t,p_rb,p_naive,stderr";

/// Rao-Blackwellized and indicator estimates of P(a_t != theta) at the
/// aggregate's checkpoints.
pub fn estimate_mistake_curve(agg: &AggregateStats) -> Result<Vec<MistakeRow>> {
    if agg.trials == 0 {
        return Err(Error::validation("trials", "aggregate is empty"));
    }
    if agg.checkpoints.is_empty() {
        return Err(Error::validation("checkpoints", "aggregate has no checkpoint sums"));
    }
    let n = agg.trials as f64;
    Ok(agg
        .checkpoints
        .iter()
        .map(|c| {
            let mean = c.rb.value() / n;
            let var = (c.rb_sq.value() / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
            let (p_naive, stderr_naive) = if c.t >= 2 {
                let p = c.naive_mistakes as f64 / n;
                (Some(p), Some((p * (1.0 - p) / n).sqrt()))
            } else {
                (None, None)
            };
            MistakeRow {
                t: c.t - 1,
                p_rb: mean,
                stderr_rb: (var / n).sqrt(),
                p_naive,
                stderr_naive,
            }
        })
        .collect())
}

/// Time-to-learn summary at one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtlRow {
    pub horizon: u64,
    /// Mean of t_last_mistake + 1 over trials whose final action is right.
    pub mean_uncensored: Option<f64>,
    /// Mean over all trials with censored ones counted at the horizon; a
    /// lower bound on E(T_L) up to sampling error.
    pub lower_bound: f64,
    pub censored_frac: f64,
    /// More than 1% of trials are censored.
    pub unreliable: bool,
}

pub const TTL_CSV_HEADER: &str = "horizon,mean_uncensored,lower_bound,censored_frac";

pub fn estimate_time_to_learn(agg: &AggregateStats) -> Result<Vec<TtlRow>> {
    if agg.trials == 0 {
        return Err(Error::validation("trials", "aggregate is empty"));
    }
    if agg.ttl.is_empty() {
        return Err(Error::validation("ttl_horizons", "aggregate has no time-to-learn horizons"));
    }
    let n = agg.trials as f64;
    Ok(agg
        .ttl
        .iter()
        .map(|s| {
            let censored_frac = s.censored as f64 / n;
            let total = s.ttl_sum as f64 + s.censored as f64 * s.horizon as f64;
            TtlRow {
                horizon: s.horizon,
                mean_uncensored: (s.uncensored > 0).then(|| s.ttl_sum as f64 / s.uncensored as f64),
                lower_bound: total / n,
                censored_frac,
                unreliable: censored_frac > 0.01,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpsetRow {
    pub n: u64,
    /// Trials with at least n upsets.
    pub count: u64,
    pub survival: f64,
    pub lo: f64,
    pub hi: f64,
}

pub const UPSETS_CSV_HEADER: &str = "n,survival,lo,hi";

/// Empirical P(Xi >= n) for n = 0..=max observed, with Wilson bands.
pub fn upset_survival(agg: &AggregateStats) -> Vec<UpsetRow> {
    let total = agg.trials;
    let max = agg.upsets.keys().next_back().copied().unwrap_or(0);
    let mut rows = Vec::with_capacity(max as usize + 1);
    let mut at_least = total;
    for n in 0..=max {
        if n > 0 {
            at_least -= agg.upsets.get(&(n - 1)).copied().unwrap_or(0);
        }
        let (lo, hi) = wilson_interval(at_least, total, WILSON_Z);
        rows.push(UpsetRow {
            n,
            count: at_least,
            survival: at_least as f64 / total.max(1) as f64,
            lo,
            hi,
        });
    }
    rows
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpsetTail {
    pub rows: Vec<UpsetRow>,
    /// Fit of ln P(Xi >= n) against n over bins with enough counts.
    pub fit: LinearFit,
}

/// Survival of the upset count plus a geometric-tail fit.
pub fn estimate_upset_tail(agg: &AggregateStats) -> Result<UpsetTail> {
    if agg.trials < UPSET_TAIL_MIN_TRIALS {
        return Err(Error::validation(
            "trials",
            format!("upset tail needs at least {UPSET_TAIL_MIN_TRIALS} trials, got {}", agg.trials),
        ));
    }
    let rows = upset_survival(agg);
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.count >= UPSET_FIT_MIN_COUNT)
        .map(|r| (r.n as f64, r.survival.ln()))
        .unzip();
    let fit = linear_fit(&xs, &ys).map_err(|_| {
        Error::Numerical(format!(
            "fewer than two upset bins reach {UPSET_FIT_MIN_COUNT} trials"
        ))
    })?;
    Ok(UpsetTail { rows, fit })
}

/// Empirical against exact first-mistake probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstMistakeRow {
    /// 0 stands for "no mistake up to the horizon".
    pub t: u64,
    pub count: u64,
    pub empirical: f64,
    pub exact: f64,
}

pub const T1_CSV_HEADER: &str = "t,empirical,exact";

pub fn compare_first_mistake(agg: &AggregateStats, exact: &FirstMistakeDistribution) -> Result<Vec<FirstMistakeRow>> {
    if exact.horizon() < agg.horizon {
        return Err(Error::validation("horizon", "exact distribution is shorter than the simulation"));
    }
    let n = agg.trials.max(1) as f64;
    let mut rows = Vec::with_capacity(agg.horizon as usize + 1);
    let survivor = exact.ln_survivor[(agg.horizon - 1) as usize].exp();
    for t in 0..=agg.horizon {
        let count = agg.first_mistake.get(&t).copied().unwrap_or(0);
        rows.push(FirstMistakeRow {
            t,
            count,
            empirical: count as f64 / n,
            exact: if t == 0 { survivor } else { exact.prob(t) },
        });
    }
    Ok(rows)
}

/// (length, count, good) rows of the run-length histograms.
pub fn run_length_rows(agg: &AggregateStats) -> Vec<(u64, u64, bool)> {
    let mut rows: Vec<(u64, u64, bool)> = agg.good_run_lengths.iter().map(|(&l, &c)| (l, c, true)).collect();
    rows.extend(agg.bad_run_lengths.iter().map(|(&l, &c)| (l, c, false)));
    rows
}

pub const RUNS_CSV_HEADER: &str = "length,count,kind";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(50, 100, WILSON_Z);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        let (lo, hi) = wilson_interval(0, 100, WILSON_Z);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        assert_eq!(wilson_interval(100, 100, WILSON_Z).1, 1.0);
    }

    #[test]
    fn survival_from_histogram() {
        let mut agg = AggregateStats::empty(10, &[], &[]);
        agg.trials = 10;
        agg.upsets.insert(0, 5);
        agg.upsets.insert(1, 3);
        agg.upsets.insert(3, 2);
        let rows = upset_survival(&agg);
        let s: Vec<f64> = rows.iter().map(|r| r.survival).collect();
        assert_eq!(s, vec![1.0, 0.5, 0.2, 0.2]);
        assert!(estimate_upset_tail(&agg).is_err());
    }

    #[test]
    fn ttl_with_no_mistakes_is_one() {
        let mut agg = AggregateStats::empty(10, &[], &[10]);
        agg.trials = 4;
        agg.ttl[0].uncensored = 4;
        agg.ttl[0].ttl_sum = 4;
        let r = estimate_time_to_learn(&agg).unwrap();
        assert_eq!(r[0].mean_uncensored, Some(1.0));
        assert_eq!(r[0].lower_bound, 1.0);
        assert!(!r[0].unreliable);
    }
}
