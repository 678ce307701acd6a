use std::collections::BTreeMap;

use rayon::prelude::*;

use super::simulate::{simulate_baseline_llr, simulate_with_rng, Sampler, TrajectoryOptions};
use super::trajectory::{Trajectory, TrajectoryStats};
use crate::belief::{rb_mistake_weight, EllStarPath};
use crate::error::{Error, Result};
use crate::numeric::ExactSum;
use crate::rng::{open01, TrialRng};
use crate::signal::{SignalModel, StateOfWorld};

/// Which state of the world each trial runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    State(StateOfWorld),
    /// Each trial draws theta from the prior with the first uniform of its
    /// stream.
    Prior,
}

/// Everything needed to run a batch of independent trials.
#[derive(Clone)]
pub struct SimulationPlan<'a> {
    pub model: &'a dyn SignalModel,
    pub conditioning: Conditioning,
    /// Prior probability of the plus state.
    pub prior: f64,
    pub horizon: u64,
    pub master_seed: u64,
    /// Trials use stream ids first_trial .. first_trial + trials.
    pub first_trial: u64,
    pub trials: u64,
    /// Times t in [1, horizon + 1] at which ell_t is aggregated.
    pub checkpoints: Vec<u64>,
    pub sampler: Sampler,
    /// Horizons (<= horizon) at which time-to-learn is evaluated on the
    /// same trajectories.
    pub ttl_horizons: Vec<u64>,
    /// Upsets from |ell| at or above this are checked for |ell'| <= |ell|.
    pub contraction_threshold: Option<f64>,
    /// ell* path covering horizon + 1, for the run-shift and |ell|/ell*
    /// diagnostics.
    pub ell_star: Option<&'a EllStarPath>,
}

impl<'a> SimulationPlan<'a> {
    pub fn new(model: &'a dyn SignalModel, horizon: u64, trials: u64, master_seed: u64) -> Self {
        Self {
            model,
            conditioning: Conditioning::State(StateOfWorld::Plus),
            prior: 0.5,
            horizon,
            master_seed,
            first_trial: 0,
            trials,
            checkpoints: Vec::new(),
            sampler: Sampler::Thinned,
            ttl_horizons: Vec::new(),
            contraction_threshold: None,
            ell_star: None,
        }
    }

    fn prior_llr(&self) -> f64 {
        (self.prior / (1.0 - self.prior)).ln()
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::validation("horizon", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::validation("trials", "must be at least 1"));
        }
        if !(self.prior > 0.0 && self.prior < 1.0) {
            return Err(Error::validation("prior", format!("must lie in (0, 1), got {}", self.prior)));
        }
        if self.ttl_horizons.iter().any(|&h| h == 0 || h > self.horizon) {
            return Err(Error::validation("ttl_horizons", "must lie in [1, horizon]"));
        }
        if let Some(p) = self.ell_star {
            if p.horizon() < self.horizon + 1 {
                return Err(Error::validation("ell_star", "path must cover horizon + 1"));
            }
        }
        Ok(())
    }

    /// Runs trial `i` (an absolute stream id).
    pub fn simulate(&self, i: u64, record_path: bool) -> Result<(Trajectory, TrajectoryStats)> {
        let mut rng = TrialRng::new(self.master_seed, i);
        let theta = match self.conditioning {
            Conditioning::State(s) => s,
            Conditioning::Prior => {
                if open01(&mut rng) < self.prior {
                    StateOfWorld::Plus
                } else {
                    StateOfWorld::Minus
                }
            }
        };
        let opts = TrajectoryOptions {
            checkpoints: self.checkpoints.clone(),
            prior_llr: self.prior_llr(),
            sampler: self.sampler,
            record_path,
        };
        simulate_with_rng(self.model, theta, self.horizon, self.master_seed, i, &opts, &mut rng)
    }
}

/// Cross-trial sums at one checkpoint time t.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckpointSums {
    pub t: u64,
    /// Sum of 1 / (e^|ell_t| + 1).
    pub rb: ExactSum,
    pub rb_sq: ExactSum,
    pub ell: ExactSum,
    pub ell_sq: ExactSum,
    /// Trials with a_{t-1} != theta (t >= 2).
    pub naive_mistakes: u64,
    /// Trials with no mistake at any time in [t, horizon].
    pub no_future_mistake: u64,
}

/// Time-to-learn sums at one horizon.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TtlSums {
    pub horizon: u64,
    pub censored: u64,
    pub uncensored: u64,
    /// Sum of T_L = t_last_mistake + 1 over uncensored trials.
    pub ttl_sum: u128,
    pub ttl_sq_sum: u128,
}

/// Diagnostics that are reported, not asserted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub contraction_checked: u64,
    pub contraction_violations: u64,
    /// Good blocks examined for the shift z in ell_{t+s} >= ell*_{s-z}.
    pub shift_runs: u64,
    /// Smallest z that works for every examined good block.
    pub shift_max: u64,
    /// max over checkpoints t >= 2 of (max_{s<=t} |ell_s|) / ell*_t.
    pub ratio_to_ell_star_max: Option<f64>,
}

/// Mergeable summary of many trials. Integer counts, exact float sums and
/// maxima only, so merging in any order gives identical bits.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateStats {
    pub horizon: u64,
    pub trials: u64,
    pub plus_trials: u64,
    pub first_mistake: BTreeMap<u64, u64>,
    pub upsets: BTreeMap<u64, u64>,
    pub good_run_count: BTreeMap<u64, u64>,
    /// Lengths of maximal blocks that end inside the window.
    pub good_run_lengths: BTreeMap<u64, u64>,
    pub bad_run_lengths: BTreeMap<u64, u64>,
    pub max_good_run: BTreeMap<u64, u64>,
    pub max_bad_run: BTreeMap<u64, u64>,
    pub checkpoints: Vec<CheckpointSums>,
    pub ttl: Vec<TtlSums>,
    pub diagnostics: Diagnostics,
}

fn bump(map: &mut BTreeMap<u64, u64>, key: u64) {
    *map.entry(key).or_insert(0) += 1;
}

fn merge_map(into: &mut BTreeMap<u64, u64>, from: &BTreeMap<u64, u64>) {
    for (&k, &v) in from {
        *into.entry(k).or_insert(0) += v;
    }
}

impl AggregateStats {
    /// An aggregate of zero trials with the plan's grids.
    pub fn empty(horizon: u64, checkpoints: &[u64], ttl_horizons: &[u64]) -> Self {
        Self {
            horizon,
            trials: 0,
            plus_trials: 0,
            first_mistake: BTreeMap::new(),
            upsets: BTreeMap::new(),
            good_run_count: BTreeMap::new(),
            good_run_lengths: BTreeMap::new(),
            bad_run_lengths: BTreeMap::new(),
            max_good_run: BTreeMap::new(),
            max_bad_run: BTreeMap::new(),
            checkpoints: checkpoints
                .iter()
                .map(|&t| CheckpointSums {
                    t,
                    ..Default::default()
                })
                .collect(),
            ttl: ttl_horizons
                .iter()
                .map(|&h| TtlSums {
                    horizon: h,
                    ..Default::default()
                })
                .collect(),
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn for_plan(plan: &SimulationPlan) -> Self {
        Self::empty(plan.horizon, &plan.checkpoints, &plan.ttl_horizons)
    }

    /// Folds one trajectory in.
    pub fn add_trial(&mut self, traj: &Trajectory, stats: &TrajectoryStats, plan: &SimulationPlan) {
        let theta = traj.theta;
        self.trials += 1;
        if theta == StateOfWorld::Plus {
            self.plus_trials += 1;
        }
        bump(&mut self.first_mistake, stats.t_first_mistake);
        bump(&mut self.upsets, stats.upsets);
        bump(&mut self.good_run_count, stats.good_run_count);
        bump(&mut self.max_good_run, stats.max_good_run);
        bump(&mut self.max_bad_run, stats.max_bad_run);
        for b in &traj.blocks[..traj.blocks.len() - 1] {
            if b.action.matches(theta) {
                bump(&mut self.good_run_lengths, b.len);
            } else {
                bump(&mut self.bad_run_lengths, b.len);
            }
        }

        for (sums, cp) in self.checkpoints.iter_mut().zip(&traj.checkpoints) {
            debug_assert_eq!(sums.t, cp.t);
            let w = rb_mistake_weight(cp.ell);
            sums.rb.add(w);
            sums.rb_sq.add(w * w);
            sums.ell.add(cp.ell);
            sums.ell_sq.add(cp.ell * cp.ell);
            if cp.t >= 2 && !traj.action_at(cp.t - 1).matches(theta) {
                sums.naive_mistakes += 1;
            }
            if stats.t_last_mistake < cp.t {
                sums.no_future_mistake += 1;
            }
        }

        for sums in &mut self.ttl {
            let s = traj.stats_at(sums.horizon);
            if s.censored {
                sums.censored += 1;
            } else {
                let ttl = s.t_last_mistake as u128 + 1;
                sums.uncensored += 1;
                sums.ttl_sum += ttl;
                sums.ttl_sq_sum += ttl * ttl;
            }
        }

        let d = &mut self.diagnostics;
        if let Some(threshold) = plan.contraction_threshold {
            for sw in &traj.switches {
                if sw.ell_before.abs() >= threshold {
                    d.contraction_checked += 1;
                    if sw.ell_after.abs() > sw.ell_before.abs() {
                        d.contraction_violations += 1;
                    }
                }
            }
        }
        if let Some(path) = plan.ell_star {
            let sign = f64::from(theta.sign());
            for (i, b) in traj.blocks.iter().enumerate() {
                if !b.action.matches(theta) {
                    continue;
                }
                // switches[i] opens block i + 1, so it carries ell right
                // after block i
                let end_ell = if i + 1 < traj.blocks.len() {
                    traj.switches[i].ell_before
                } else {
                    traj.final_ell
                };
                let reached = path.values.partition_point(|&v| v <= sign * end_ell) as u64;
                d.shift_runs += 1;
                d.shift_max = d.shift_max.max(b.len.saturating_sub(reached));
            }
            for cp in &traj.checkpoints {
                if cp.t >= 2 {
                    let star = path.at(cp.t);
                    if star > 0.0 {
                        let r = cp.max_abs_ell / star;
                        d.ratio_to_ell_star_max = Some(d.ratio_to_ell_star_max.map_or(r, |m: f64| m.max(r)));
                    }
                }
            }
        }
    }

    /// Adds `other` into `self`. Both must share horizon and grids.
    pub fn merge(&mut self, other: &AggregateStats) -> Result<()> {
        let same_cps = self.checkpoints.len() == other.checkpoints.len()
            && self.checkpoints.iter().zip(&other.checkpoints).all(|(a, b)| a.t == b.t);
        let same_ttl = self.ttl.len() == other.ttl.len()
            && self.ttl.iter().zip(&other.ttl).all(|(a, b)| a.horizon == b.horizon);
        if self.horizon != other.horizon || !same_cps || !same_ttl {
            return Err(Error::validation("aggregate", "cannot merge aggregates with different grids"));
        }
        self.trials += other.trials;
        self.plus_trials += other.plus_trials;
        merge_map(&mut self.first_mistake, &other.first_mistake);
        merge_map(&mut self.upsets, &other.upsets);
        merge_map(&mut self.good_run_count, &other.good_run_count);
        merge_map(&mut self.good_run_lengths, &other.good_run_lengths);
        merge_map(&mut self.bad_run_lengths, &other.bad_run_lengths);
        merge_map(&mut self.max_good_run, &other.max_good_run);
        merge_map(&mut self.max_bad_run, &other.max_bad_run);
        for (a, b) in self.checkpoints.iter_mut().zip(&other.checkpoints) {
            a.rb.merge(&b.rb);
            a.rb_sq.merge(&b.rb_sq);
            a.ell.merge(&b.ell);
            a.ell_sq.merge(&b.ell_sq);
            a.naive_mistakes += b.naive_mistakes;
            a.no_future_mistake += b.no_future_mistake;
        }
        for (a, b) in self.ttl.iter_mut().zip(&other.ttl) {
            a.censored += b.censored;
            a.uncensored += b.uncensored;
            a.ttl_sum += b.ttl_sum;
            a.ttl_sq_sum += b.ttl_sq_sum;
        }
        let (d, e) = (&mut self.diagnostics, &other.diagnostics);
        d.contraction_checked += e.contraction_checked;
        d.contraction_violations += e.contraction_violations;
        d.shift_runs += e.shift_runs;
        d.shift_max = d.shift_max.max(e.shift_max);
        d.ratio_to_ell_star_max = match (d.ratio_to_ell_star_max, e.ratio_to_ell_star_max) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        Ok(())
    }
}

/// Merges two aggregates into a new one.
pub fn merge_aggregates(a: &AggregateStats, b: &AggregateStats) -> Result<AggregateStats> {
    let mut out = a.clone();
    out.merge(b)?;
    Ok(out)
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Err(Error::validation("threads", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs every trial of the plan on `threads` workers and merges the results.
/// The outcome is identical for every thread count.
pub fn run_trials(plan: &SimulationPlan, threads: usize) -> Result<AggregateStats> {
    plan.validate()?;
    let range = plan.first_trial..plan.first_trial + plan.trials;
    with_pool(threads, || {
        range
            .into_par_iter()
            .try_fold(
                || AggregateStats::for_plan(plan),
                |mut acc, i| -> Result<AggregateStats> {
                    let (traj, stats) = plan.simulate(i, false)?;
                    acc.add_trial(&traj, &stats, plan);
                    Ok(acc)
                },
            )
            .try_reduce(
                || AggregateStats::for_plan(plan),
                |mut a, b| {
                    a.merge(&b)?;
                    Ok(a)
                },
            )
    })?
}

/// Cross-trial sums for the observed-signal baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineStats {
    pub trials: u64,
    pub checkpoints: Vec<u64>,
    /// Sum over trials of ell~_t (without the prior).
    pub llr: Vec<ExactSum>,
    pub llr_sq: Vec<ExactSum>,
    /// Sum over trials of 1 / (e^|prior + ell~_t| + 1).
    pub rb: Vec<ExactSum>,
}

impl BaselineStats {
    fn empty(checkpoints: &[u64]) -> Self {
        let n = checkpoints.len();
        Self {
            trials: 0,
            checkpoints: checkpoints.to_vec(),
            llr: vec![ExactSum::new(); n],
            llr_sq: vec![ExactSum::new(); n],
            rb: vec![ExactSum::new(); n],
        }
    }

    fn merge(&mut self, other: &BaselineStats) {
        self.trials += other.trials;
        for i in 0..self.llr.len() {
            self.llr[i].merge(&other.llr[i]);
            self.llr_sq[i].merge(&other.llr_sq[i]);
            self.rb[i].merge(&other.rb[i]);
        }
    }

    /// Mean of ell~_t / t at each checkpoint with its standard error.
    pub fn mean_rate(&self) -> Vec<(u64, f64, f64)> {
        let n = self.trials as f64;
        self.checkpoints
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let mean = self.llr[i].value() / n;
                let var = (self.llr_sq[i].value() / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
                (t, mean / t as f64, (var / n).sqrt() / t as f64)
            })
            .collect()
    }
}

/// Runs the observed-signal baseline for the plan's trials. Checkpoints above
/// the horizon are ignored.
pub fn run_baseline(plan: &SimulationPlan, threads: usize) -> Result<BaselineStats> {
    plan.validate()?;
    let theta = match plan.conditioning {
        Conditioning::State(s) => s,
        Conditioning::Prior => {
            return Err(Error::validation("conditioning", "the baseline runs under a fixed state"));
        }
    };
    let cps: Vec<u64> = plan.checkpoints.iter().copied().filter(|&t| t <= plan.horizon).collect();
    let prior = plan.prior_llr();
    let range = plan.first_trial..plan.first_trial + plan.trials;
    with_pool(threads, || {
        range
            .into_par_iter()
            .try_fold(
                || BaselineStats::empty(&cps),
                |mut acc, i| -> Result<BaselineStats> {
                    let values = simulate_baseline_llr(plan.model, theta, plan.horizon, plan.master_seed, i, &cps)?;
                    acc.trials += 1;
                    for (k, (_, v)) in values.into_iter().enumerate() {
                        acc.llr[k].add(v);
                        acc.llr_sq[k].add(v * v);
                        acc.rb[k].add(rb_mistake_weight(prior + v));
                    }
                    Ok(acc)
                },
            )
            .try_reduce(
                || BaselineStats::empty(&cps),
                |mut a, b| {
                    a.merge(&b);
                    Ok(a)
                },
            )
    })?
}
