use super::config::{ConditioningSpec, ExperimentConfig, ExperimentKind, TailSpec};
use super::output::{Cell, ExperimentOutput, Table};
use crate::asymptotics::{
    closed_form_exponential_tail, closed_form_polynomial_tail, gaussian_rate_prediction, iterate_recurrence_at,
    last_sign_change, solve_belief_ode, solve_tail_ode, GaussianEnvelope, OdeSolution,
};
use crate::belief::{
    ell_star_at, ln_d_plus, ell_star_path, first_mistake_distribution, minus_contraction_threshold, prior_llr,
    FIRST_MISTAKE_CSV_HEADER,
};
use crate::error::{Error, Result};
use crate::montecarlo::{
    compare_first_mistake, estimate_mistake_curve, estimate_time_to_learn, estimate_upset_tail, run_baseline,
    run_length_rows, run_trials, upset_survival, AggregateStats, Conditioning, SimulationPlan, MISTAKES_CSV_HEADER,
    RUNS_CSV_HEADER, T1_CSV_HEADER, TTL_CSV_HEADER, UPSETS_CSV_HEADER,
};
use crate::numeric::linear_fit;
use crate::signal::{Model, StateOfWorld};

/// Execution knobs that never change results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    /// Write the full paths of this many trials (from the first one).
    pub dump_trajectories: u64,
}

/// ell* paths longer than this are not stored for run diagnostics.
const DIAGNOSTIC_PATH_LIMIT: u64 = 10_000_000;

/// Search range for the upset contraction threshold.
const CONTRACTION_SEARCH: f64 = 60.0;

/// Computes every output of the experiment in memory.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    let mut opts = *opts;
    if opts.threads == 0 {
        opts.threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    }
    let opts = &opts;
    let model = config.model.build()?;
    let mut out = ExperimentOutput::default();
    out.set("experiment", config.experiment.name());
    out.set("model", config.model.family());
    match config.experiment {
        ExperimentKind::GaussRate => gauss_rate(config, &model, &mut out)?,
        ExperimentKind::FirstMistake => first_mistake(config, &model, opts, &mut out)?,
        ExperimentKind::TimeToLearn => time_to_learn(config, &model, opts, &mut out)?,
        ExperimentKind::UpsetTail => upset_tail(config, &model, opts, &mut out)?,
        ExperimentKind::RateTarget => rate_target(config, &model, &mut out)?,
        ExperimentKind::MistakeCurve => mistake_curve(config, &model, opts, &mut out)?,
        ExperimentKind::BaselineCompare => baseline_compare(config, &model, opts, &mut out)?,
        ExperimentKind::OdeCheck => ode_check(config, &model, &mut out)?,
    }
    Ok(out)
}

fn conditioning(config: &ExperimentConfig) -> Conditioning {
    match config.conditioning {
        ConditioningSpec::Plus => Conditioning::State(StateOfWorld::Plus),
        ConditioningSpec::Minus => Conditioning::State(StateOfWorld::Minus),
        ConditioningSpec::Prior => Conditioning::Prior,
    }
}

fn plan<'a>(config: &ExperimentConfig, model: &'a Model, horizon: u64) -> SimulationPlan<'a> {
    let mut p = SimulationPlan::new(model, horizon, config.trials, config.master_seed);
    p.conditioning = conditioning(config);
    p.prior = config.prior;
    p.sampler = config.sampler.into();
    p.checkpoints = config.checkpoints.iter().copied().filter(|&t| t <= horizon).collect();
    p
}

fn dump_trajectories(plan: &SimulationPlan, opts: &RunOptions, out: &mut ExperimentOutput) -> Result<()> {
    let n = opts.dump_trajectories.min(plan.trials);
    for i in plan.first_trial..plan.first_trial + n {
        let (traj, _) = plan.simulate(i, true)?;
        let mut buf = Vec::new();
        traj.write_csv(&mut buf)?;
        out.add_file(
            &format!("trajectories/trial_{i:06}.csv"),
            String::from_utf8(buf).expect("csv is ascii"),
        );
    }
    Ok(())
}

fn write_mistakes(agg: &AggregateStats, out: &mut ExperimentOutput) -> Result<()> {
    let mut t = Table::new(MISTAKES_CSV_HEADER);
    let mut worst_z: f64 = 0.0;
    for r in estimate_mistake_curve(agg)? {
        t.push(vec![r.t.into(), r.p_rb.into(), r.p_naive.into(), r.stderr_rb.into()]);
        if let Some(p) = r.p_naive {
            // binomial spread at the RB value; the plug-in one is 0 when no
            // mistakes were seen
            let se = (r.p_rb * (1.0 - r.p_rb) / agg.trials as f64).sqrt();
            let combined = (se * se + r.stderr_rb * r.stderr_rb).sqrt();
            if combined > 0.0 {
                worst_z = worst_z.max((p - r.p_rb).abs() / combined);
            }
        }
    }
    out.add_table("mistakes.csv", &t);
    out.set_f64("rb_vs_naive_max_z", worst_z);
    Ok(())
}

fn write_runs(agg: &AggregateStats, out: &mut ExperimentOutput) {
    let mut t = Table::new(RUNS_CSV_HEADER);
    for (len, count, good) in run_length_rows(agg) {
        t.push(vec![len.into(), count.into(), if good { "good" } else { "bad" }.into()]);
    }
    out.add_table("runs.csv", &t);
}

fn write_survival(agg: &AggregateStats, out: &mut ExperimentOutput) {
    let mut t = Table::new(UPSETS_CSV_HEADER);
    for r in upset_survival(agg) {
        t.push(vec![r.n.into(), r.survival.into(), r.lo.into(), r.hi.into()]);
    }
    out.add_table("upsets.csv", &t);
}

fn write_diagnostics(agg: &AggregateStats, out: &mut ExperimentOutput) {
    let d = &agg.diagnostics;
    out.set("trials", agg.trials);
    out.set("contraction_checked", d.contraction_checked);
    out.set("contraction_violations", d.contraction_violations);
    out.set("shift_runs", d.shift_runs);
    out.set("shift_max", d.shift_max);
    if let Some(r) = d.ratio_to_ell_star_max {
        out.set_f64("max_abs_ell_over_ell_star", r);
    }
}

fn gauss_rate(config: &ExperimentConfig, model: &Model, out: &mut ExperimentOutput) -> Result<()> {
    let Model::Gaussian(g) = model else {
        return Err(Error::validation("model.family", "gauss-rate needs a gaussian model"));
    };
    let lower = GaussianEnvelope::new(0.0, g.tau(), 0.0)?;
    let upper = GaussianEnvelope::new(config.eta_upper, g.tau(), 0.0)?;
    let path = ell_star_at(model, prior_llr(config.prior)?, &config.checkpoints)?;
    let mut t = Table::new("t,ell_star,prediction,ratio,envelope_lower,envelope_upper,bracketed");
    let mut margins = Vec::new();
    let mut decade_dev = Vec::new();
    let mut final_ratio = f64::NAN;
    for &(time, ell) in &path {
        if time < 2 {
            continue;
        }
        let tf = time as f64;
        let pred = gaussian_rate_prediction(g.sigma(), tf)?;
        let ratio = ell / pred;
        let lo = lower.value(tf).unwrap_or(f64::NAN);
        let hi = upper.value(tf).unwrap_or(f64::NAN);
        let margin = (ell - lo).min(hi - ell);
        t.push(vec![
            time.into(),
            ell.into(),
            pred.into(),
            ratio.into(),
            lo.into(),
            hi.into(),
            (margin >= 0.0).into(),
        ]);
        margins.push((time, margin));
        if time >= 1000 && is_power_of_ten(time) {
            decade_dev.push((ratio - 1.0).abs());
        }
        final_ratio = ratio;
    }
    out.add_table("ratio.csv", &t);
    out.set_f64("final_ratio", final_ratio);
    out.set(
        "ratio_deviation_strictly_decreasing",
        decade_dev.len() >= 2 && decade_dev.windows(2).all(|w| w[1] < w[0]),
    );
    let m: Vec<f64> = margins.iter().map(|&(_, m)| if m == 0.0 { f64::MIN_POSITIVE } else { m }).collect();
    match last_sign_change(&m).filter(|_| *m.last().unwrap() > 0.0) {
        Some(i) => out.set("bracketed_from", margins[i].0),
        None => out.set("bracketed_from", serde_json::Value::Null),
    }
    out.set_f64("envelope_ordering_from", upper.above_lower_from());
    // the comparison argument needs D_+ <= F_eta (upper) and D_+ >= F_0
    // (lower) on [x, inf)
    let grid: Vec<f64> = (1..=4000).map(|i| i as f64 * 0.05).collect();
    let ln_tail = |e: &GaussianEnvelope, x: f64| -(1.0 - e.eta) * x * x / (2.0 * e.tau * e.tau) - x.ln();
    let upper_gap: Vec<f64> = grid.iter().map(|&x| ln_tail(&upper, x) - ln_d_plus(model, x)).collect();
    let lower_gap: Vec<f64> = grid.iter().map(|&x| ln_d_plus(model, x) - ln_tail(&lower, x)).collect();
    for (key, gap) in [("upper_dominates_from_ell", &upper_gap), ("lower_dominated_from_ell", &lower_gap)] {
        match last_sign_change(gap).filter(|_| *gap.last().unwrap() > 0.0) {
            Some(i) => out.set_f64(key, grid[i]),
            None => out.set(key, serde_json::Value::Null),
        }
    }
    Ok(())
}

fn is_power_of_ten(mut t: u64) -> bool {
    while t >= 10 && t % 10 == 0 {
        t /= 10;
    }
    t == 1
}

/// log10 P(T_1 = t) against log10 t, on 20 points per decade over [lo, hi].
fn tail_slope(probs: impl Fn(u64) -> f64, lo: u64, hi: u64) -> Result<crate::numeric::LinearFit> {
    let (a, b) = ((lo as f64).log10(), (hi as f64).log10());
    let n = ((b - a) * 20.0).round().max(1.0) as usize;
    let mut ts: Vec<u64> = (0..=n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / n as f64).round() as u64)
        .map(|t| t.clamp(lo, hi))
        .collect();
    ts.dedup();
    let (xs, ys): (Vec<f64>, Vec<f64>) = ts
        .iter()
        .map(|&t| ((t as f64).log10(), probs(t).log10()))
        .filter(|(_, y)| y.is_finite())
        .unzip();
    linear_fit(&xs, &ys)
}

fn first_mistake(
    config: &ExperimentConfig,
    model: &Model,
    opts: &RunOptions,
    out: &mut ExperimentOutput,
) -> Result<()> {
    if config.conditioning != ConditioningSpec::Plus {
        return Err(Error::validation("conditioning", "first-mistake runs under the plus state"));
    }
    let exact = first_mistake_distribution(model, config.horizon, prior_llr(config.prior)?)?;
    let mut t = Table::new(&format!("{FIRST_MISTAKE_CSV_HEADER},partial_mean"));
    for &time in &config.checkpoints {
        let i = (time - 1) as usize;
        let lp = exact.ln_probs[i];
        t.push(vec![
            time.into(),
            exact.ell_star.values[i].into(),
            lp.exp().into(),
            (lp / std::f64::consts::LN_10).into(),
            exact.ln_survivor[i].exp().into(),
            exact.partial_mean(time).into(),
        ]);
    }
    out.add_table("t1_exact.csv", &t);
    out.set_f64("p_first_mistake_at_1", exact.prob(1));
    out.set_f64("survivor_mass", exact.survivor());
    out.set_f64("partial_mean_at_horizon", exact.partial_mean(config.horizon));
    if config.horizon >= 1000 {
        let fit = tail_slope(|t| exact.prob(t), 100, config.horizon)?;
        out.set_f64("tail_slope", fit.slope);
        out.set_f64("tail_slope_r2", fit.r_squared);
    }

    let p = plan(config, model, config.mc_horizon);
    let agg = run_trials(&p, opts.threads)?;
    let rows = compare_first_mistake(&agg, &exact)?;
    let mut t = Table::new(T1_CSV_HEADER);
    let n = agg.trials as f64;
    let (mut checked, mut violated) = (0u64, 0u64);
    for r in &rows {
        t.push(vec![r.t.into(), r.empirical.into(), r.exact.into()]);
        let expected = n * r.exact;
        if expected >= 25.0 {
            checked += 1;
            let sd = (n * r.exact * (1.0 - r.exact)).sqrt();
            if (r.count as f64 - expected).abs() > 3.0 * sd {
                violated += 1;
            }
        }
    }
    out.add_table("t1.csv", &t);
    out.set("mc_trials", agg.trials);
    out.set("mc_horizon", config.mc_horizon);
    out.set("bands_checked", checked);
    out.set("bands_violated", violated);
    dump_trajectories(&p, opts, out)
}

fn diagnostic_path(config: &ExperimentConfig, model: &Model) -> Result<Option<crate::belief::EllStarPath>> {
    if config.horizon >= DIAGNOSTIC_PATH_LIMIT {
        return Ok(None);
    }
    Ok(Some(ell_star_path(model, config.horizon + 1, prior_llr(config.prior)?)?))
}

fn time_to_learn(
    config: &ExperimentConfig,
    model: &Model,
    opts: &RunOptions,
    out: &mut ExperimentOutput,
) -> Result<()> {
    let path = diagnostic_path(config, model)?;
    let mut p = plan(config, model, config.horizon);
    p.ttl_horizons = config.ttl_horizons.clone();
    p.contraction_threshold = minus_contraction_threshold(model, CONTRACTION_SEARCH).ok();
    p.ell_star = path.as_ref();
    let agg = run_trials(&p, opts.threads)?;

    let rows = estimate_time_to_learn(&agg)?;
    let mut t = Table::new(TTL_CSV_HEADER);
    for r in &rows {
        t.push(vec![
            r.horizon.into(),
            r.mean_uncensored.into(),
            r.lower_bound.into(),
            r.censored_frac.into(),
        ]);
    }
    out.add_table("ttl.csv", &t);
    let last = rows.last().expect("at least one horizon");
    out.set_f64("lower_bound", last.lower_bound);
    out.set_f64("censored_frac", last.censored_frac);
    out.set("unreliable", last.unreliable);
    if rows.len() >= 2 {
        let prev = rows[rows.len() - 2];
        out.set_f64("lower_bound_growth", last.lower_bound / prev.lower_bound - 1.0);
    }
    if let Some(th) = p.contraction_threshold {
        out.set_f64("contraction_threshold", th);
    }
    write_diagnostics(&agg, out);
    write_survival(&agg, out);
    write_runs(&agg, out);
    write_mistakes(&agg, out)?;
    dump_trajectories(&p, opts, out)
}

fn upset_tail(config: &ExperimentConfig, model: &Model, opts: &RunOptions, out: &mut ExperimentOutput) -> Result<()> {
    let path = diagnostic_path(config, model)?;
    let mut p = plan(config, model, config.horizon);
    p.ell_star = path.as_ref();
    p.ttl_horizons = vec![config.horizon];
    let agg = run_trials(&p, opts.threads)?;
    let tail = estimate_upset_tail(&agg)?;
    write_survival(&agg, out);
    out.set_f64("slope", tail.fit.slope);
    out.set_f64("intercept", tail.fit.intercept);
    out.set_f64("r_squared", tail.fit.r_squared);
    out.set("fit_points", tail.fit.points as u64);
    out.set("final_block_good", agg.trials - agg.ttl[0].censored);
    write_diagnostics(&agg, out);
    write_runs(&agg, out);
    dump_trajectories(&p, opts, out)
}

fn rate_target(config: &ExperimentConfig, model: &Model, out: &mut ExperimentOutput) -> Result<()> {
    let Model::RateTarget(rt) = model else {
        return Err(Error::validation("model.family", "rate-target needs a ratetarget model"));
    };
    let path = ell_star_at(model, prior_llr(config.prior)?, &config.checkpoints)?;
    let mut t = Table::new("t,ell_star,rate,ratio,ell_over_t");
    let (mut min_ratio, mut max_ratio) = (f64::INFINITY, 0.0f64);
    for &(time, ell) in &path {
        if time < 2 {
            continue;
        }
        let rate = config.rate.eval(time as f64);
        let ratio = ell / rate;
        t.push(vec![time.into(), ell.into(), rate.into(), ratio.into(), (ell / time as f64).into()]);
        if time >= 1000 {
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
        }
    }
    out.add_table("path.csv", &t);
    out.set("half_width", rt.half_width() as u64);
    if let Some(&(_, ell)) = path.last() {
        out.set_f64("final_ell_star", ell);
        out.set_f64("final_ell_over_t", ell / config.horizon as f64);
    }
    if min_ratio.is_finite() {
        out.set_f64("min_ratio_from_1000", min_ratio);
        out.set_f64("max_ratio_from_1000", max_ratio);
    }
    Ok(())
}

fn mistake_curve(
    config: &ExperimentConfig,
    model: &Model,
    opts: &RunOptions,
    out: &mut ExperimentOutput,
) -> Result<()> {
    let p = plan(config, model, config.horizon);
    let agg = run_trials(&p, opts.threads)?;
    write_mistakes(&agg, out)?;
    let rows = estimate_mistake_curve(&agg)?;
    let last = rows.last().expect("checkpoints are nonempty");
    out.set("trials", agg.trials);
    out.set_f64("final_p_rb", last.p_rb);
    if last.t > 0 {
        out.set_f64("final_log_p_over_t", last.p_rb.ln() / last.t as f64);
    }
    dump_trajectories(&p, opts, out)
}

fn baseline_compare(
    config: &ExperimentConfig,
    model: &Model,
    opts: &RunOptions,
    out: &mut ExperimentOutput,
) -> Result<()> {
    let p = plan(config, model, config.horizon);
    let base = run_baseline(&p, opts.threads)?;
    let sign = match p.conditioning {
        Conditioning::State(s) => f64::from(s.sign()),
        Conditioning::Prior => unreachable!("rejected by the config"),
    };
    let star = ell_star_at(model, prior_llr(config.prior)?, &base.checkpoints)?;
    let mut t = Table::new("t,mean_llr_over_t,stderr,ell_star,ell_star_over_t,p_rb");
    let n = base.trials as f64;
    for (i, &(time, mean, se)) in base.mean_rate().iter().enumerate() {
        let ell = sign * star[i].1;
        t.push(vec![
            time.into(),
            mean.into(),
            se.into(),
            ell.into(),
            (ell / time as f64).into(),
            (base.rb[i].value() / n).into(),
        ]);
    }
    out.add_table("baseline.csv", &t);
    if let Some(&(_, mean, se)) = base.mean_rate().last() {
        out.set_f64("final_mean_llr_over_t", mean);
        out.set_f64("final_stderr", se);
    }
    if let Some(&(time, ell)) = star.last() {
        out.set_f64("final_ell_star_over_t", ell / time as f64);
    }
    out.set("trials", base.trials);
    Ok(())
}

fn ode_check(config: &ExperimentConfig, model: &Model, out: &mut ExperimentOutput) -> Result<()> {
    let times: Vec<u64> = config.checkpoints.clone();
    let stops: Vec<f64> = times.iter().map(|&t| t as f64).collect();
    let horizon = config.horizon as f64;
    if horizon <= 1.0 {
        return Err(Error::validation("horizon", "ode-check needs a horizon above 1"));
    }
    let (sol, reference): (OdeSolution, Vec<(u64, f64)>) = match config.tail {
        Some(tail) => {
            let g = move |x: f64| match tail {
                TailSpec::Exponential { .. } => (-x).exp(),
                TailSpec::Polynomial { k, .. } => x.powf(-k),
            };
            let exact = move |t: f64| match tail {
                TailSpec::Exponential { c } => closed_form_exponential_tail(c, t),
                TailSpec::Polynomial { k, c } => closed_form_polynomial_tail(k, c, t),
            };
            let f1 = exact(1.0)?;
            let sol = solve_tail_ode(g, 1.0, f1, horizon, &stops)?;
            let mut t = Table::new("t,ode,reference,rel_error");
            let mut max_err: f64 = 0.0;
            for &time in &times {
                let v = sol.eval(time as f64)?;
                let r = exact(time as f64)?;
                let err = (v / r - 1.0).abs();
                max_err = max_err.max(err);
                t.push(vec![time.into(), v.into(), r.into(), err.into()]);
            }
            out.add_table("ode.csv", &t);
            out.set_f64("max_rel_error", max_err);
            (sol, iterate_recurrence_at(g, f1, &times)?)
        }
        None => {
            let p0 = prior_llr(config.prior)?;
            if p0 < 0.0 {
                return Err(Error::validation("prior", "the belief ODE starts from a nonnegative ratio"));
            }
            (solve_belief_ode(model, 1.0, p0, horizon, &stops)?, ell_star_at(model, p0, &times)?)
        }
    };
    let mut t = Table::new("t,recurrence,ode,ratio");
    let mut final_ratio = f64::NAN;
    for &(time, a) in &reference {
        let f = sol.eval(time as f64)?;
        final_ratio = a / f;
        t.push(vec![time.into(), a.into(), f.into(), Cell::Float(final_ratio)]);
    }
    out.add_table("recurrence.csv", &t);
    out.set_f64("final_recurrence_over_ode", final_ratio);
    let mut grid = Vec::new();
    sol.write_csv(&mut grid)?;
    out.add_file("ode_grid.csv", String::from_utf8(grid).expect("csv is ascii"));
    out.set("ode_steps", sol.t_grid.len() as u64 - 1);
    Ok(())
}
