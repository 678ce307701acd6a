use rand::RngCore;

use super::trajectory::{stats_from_blocks, ActionBlock, Checkpoint, SwitchEvent, Trajectory, TrajectoryStats};
use crate::belief::{decide, switch_probability, Action, BeliefState};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::rng::{open01, TrialRng, BASELINE_STREAM_OFFSET};
use crate::signal::{SignalModel, StateOfWorld};

/// How agents' actions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampler {
    /// Draw L_t and apply the decision rule.
    Literal,
    /// Draw the action from its conditional probability given (ell_t, theta),
    /// skipping ahead geometrically inside runs where a switch is unlikely.
    /// Same law as `Literal`, different random numbers.
    #[default]
    Thinned,
}

/// Below this switch probability the thinned sampler stops drawing one
/// uniform per agent and jumps to the next candidate switch instead.
pub const THINNING_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Default)]
pub struct TrajectoryOptions {
    /// Times t (1 ..= horizon + 1) at which ell_t is recorded.
    pub checkpoints: Vec<u64>,
    pub prior_llr: f64,
    pub sampler: Sampler,
    /// Keep ell_1..=ell_{horizon+1}.
    pub record_path: bool,
}

fn check_checkpoints(checkpoints: &[u64], horizon: u64) -> Result<()> {
    if checkpoints.first() == Some(&0)
        || checkpoints.windows(2).any(|w| w[1] <= w[0])
        || checkpoints.last().is_some_and(|&c| c > horizon + 1)
    {
        return Err(Error::validation(
            "checkpoints",
            format!("must be strictly increasing within [1, {}]", horizon + 1),
        ));
    }
    Ok(())
}

/// Geometric number of trials up to and including the first success with
/// success probability p: 1 + floor(ln U / ln(1 - p)).
fn geometric_gap(p: f64, rng: &mut dyn RngCore) -> u64 {
    if p <= 0.0 {
        return u64::MAX;
    }
    let g = (open01(rng).ln() / (-p).ln_1p()).floor();
    if g >= (u64::MAX / 2) as f64 {
        u64::MAX / 2
    } else {
        1 + g as u64
    }
}

/// Thinning state for the current run.
struct Thinning {
    /// Non-candidate steps left before the candidate step.
    skip: u64,
    /// The switch-probability bound the gap was drawn with.
    bound: f64,
}

/// Simulates agents 1..=horizon under `theta`. Randomness comes only from
/// the (master_seed, trial_index) stream, so the output does not depend on
/// scheduling, and a shorter horizon yields a prefix of a longer one.
pub fn simulate_trajectory<M: SignalModel + ?Sized>(
    model: &M,
    theta: StateOfWorld,
    horizon: u64,
    master_seed: u64,
    trial_index: u64,
    opts: &TrajectoryOptions,
) -> Result<(Trajectory, TrajectoryStats)> {
    let mut rng = TrialRng::new(master_seed, trial_index);
    simulate_with_rng(model, theta, horizon, master_seed, trial_index, opts, &mut rng)
}

pub(crate) fn simulate_with_rng<M: SignalModel + ?Sized>(
    model: &M,
    theta: StateOfWorld,
    horizon: u64,
    master_seed: u64,
    trial_index: u64,
    opts: &TrajectoryOptions,
    rng: &mut dyn RngCore,
) -> Result<(Trajectory, TrajectoryStats)> {
    if horizon == 0 {
        return Err(Error::validation("horizon", "must be at least 1"));
    }
    check_checkpoints(&opts.checkpoints, horizon)?;

    let mut state = BeliefState::new(opts.prior_llr);
    let mut blocks: Vec<ActionBlock> = Vec::new();
    let mut switches = Vec::new();
    let mut checkpoints = Vec::with_capacity(opts.checkpoints.len());
    let mut next_cp = 0;
    let mut max_abs = state.ell().abs();
    let mut path = opts.record_path.then(|| Vec::with_capacity(horizon as usize + 1));
    let mut thin: Option<Thinning> = None;

    loop {
        let t = state.t();
        let ell = state.ell();
        max_abs = max_abs.max(ell.abs());
        if next_cp < opts.checkpoints.len() && opts.checkpoints[next_cp] == t {
            checkpoints.push(Checkpoint {
                t,
                ell,
                max_abs_ell: max_abs,
            });
            next_cp += 1;
        }
        if let Some(p) = path.as_mut() {
            p.push(ell);
        }
        if t > horizon {
            break;
        }

        let current = blocks.last().map(|b| b.action);
        let action = match (opts.sampler, current) {
            (Sampler::Literal, _) => decide(ell, model.sample(theta, rng)),
            (Sampler::Thinned, None) => {
                let p_switch = switch_probability(model, ell, theta, Action::Minus);
                if open01(rng) < p_switch {
                    Action::Plus
                } else {
                    Action::Minus
                }
            }
            (Sampler::Thinned, Some(b)) => match thin.as_mut() {
                Some(th) if th.skip > 0 => {
                    th.skip -= 1;
                    b
                }
                Some(th) => {
                    // candidate step: accept with q / bound
                    let q = switch_probability(model, ell, theta, b);
                    let accept = open01(rng) * th.bound < q;
                    thin = None;
                    if accept {
                        b.flip()
                    } else {
                        b
                    }
                }
                None => {
                    let q = switch_probability(model, ell, theta, b);
                    if q >= THINNING_THRESHOLD {
                        if open01(rng) < q {
                            b.flip()
                        } else {
                            b
                        }
                    } else {
                        let gap = geometric_gap(q, rng);
                        if gap == 1 {
                            b.flip()
                        } else {
                            thin = Some(Thinning {
                                skip: gap - 2,
                                bound: q,
                            });
                            b
                        }
                    }
                }
            },
        };

        state.observe(model, action);
        if !state.ell().is_finite() {
            return Err(Error::Numerical(format!(
                "public ratio became {} at t = {t} (trial {trial_index})",
                state.ell()
            )));
        }
        match blocks.last_mut() {
            Some(last) if last.action == action => last.len += 1,
            Some(_) => {
                switches.push(SwitchEvent {
                    t,
                    ell_before: ell,
                    ell_after: state.ell(),
                    action,
                });
                thin = None;
                blocks.push(ActionBlock { start: t, len: 1, action });
            }
            None => blocks.push(ActionBlock { start: t, len: 1, action }),
        }
    }

    let stats = stats_from_blocks(&blocks, theta, horizon);
    let trajectory = Trajectory {
        theta,
        horizon,
        master_seed,
        trial_index,
        blocks,
        switches,
        checkpoints,
        final_ell: state.ell(),
        path,
    };
    Ok((trajectory, stats))
}

/// Replays an action sequence through the belief recurrence and returns
/// ell_1..=ell_{n+1}.
pub fn replay_actions<M: SignalModel + ?Sized>(model: &M, prior_llr: f64, actions: &[Action]) -> Vec<f64> {
    let mut state = BeliefState::new(prior_llr);
    let mut out = Vec::with_capacity(actions.len() + 1);
    out.push(state.ell());
    for &a in actions {
        state.observe(model, a);
        out.push(state.ell());
    }
    out
}

/// Public ratio if every private LLR were observed: sum of L_1..L_t,
/// reported at each checkpoint t (1 ..= horizon). Uses its own random
/// stream, disjoint from the action simulator's.
pub fn simulate_baseline_llr<M: SignalModel + ?Sized>(
    model: &M,
    theta: StateOfWorld,
    horizon: u64,
    master_seed: u64,
    trial_index: u64,
    checkpoints: &[u64],
) -> Result<Vec<(u64, f64)>> {
    if horizon == 0 {
        return Err(Error::validation("horizon", "must be at least 1"));
    }
    check_checkpoints(checkpoints, horizon.saturating_sub(1))?;
    let mut rng = TrialRng::new(master_seed, trial_index.wrapping_add(BASELINE_STREAM_OFFSET));
    let mut sum = CompensatedSum::default();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut t = 0u64;
    for &c in checkpoints {
        while t < c {
            sum.add(model.sample(theta, &mut rng));
            t += 1;
        }
        out.push((c, sum.value()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::GaussianSignalModel;

    fn opts(sampler: Sampler) -> TrajectoryOptions {
        TrajectoryOptions {
            checkpoints: vec![1, 10, 100, 1001],
            prior_llr: 0.0,
            sampler,
            record_path: true,
        }
    }

    #[test]
    fn replay_reproduces_checkpoints_exactly() {
        let m = GaussianSignalModel::new(2.0).unwrap();
        for sampler in [Sampler::Thinned, Sampler::Literal] {
            let (traj, stats) = simulate_trajectory(&m, StateOfWorld::Plus, 1000, 7, 3, &opts(sampler)).unwrap();
            let ells = replay_actions(&m, 0.0, &traj.actions());
            for cp in &traj.checkpoints {
                assert_eq!(cp.ell.to_bits(), ells[(cp.t - 1) as usize].to_bits());
            }
            assert_eq!(traj.final_ell.to_bits(), ells[1000].to_bits());
            assert_eq!(traj.path.as_ref().unwrap(), &ells);
            assert_eq!(stats.upsets as usize, traj.switches.len());
        }
    }

    #[test]
    fn same_seed_same_trajectory_and_prefix_property() {
        let m = GaussianSignalModel::new(1.0).unwrap();
        let o = TrajectoryOptions::default();
        let (a, _) = simulate_trajectory(&m, StateOfWorld::Plus, 5000, 1, 2, &o).unwrap();
        let (b, _) = simulate_trajectory(&m, StateOfWorld::Plus, 5000, 1, 2, &o).unwrap();
        assert_eq!(a, b);
        let (short, s) = simulate_trajectory(&m, StateOfWorld::Plus, 700, 1, 2, &o).unwrap();
        assert_eq!(short.actions()[..], a.actions()[..700]);
        assert_eq!(s, a.stats_at(700));
    }

    #[test]
    fn mistake_free_paths_have_no_upsets() {
        let m = GaussianSignalModel::new(0.2).unwrap();
        let mut seen = 0;
        for trial in 0..50 {
            let (traj, s) =
                simulate_trajectory(&m, StateOfWorld::Plus, 200, 3, trial, &TrajectoryOptions::default()).unwrap();
            if traj.actions().iter().all(|&a| a == Action::Plus) {
                seen += 1;
                assert_eq!((s.upsets, s.t_first_mistake), (0, 0));
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn baseline_single_step_is_one_draw() {
        let m = GaussianSignalModel::new(2.0).unwrap();
        let v = simulate_baseline_llr(&m, StateOfWorld::Plus, 1, 9, 0, &[1]).unwrap();
        let mut rng = TrialRng::new(9, BASELINE_STREAM_OFFSET);
        assert_eq!(v[0].1, m.sample(StateOfWorld::Plus, &mut rng));
    }

    #[test]
    fn checkpoint_validation() {
        let m = GaussianSignalModel::new(2.0).unwrap();
        let mut o = TrajectoryOptions::default();
        o.checkpoints = vec![5, 3];
        assert!(simulate_trajectory(&m, StateOfWorld::Plus, 10, 0, 0, &o).is_err());
        o.checkpoints = vec![12];
        assert!(simulate_trajectory(&m, StateOfWorld::Plus, 10, 0, 0, &o).is_err());
    }
}
