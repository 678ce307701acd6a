use std::io::Write;

use serde::Serialize;

use crate::belief::Action;
use crate::error::{Error, Result};
use crate::numeric::fmt_f64;
use crate::signal::StateOfWorld;

/// A maximal block of identical consecutive actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ActionBlock {
    pub start: u64,
    pub len: u64,
    pub action: Action,
}

impl ActionBlock {
    pub fn end(&self) -> u64 {
        self.start + self.len - 1
    }
}

/// An upset at time t: a_t differs from a_{t-1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchEvent {
    pub t: u64,
    /// ell_t, the ratio agent t faced.
    pub ell_before: f64,
    /// ell_{t+1}.
    pub ell_after: f64,
    pub action: Action,
}

/// ell_t (before agent t acts) together with max |ell_s| over s <= t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: u64,
    pub ell: f64,
    pub max_abs_ell: f64,
}

/// One simulated action path, stored as run-length blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub theta: StateOfWorld,
    pub horizon: u64,
    pub master_seed: u64,
    pub trial_index: u64,
    pub blocks: Vec<ActionBlock>,
    pub switches: Vec<SwitchEvent>,
    pub checkpoints: Vec<Checkpoint>,
    /// ell_{horizon+1}.
    pub final_ell: f64,
    /// ell_1..=ell_{horizon+1} when path recording was requested.
    pub path: Option<Vec<f64>>,
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,action,ell";

impl Trajectory {
    pub fn actions(&self) -> Vec<Action> {
        let mut out = Vec::with_capacity(self.horizon as usize);
        for b in &self.blocks {
            out.extend(std::iter::repeat(b.action).take(b.len as usize));
        }
        out
    }

    /// a_t, 1-based.
    pub fn action_at(&self, t: u64) -> Action {
        let i = self.blocks.partition_point(|b| b.end() < t);
        self.blocks[i].action
    }

    /// Statistics of the prefix a_1..a_h; equal to what a run with horizon h
    /// and the same seed would report.
    pub fn stats_at(&self, h: u64) -> TrajectoryStats {
        let h = h.min(self.horizon);
        let n = self.blocks.partition_point(|b| b.start <= h);
        let mut blocks = self.blocks[..n].to_vec();
        if let Some(last) = blocks.last_mut() {
            last.len = h - last.start + 1;
        }
        stats_from_blocks(&blocks, self.theta, h)
    }

    pub fn stats(&self) -> TrajectoryStats {
        self.stats_at(self.horizon)
    }

    /// Writes (t, action, ell_t) rows; needs the recorded path.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let path = self
            .path
            .as_ref()
            .ok_or_else(|| Error::validation("dump_trajectories", "trajectory was simulated without its path"))?;
        writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
        let mut t = 1u64;
        for b in &self.blocks {
            for _ in 0..b.len {
                writeln!(w, "{},{},{}", t, b.action.sign(), fmt_f64(path[(t - 1) as usize]))?;
                t += 1;
            }
        }
        Ok(())
    }
}

/// Per-trajectory summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrajectoryStats {
    /// First t with a_t != theta; 0 when there is none.
    pub t_first_mistake: u64,
    /// Last t with a_t != theta; 0 when there is none.
    pub t_last_mistake: u64,
    /// Number of upsets up to the horizon.
    pub upsets: u64,
    /// Maximal good blocks that end inside the window (the final block is
    /// excluded because it may continue).
    pub good_run_count: u64,
    pub max_good_run: u64,
    pub max_bad_run: u64,
    /// The final action is wrong, so the time to learn exceeds the horizon.
    pub censored: bool,
}

/// Block decomposition of an action sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDecomposition {
    pub blocks: Vec<ActionBlock>,
    pub upsets: u64,
}

impl RunDecomposition {
    /// Blocks whose action is correct in `theta`.
    pub fn good_blocks(&self, theta: StateOfWorld) -> impl Iterator<Item = &ActionBlock> {
        self.blocks.iter().filter(move |b| b.action.matches(theta))
    }

    pub fn bad_blocks(&self, theta: StateOfWorld) -> impl Iterator<Item = &ActionBlock> {
        self.blocks.iter().filter(move |b| !b.action.matches(theta))
    }
}

/// Splits a nonempty action sequence (a_1 first) into maximal blocks.
pub fn extract_runs_and_upsets(actions: &[Action]) -> Result<RunDecomposition> {
    if actions.is_empty() {
        return Err(Error::validation("actions", "sequence is empty"));
    }
    let mut blocks: Vec<ActionBlock> = Vec::new();
    for (i, &a) in actions.iter().enumerate() {
        match blocks.last_mut() {
            Some(b) if b.action == a => b.len += 1,
            _ => blocks.push(ActionBlock {
                start: i as u64 + 1,
                len: 1,
                action: a,
            }),
        }
    }
    let upsets = blocks.len() as u64 - 1;
    Ok(RunDecomposition { blocks, upsets })
}

pub(crate) fn stats_from_blocks(blocks: &[ActionBlock], theta: StateOfWorld, horizon: u64) -> TrajectoryStats {
    let mut s = TrajectoryStats {
        t_first_mistake: 0,
        t_last_mistake: 0,
        upsets: blocks.len().saturating_sub(1) as u64,
        good_run_count: 0,
        max_good_run: 0,
        max_bad_run: 0,
        censored: false,
    };
    for (i, b) in blocks.iter().enumerate() {
        if b.action.matches(theta) {
            s.max_good_run = s.max_good_run.max(b.len);
            if i + 1 < blocks.len() {
                s.good_run_count += 1;
            }
        } else {
            s.max_bad_run = s.max_bad_run.max(b.len);
            if s.t_first_mistake == 0 {
                s.t_first_mistake = b.start;
            }
            s.t_last_mistake = b.end();
        }
    }
    if let Some(last) = blocks.last() {
        s.censored = !last.action.matches(theta);
        debug_assert!(!s.censored || s.t_last_mistake == horizon);
    }
    s
}
