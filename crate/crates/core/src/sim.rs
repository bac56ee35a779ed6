//! Episodes and Monte-Carlo batches.
//!
//! An episode is fully determined by `(master_seed, repetition_index)`: the
//! policy lane drives tie-breaking and exploration, the reward lane is
//! addressed by round. Batches run repetitions in parallel; the
//! [`ExecutionMode::Ordered`] reduction merges them in repetition order so
//! summaries are bit-for-bit reproducible.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::metrics::{Moments, RegretSummary};
use crate::policies::{Policy, PolicyConfig};
use crate::rng::EpisodeStreams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    /// Repetition-order reduction; byte-identical output across runs.
    #[default]
    Ordered,
    /// Tree reduction in whatever order workers finish. Statistics agree with
    /// the ordered mode to about 1e-12 relative.
    Parallel,
}

/// `{1, 2, 4, ...} ∪ {horizon}`.
pub fn geometric_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(1u64), |&t| t.checked_mul(2))
        .take_while(|&t| t < horizon)
        .collect();
    out.push(horizon);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub env: EnvironmentSpec,
    pub policy: PolicyConfig,
    pub horizon: u64,
    pub checkpoints: Vec<u64>,
    pub repetitions: u64,
    pub master_seed: u64,
    /// Keep the full action sequence of every episode.
    #[serde(default)]
    pub record_actions: bool,
}

impl RunSpec {
    /// A spec on the geometric checkpoint grid, without action logs.
    pub fn new(env: EnvironmentSpec, policy: PolicyConfig, horizon: u64, repetitions: u64, master_seed: u64) -> Self {
        Self {
            env,
            policy,
            horizon,
            checkpoints: geometric_checkpoints(horizon),
            repetitions,
            master_seed,
            record_actions: false,
        }
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<u64>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn with_actions(mut self) -> Self {
        self.record_actions = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPolicy(msg));
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be positive".into());
        }
        if self.checkpoints.last() != Some(&self.horizon) {
            return bad(format!("last checkpoint must equal the horizon {}", self.horizon));
        }
        if self.checkpoints[0] == 0 || self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("checkpoints must be strictly increasing in [1, T]: {:?}", self.checkpoints));
        }
        Ok(())
    }
}

/// One realized episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub checkpoints: Vec<u64>,
    /// `sum_a gap_a N_a(t)` at each checkpoint.
    pub pseudo_regret: Vec<f64>,
    /// Pull count of the instance's worst arm at each checkpoint.
    pub worst_arm_pulls: Vec<u64>,
    /// `N_a(T)`.
    pub pull_counts: Vec<u64>,
    /// `A_1..A_T` when recorded.
    pub actions: Option<Vec<u32>>,
    /// Whether each pull was forced (infinite index or exploration round), when recorded.
    pub forced: Option<Vec<bool>>,
}

impl Trajectory {
    pub fn final_regret(&self) -> f64 {
        *self.pseudo_regret.last().unwrap_or(&0.0)
    }

    /// Round of the `n`-th pull of `arm`: `Some(0)` for `n = 0`, `None` if
    /// the arm was pulled fewer than `n` times. Requires recorded actions.
    pub fn hitting_time(&self, arm: usize, n: u64) -> Result<Option<u64>> {
        if n == 0 {
            return Ok(Some(0));
        }
        let actions = self.actions()?;
        Ok(actions
            .iter()
            .enumerate()
            .filter(|(_, &a)| a as usize == arm)
            .nth((n - 1) as usize)
            .map(|(i, _)| i as u64 + 1))
    }

    /// `N_a(t)` for every arm after round `t`. Requires recorded actions.
    pub fn pull_counts_at(&self, t: u64) -> Result<Vec<u64>> {
        let actions = self.actions()?;
        let mut counts = vec![0u64; self.pull_counts.len()];
        for &a in actions.iter().take(t as usize) {
            counts[a as usize] += 1;
        }
        Ok(counts)
    }

    /// Per-round gaps `mu* - mu_{A_t}`. Requires recorded actions.
    pub fn gap_sequence(&self, env: &EnvironmentSpec) -> Result<Vec<f64>> {
        Ok(self.actions()?.iter().map(|&a| env.gaps()[a as usize]).collect())
    }

    fn actions(&self) -> Result<&[u32]> {
        self.actions
            .as_deref()
            .ok_or_else(|| Error::domain("Trajectory", "actions were not recorded"))
    }
}

/// Free-function form of [`Trajectory::hitting_time`].
pub fn hitting_time(traj: &Trajectory, arm: usize, n: u64) -> Result<Option<u64>> {
    traj.hitting_time(arm, n)
}

fn weighted_regret(gaps: &[f64], counts: &[u64]) -> f64 {
    gaps.iter().zip(counts).map(|(&g, &n)| g * n as f64).sum()
}

/// Simulates repetition `repetition` of `spec`.
pub fn run_episode(spec: &RunSpec, repetition: u64) -> Result<Trajectory> {
    spec.validate()?;
    let env = &spec.env;
    let gaps = env.gaps();
    let worst = env.worst_arm();
    let mut streams = EpisodeStreams::new(spec.master_seed, repetition);
    let mut policy = Policy::new(&spec.policy, env)?;

    let n_cp = spec.checkpoints.len();
    let mut pseudo_regret = Vec::with_capacity(n_cp);
    let mut worst_arm_pulls = Vec::with_capacity(n_cp);
    let cap = if spec.record_actions { spec.horizon as usize } else { 0 };
    let mut actions = Vec::with_capacity(cap);
    let mut forced = Vec::with_capacity(cap);
    let mut next = 0;

    for t in 1..=spec.horizon {
        let arm = policy.select(&mut streams.policy)?;
        let reward = env.sample(arm, streams.reward_at(t));
        policy.observe(arm, reward)?;
        if spec.record_actions {
            actions.push(arm as u32);
            forced.push(policy.last_was_forced());
        }
        if spec.checkpoints[next] == t {
            let counts = policy.state().counts();
            pseudo_regret.push(weighted_regret(gaps, counts));
            worst_arm_pulls.push(counts[worst]);
            next += 1;
        }
    }

    Ok(Trajectory {
        checkpoints: spec.checkpoints.clone(),
        pseudo_regret,
        worst_arm_pulls,
        pull_counts: policy.state().counts().to_vec(),
        actions: spec.record_actions.then_some(actions),
        forced: spec.record_actions.then_some(forced),
    })
}

/// Runs every repetition of `spec` and aggregates the pseudo-regret.
pub fn run_batch(spec: &RunSpec, mode: ExecutionMode) -> Result<RegretSummary> {
    spec.validate()?;
    let started = Instant::now();
    let trajectories: Vec<Trajectory> = (0..spec.repetitions)
        .into_par_iter()
        .map(|r| run_episode(spec, r))
        .collect::<Result<_>>()?;

    let n_cp = spec.checkpoints.len();
    let k = spec.env.k();
    let mut regret_samples = vec![Vec::with_capacity(trajectories.len()); n_cp];
    let mut worst_samples = vec![Vec::with_capacity(trajectories.len()); n_cp];
    for traj in &trajectories {
        for c in 0..n_cp {
            regret_samples[c].push(traj.pseudo_regret[c]);
            worst_samples[c].push(traj.worst_arm_pulls[c]);
        }
    }

    let summary = match mode {
        ExecutionMode::Ordered => {
            let mut pulls = vec![0.0; k];
            for traj in &trajectories {
                for (acc, &n) in pulls.iter_mut().zip(&traj.pull_counts) {
                    *acc += n as f64;
                }
            }
            pulls.iter_mut().for_each(|p| *p /= trajectories.len() as f64);
            RegretSummary::from_samples(spec.checkpoints.clone(), regret_samples, worst_samples, pulls)?
        }
        ExecutionMode::Parallel => {
            let identity = || (vec![Moments::default(); n_cp], vec![0.0f64; k]);
            let (moments, pulls) = trajectories
                .par_iter()
                .fold(identity, |(mut m, mut p), traj| {
                    for (acc, &x) in m.iter_mut().zip(&traj.pseudo_regret) {
                        acc.push(x);
                    }
                    for (acc, &n) in p.iter_mut().zip(&traj.pull_counts) {
                        *acc += n as f64;
                    }
                    (m, p)
                })
                .reduce(identity, |(mut m, mut p), (m2, p2)| {
                    m.iter_mut().zip(&m2).for_each(|(a, b)| a.merge(b));
                    p.iter_mut().zip(&p2).for_each(|(a, b)| *a += b);
                    (m, p)
                });
            let reps = trajectories.len() as f64;
            let pulls = pulls.into_iter().map(|p| p / reps).collect();
            RegretSummary::assemble(spec.checkpoints.clone(), moments, regret_samples, worst_samples, pulls)?
        }
    };
    log::debug!(
        "{} x {} rounds of {} in {:.2?}",
        spec.repetitions,
        spec.horizon,
        spec.policy.tag(),
        started.elapsed()
    );
    Ok(summary)
}
