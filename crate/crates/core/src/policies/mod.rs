//! Bandit policies built on the generic index loop: compute one index per arm,
//! pull the argmax (ties broken by the configured rule), observe, update.

mod index;
mod thompson;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{EnvironmentSpec, RewardFamily};
use crate::error::{Error, Result};

pub use index::{ucb_inf_index, ucb_tau_index};
pub use thompson::{thompson_sample, ThompsonFamily};

/// Exploration exponent: a positive real or the distinguished value `inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tau {
    Finite(f64),
    Infinite,
}

impl Tau {
    pub fn new(value: f64) -> Result<Self> {
        if value == f64::INFINITY {
            Ok(Tau::Infinite)
        } else if value > 0.0 && value.is_finite() {
            Ok(Tau::Finite(value))
        } else {
            Err(Error::InvalidPolicy(format!("tau must be positive, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Tau::Finite(t) => t,
            Tau::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tau::Finite(t) => write!(f, "{t}"),
            Tau::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Tau {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Tau::Finite(t) => s.serialize_f64(*t),
            Tau::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Tau {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let value = match Raw::deserialize(d)? {
            Raw::Num(x) => x,
            Raw::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "∞") => f64::INFINITY,
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom)?,
        };
        Tau::new(value).map_err(serde::de::Error::custom)
    }
}

/// How ties among maximal indices are resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Uniformly at random from the tying set, using the policy stream.
    #[default]
    Random,
    /// Fewest pulls first, then lowest index. Cycles through tied arms in
    /// round-robin order.
    Ordered,
}

/// Exploration mass: one value for every arm, or one per arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    Scalar(f64),
    PerArm(Vec<f64>),
}

impl Alpha {
    fn resolve(&self, k: usize) -> Result<Vec<f64>> {
        let values = match self {
            Alpha::Scalar(a) => vec![*a; k],
            Alpha::PerArm(v) if v.len() == k => v.clone(),
            Alpha::PerArm(v) => {
                return Err(Error::InvalidPolicy(format!(
                    "{} exploration masses for {k} arms",
                    v.len()
                )))
            }
        };
        if let Some(bad) = values.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidPolicy(format!(
                "exploration mass must be positive, got {bad}"
            )));
        }
        Ok(values)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schedule", rename_all = "snake_case")]
pub enum EpsSchedule {
    Fixed { epsilon: f64 },
    /// `eps_t = min(1, c K / t)`.
    Annealed { c: f64 },
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule::Fixed { epsilon: 0.1 }
    }
}

impl EpsSchedule {
    pub fn epsilon(&self, k: usize, t: u64) -> f64 {
        match *self {
            EpsSchedule::Fixed { epsilon } => epsilon,
            EpsSchedule::Annealed { c } => (c * k as f64 / t as f64).min(1.0),
        }
    }
}

/// Policy tuning, named in configuration files by `policy` tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum PolicyConfig {
    UcbTau {
        tau: Tau,
        alpha: Alpha,
        #[serde(default)]
        tie_break: TieBreak,
    },
    /// Forced sampling until each arm holds `(2 + delta) sigma*^2 ln t / gap_a^2`
    /// samples, greedy otherwise. Gaps come from the instance; the optimal arm
    /// uses the smallest positive gap.
    UcbInf {
        delta: f64,
        /// Defaults to the instance's sigma*.
        #[serde(default)]
        sigma_star: Option<f64>,
        #[serde(default)]
        tie_break: TieBreak,
    },
    Etc {
        m: u64,
    },
    Greedy,
    EpsGreedy {
        #[serde(default)]
        schedule: EpsSchedule,
    },
    Thompson {
        family: ThompsonFamily,
    },
}

impl PolicyConfig {
    pub fn tag(&self) -> &'static str {
        match self {
            PolicyConfig::UcbTau { .. } => "ucb_tau",
            PolicyConfig::UcbInf { .. } => "ucb_inf",
            PolicyConfig::Etc { .. } => "etc",
            PolicyConfig::Greedy => "greedy",
            PolicyConfig::EpsGreedy { .. } => "eps_greedy",
            PolicyConfig::Thompson { .. } => "thompson",
        }
    }

    /// Thompson sampling matched to the reward family of `env`.
    pub fn thompson_for(env: &EnvironmentSpec) -> Result<Self> {
        let family = match env.family() {
            Some(RewardFamily::Bernoulli) => ThompsonFamily::Bernoulli,
            Some(RewardFamily::Gaussian) => ThompsonFamily::Gaussian { sd: env.max_sigma() },
            other => {
                return Err(Error::UnsupportedFamily(format!(
                    "Thompson sampling needs a homogeneous Gaussian or Bernoulli instance, got {other:?}"
                )))
            }
        };
        Ok(PolicyConfig::Thompson { family })
    }
}

/// Per-episode sufficient statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyState {
    t: u64,
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl PolicyState {
    pub fn new(k: usize) -> Self {
        Self {
            t: 1,
            counts: vec![0; k],
            sums: vec![0.0; k],
        }
    }

    /// Current round (1-based).
    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// Empirical mean, `None` for an unpulled arm.
    pub fn mean(&self, arm: usize) -> Option<f64> {
        (self.counts[arm] > 0).then(|| self.sums[arm] / self.counts[arm] as f64)
    }

    pub fn update(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        self.t += 1;
    }
}

#[derive(Clone, Debug)]
enum Resolved {
    UcbTau { tau: Tau, alpha: Vec<f64>, tie: TieBreak },
    UcbInf { sigma_star: f64, delta: f64, gaps: Vec<f64>, tie: TieBreak },
    Etc { m: u64, committed: Option<usize> },
    Greedy,
    EpsGreedy(EpsSchedule),
    Thompson(ThompsonFamily),
}

/// A policy bound to an instance, with its episode state.
#[derive(Clone, Debug)]
pub struct Policy {
    kind: Resolved,
    state: PolicyState,
    scores: Vec<f64>,
    ties: Vec<usize>,
    forced: bool,
}

impl Policy {
    /// Resolves `config` against `env`: exploration masses, UCB-infinity gap
    /// knowledge and family checks.
    pub fn new(config: &PolicyConfig, env: &EnvironmentSpec) -> Result<Self> {
        let k = env.k();
        let kind = match config {
            PolicyConfig::UcbTau { tau, alpha, tie_break } => Resolved::UcbTau {
                tau: *tau,
                alpha: alpha.resolve(k)?,
                tie: *tie_break,
            },
            PolicyConfig::UcbInf { delta, sigma_star, tie_break } => {
                let sigma_star = sigma_star.unwrap_or_else(|| env.sigma_star());
                if !(*delta > 0.0) || !(sigma_star >= 0.0) {
                    return Err(Error::InvalidPolicy(format!(
                        "ucb_inf needs delta > 0 and sigma* >= 0, got delta = {delta}, sigma* = {sigma_star}"
                    )));
                }
                let surrogate = env.min_gap();
                let gaps = env.gaps().iter().map(|&g| if g > 0.0 { g } else { surrogate }).collect();
                Resolved::UcbInf { sigma_star, delta: *delta, gaps, tie: *tie_break }
            }
            PolicyConfig::Etc { m } => {
                if *m == 0 {
                    return Err(Error::InvalidPolicy("etc needs m >= 1".into()));
                }
                Resolved::Etc { m: *m, committed: None }
            }
            PolicyConfig::Greedy => Resolved::Greedy,
            PolicyConfig::EpsGreedy { schedule } => {
                let ok = match *schedule {
                    EpsSchedule::Fixed { epsilon } => (0.0..=1.0).contains(&epsilon),
                    EpsSchedule::Annealed { c } => c > 0.0 && c.is_finite(),
                };
                if !ok {
                    return Err(Error::InvalidPolicy(format!("invalid epsilon schedule {schedule:?}")));
                }
                Resolved::EpsGreedy(*schedule)
            }
            PolicyConfig::Thompson { family } => {
                match (family, env.family()) {
                    (ThompsonFamily::Bernoulli, Some(RewardFamily::Bernoulli)) => {}
                    (ThompsonFamily::Gaussian { sd }, _) if *sd >= 0.0 => {}
                    (family, actual) => {
                        return Err(Error::UnsupportedFamily(format!(
                            "Thompson family {family:?} does not match instance family {actual:?}"
                        )))
                    }
                }
                Resolved::Thompson(*family)
            }
        };
        Ok(Self {
            kind,
            state: PolicyState::new(k),
            scores: Vec::with_capacity(k),
            ties: Vec::with_capacity(k),
            forced: false,
        })
    }

    pub fn state(&self) -> &PolicyState {
        &self.state
    }

    /// Whether the last selection was a forced sample (an infinite index or an
    /// explore-then-commit exploration round).
    pub fn last_was_forced(&self) -> bool {
        self.forced
    }

    /// Picks the arm for the current round.
    pub fn select<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        let k = self.state.k();
        let t = self.state.t;
        self.scores.clear();
        let tie = match &mut self.kind {
            Resolved::UcbTau { tau, alpha, tie } => {
                let ln_t = (t as f64).ln();
                for a in 0..k {
                    let mean = self.state.mean(a).unwrap_or(0.0);
                    self.scores.push(index::ucb_tau_index_with_log(
                        mean,
                        self.state.counts[a],
                        ln_t,
                        alpha[a],
                        *tau,
                    ));
                }
                *tie
            }
            Resolved::UcbInf { sigma_star, delta, gaps, tie } => {
                for a in 0..k {
                    let mean = self.state.mean(a).unwrap_or(0.0);
                    self.scores.push(ucb_inf_index(
                        mean,
                        self.state.counts[a],
                        t,
                        *sigma_star,
                        *delta,
                        gaps[a],
                    )?);
                }
                *tie
            }
            Resolved::Etc { m, committed } => {
                let explore_rounds = *m * k as u64;
                if t <= explore_rounds {
                    self.forced = true;
                    return Ok(((t - 1) % k as u64) as usize);
                }
                self.forced = false;
                if let Some(arm) = *committed {
                    return Ok(arm);
                }
                self.scores.extend((0..k).map(|a| self.state.mean(a).unwrap_or(f64::INFINITY)));
                let arm = argmax(&self.scores, &self.state.counts, TieBreak::Random, &mut self.ties, rng);
                *committed = Some(arm);
                return Ok(arm);
            }
            Resolved::Greedy => {
                self.scores.extend((0..k).map(|a| self.state.mean(a).unwrap_or(f64::INFINITY)));
                TieBreak::Random
            }
            Resolved::EpsGreedy(schedule) => {
                let eps = schedule.epsilon(k, t);
                if rng.random::<f64>() < eps {
                    self.forced = false;
                    return Ok(rng.random_range(0..k));
                }
                self.scores.extend((0..k).map(|a| self.state.mean(a).unwrap_or(f64::INFINITY)));
                TieBreak::Random
            }
            Resolved::Thompson(family) => {
                thompson::thompson_sample_into(&self.state, *family, rng, &mut self.scores)?;
                TieBreak::Random
            }
        };
        let arm = argmax(&self.scores, &self.state.counts, tie, &mut self.ties, rng);
        self.forced = self.scores[arm] == f64::INFINITY;
        Ok(arm)
    }

    /// Records the reward of the arm pulled this round.
    pub fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        if let Resolved::Thompson(family) = &self.kind {
            family.check_reward(reward)?;
        }
        self.state.update(arm, reward);
        Ok(())
    }
}

fn argmax<R: Rng + ?Sized>(
    scores: &[f64],
    counts: &[u64],
    tie: TieBreak,
    ties: &mut Vec<usize>,
    rng: &mut R,
) -> usize {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ties.clear();
    ties.extend((0..scores.len()).filter(|&a| scores[a] == best));
    match (ties.len(), tie) {
        (0, _) => 0,
        (1, _) => ties[0],
        (n, TieBreak::Random) => ties[rng.random_range(0..n)],
        (_, TieBreak::Ordered) => *ties
            .iter()
            .min_by_key(|&&a| (counts[a], a))
            .expect("nonempty tie set"),
    }
}
