//! Arm reward models and bandit instances.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reward distribution of a single arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArmModel {
    Gaussian { mean: f64, sd: f64 },
    Bernoulli { p: f64 },
    /// Reward `high` with probability `p`, `low` otherwise. Produced by affine
    /// maps of Bernoulli arms.
    TwoPoint { p: f64, low: f64, high: f64 },
}

/// Parametric family of a reward model, as seen by family-aware policies and bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardFamily {
    Gaussian,
    Bernoulli,
    TwoPoint,
}

impl ArmModel {
    pub fn gaussian(mean: f64, sd: f64) -> Self {
        ArmModel::Gaussian { mean, sd }
    }

    pub fn bernoulli(p: f64) -> Self {
        ArmModel::Bernoulli { p }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ArmModel::Gaussian { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
            ArmModel::Bernoulli { p } => (0.0..=1.0).contains(&p),
            ArmModel::TwoPoint { p, low, high } => {
                (0.0..=1.0).contains(&p) && low.is_finite() && high.is_finite() && low <= high
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidEnvironment(format!("invalid arm model {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ArmModel::Gaussian { mean, .. } => mean,
            ArmModel::Bernoulli { p } => p,
            ArmModel::TwoPoint { p, low, high } => low + p * (high - low),
        }
    }

    /// SubGaussian constant: the standard deviation for Gaussian arms, half the
    /// support width for bounded arms (1/2 for Bernoulli).
    pub fn subgaussian(&self) -> f64 {
        match *self {
            ArmModel::Gaussian { sd, .. } => sd,
            ArmModel::Bernoulli { .. } => 0.5,
            ArmModel::TwoPoint { low, high, .. } => 0.5 * (high - low),
        }
    }

    pub fn family(&self) -> RewardFamily {
        match self {
            ArmModel::Gaussian { .. } => RewardFamily::Gaussian,
            ArmModel::Bernoulli { .. } => RewardFamily::Bernoulli,
            ArmModel::TwoPoint { .. } => RewardFamily::TwoPoint,
        }
    }

    /// Draws one reward.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ArmModel::Gaussian { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            ArmModel::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            ArmModel::TwoPoint { p, low, high } => {
                if rng.random::<f64>() < p {
                    high
                } else {
                    low
                }
            }
        }
    }

    /// The law of `scale * X + shift`.
    pub fn shift_scale(&self, scale: f64, shift: f64) -> Self {
        match *self {
            ArmModel::Gaussian { mean, sd } => ArmModel::Gaussian {
                mean: scale * mean + shift,
                sd: scale * sd,
            },
            ArmModel::Bernoulli { p } => {
                ArmModel::TwoPoint { p, low: 0.0, high: 1.0 }.shift_scale(scale, shift)
            }
            ArmModel::TwoPoint { p, low, high } => {
                let (low, high) = (scale * low + shift, scale * high + shift);
                if low == 0.0 && high == 1.0 {
                    ArmModel::Bernoulli { p }
                } else {
                    ArmModel::TwoPoint { p, low, high }
                }
            }
        }
    }
}

/// Draws one reward from `arm`.
pub fn sample_reward<R: Rng + ?Sized>(arm: &ArmModel, rng: &mut R) -> f64 {
    arm.sample(rng)
}

/// A stochastic K-armed bandit instance with a unique optimal arm.
///
/// Derived quantities (means, gaps, subGaussian constants) are computed once
/// at construction; the value is immutable afterwards and cheap to share
/// between concurrently running episodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvironmentSpec {
    arms: Vec<ArmModel>,
    #[serde(skip)]
    means: Vec<f64>,
    #[serde(skip)]
    gaps: Vec<f64>,
    #[serde(skip)]
    sigmas: Vec<f64>,
    #[serde(skip)]
    optimal: usize,
}

impl<'de> Deserialize<'de> for EnvironmentSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            arms: Vec<ArmModel>,
        }
        let raw = Raw::deserialize(d)?;
        EnvironmentSpec::new(raw.arms).map_err(serde::de::Error::custom)
    }
}

impl EnvironmentSpec {
    pub fn new(arms: Vec<ArmModel>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::InvalidEnvironment(format!(
                "need at least 2 arms, got {}",
                arms.len()
            )));
        }
        for arm in &arms {
            arm.validate()?;
        }
        let means: Vec<f64> = arms.iter().map(ArmModel::mean).collect();
        let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let optimal: Vec<usize> = (0..means.len()).filter(|&a| means[a] == best).collect();
        if optimal.len() != 1 {
            return Err(Error::InvalidEnvironment(format!(
                "optimal arm is not unique: arms {optimal:?} share mean {best}"
            )));
        }
        let gaps = means.iter().map(|m| best - m).collect();
        let sigmas = arms.iter().map(ArmModel::subgaussian).collect();
        Ok(Self {
            arms,
            means,
            gaps,
            sigmas,
            optimal: optimal[0],
        })
    }

    pub fn gaussian(means: &[f64], sds: &[f64]) -> Result<Self> {
        if means.len() != sds.len() {
            return Err(Error::InvalidEnvironment(format!(
                "{} means but {} standard deviations",
                means.len(),
                sds.len()
            )));
        }
        Self::new(means.iter().zip(sds).map(|(&m, &s)| ArmModel::gaussian(m, s)).collect())
    }

    pub fn bernoulli(probs: &[f64]) -> Result<Self> {
        Self::new(probs.iter().map(|&p| ArmModel::bernoulli(p)).collect())
    }

    /// Grid-shaped Gaussian instance: arm 0 has mean `gap`, the other `k - 1`
    /// arms have mean 0, all share standard deviation `sigma`.
    pub fn gaussian_grid(k: usize, sigma: f64, gap: f64) -> Result<Self> {
        let mut means = vec![0.0; k];
        if let Some(first) = means.first_mut() {
            *first = gap;
        }
        Self::gaussian(&means, &vec![sigma; k])
    }

    /// Grid-shaped Bernoulli instance: arm 0 has success probability
    /// `(1 + gap) / 2`, the others `(1 - gap) / 2`.
    pub fn bernoulli_grid(k: usize, gap: f64) -> Result<Self> {
        if !(gap > 0.0 && gap <= 1.0) {
            return Err(Error::InvalidEnvironment(format!(
                "Bernoulli gap must lie in (0, 1], got {gap}"
            )));
        }
        let mut probs = vec![0.5 * (1.0 - gap); k];
        if let Some(first) = probs.first_mut() {
            *first = 0.5 * (1.0 + gap);
        }
        Self::bernoulli(&probs)
    }

    pub fn arms(&self) -> &[ArmModel] {
        &self.arms
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn optimal_arm(&self) -> usize {
        self.optimal
    }

    pub fn optimal_mean(&self) -> f64 {
        self.means[self.optimal]
    }

    pub fn sigma_star(&self) -> f64 {
        self.sigmas[self.optimal]
    }

    pub fn max_sigma(&self) -> f64 {
        self.sigmas.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest positive gap.
    pub fn min_gap(&self) -> f64 {
        self.gaps
            .iter()
            .copied()
            .filter(|&g| g > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }

    /// The arm with the largest gap (lowest index among ties).
    pub fn worst_arm(&self) -> usize {
        let max = self.max_gap();
        self.gaps.iter().position(|&g| g == max).unwrap_or(0)
    }

    /// Common family of all arms, if the instance is homogeneous.
    pub fn family(&self) -> Option<RewardFamily> {
        let first = self.arms[0].family();
        self.arms.iter().all(|a| a.family() == first).then_some(first)
    }

    pub fn sample<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64 {
        self.arms[arm].sample(rng)
    }

    /// Class statistic `max_a sigma_a / (min_{gap > 0} gap)^s`.
    ///
    /// The instance lies in the class `Psi^s(gamma)` iff the statistic is at
    /// most `gamma`; at `s = 0` it is `max_a sigma_a`, the `Phi(sigma)` test.
    pub fn noise_gap_statistic(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::domain("noise_gap_statistic", format!("s = {s} not in [0, 1]")));
        }
        let min_gap = self.min_gap();
        if !min_gap.is_finite() {
            return Err(Error::domain("noise_gap_statistic", "no positive gap"));
        }
        let max_sigma = self.max_sigma();
        if s == 0.0 {
            return Ok(max_sigma);
        }
        Ok(max_sigma / min_gap.powf(s))
    }

    /// The instance with every reward mapped through `X -> scale * X + shift`.
    pub fn shift_scale(&self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && shift.is_finite()) {
            return Err(Error::domain(
                "shift_scale",
                format!("scale = {scale}, shift = {shift}"),
            ));
        }
        Self::new(self.arms.iter().map(|a| a.shift_scale(scale, shift)).collect())
    }
}

/// An environment class: `Phi(sigma)` when `s = 0`, `Psi^s(gamma)` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub s: f64,
    pub bound: f64,
}

impl ClassSpec {
    pub fn new(s: f64, bound: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) || !(bound >= 0.0) {
            return Err(Error::domain("ClassSpec", format!("s = {s}, bound = {bound}")));
        }
        Ok(Self { s, bound })
    }

    pub fn phi(sigma: f64) -> Result<Self> {
        Self::new(0.0, sigma)
    }

    pub fn psi(gamma: f64) -> Result<Self> {
        Self::new(1.0, gamma)
    }

    pub fn contains(&self, env: &EnvironmentSpec) -> Result<bool> {
        Ok(env.noise_gap_statistic(self.s)? <= self.bound)
    }
}
