use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::PolicyState;

/// Reward model assumed by Thompson sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ThompsonFamily {
    /// Beta(1, 1) prior on each success probability.
    Bernoulli,
    /// Known noise level `sd`, unit-information N(0, sd^2) prior on each mean.
    Gaussian { sd: f64 },
}

impl ThompsonFamily {
    pub(crate) fn check_reward(&self, reward: f64) -> Result<()> {
        match self {
            ThompsonFamily::Bernoulli if reward != 0.0 && reward != 1.0 => {
                Err(Error::RewardSupport { family: "Bernoulli", reward })
            }
            _ => Ok(()),
        }
    }
}

/// One posterior draw per arm.
pub fn thompson_sample<R: Rng + ?Sized>(
    state: &PolicyState,
    family: ThompsonFamily,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(state.k());
    thompson_sample_into(state, family, rng, &mut out)?;
    Ok(out)
}

pub(crate) fn thompson_sample_into<R: Rng + ?Sized>(
    state: &PolicyState,
    family: ThompsonFamily,
    rng: &mut R,
    out: &mut Vec<f64>,
) -> Result<()> {
    out.clear();
    for (&n, &sum) in state.counts().iter().zip(state.sums()) {
        let draw = match family {
            ThompsonFamily::Bernoulli => {
                let n = n as f64;
                if sum.fract() != 0.0 || sum < 0.0 || sum > n {
                    return Err(Error::RewardSupport { family: "Bernoulli", reward: sum });
                }
                // Shape parameters are >= 1, so construction cannot fail.
                let beta = Beta::new(1.0 + sum, 1.0 + n - sum)
                    .map_err(|e| Error::domain("thompson_sample", e.to_string()))?;
                beta.sample(rng)
            }
            ThompsonFamily::Gaussian { sd } => {
                let precision = n as f64 + 1.0;
                let z: f64 = rng.sample(StandardNormal);
                sum / precision + sd / precision.sqrt() * z
            }
        };
        out.push(draw);
    }
    Ok(())
}
