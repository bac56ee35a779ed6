//! Exploration-mass thresholds and tuning rules.
//!
//! `beta_tau` is the threshold the exploration mass of UCB-tau must exceed for
//! logarithmic regret. A [`TuningRule`] maps prior knowledge (an environment
//! class) to concrete per-arm masses; [`tunability_check`] decides which
//! rule/exponent pairings are admissible.

use serde::{Deserialize, Serialize};

use crate::env::{ClassSpec, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::policies::Tau;

/// `2 (1/(2 tau))^(1/tau) sigma*^2 / gap^(2 - 1/tau)`, with the limit
/// `2 sigma*^2 / gap^2` at `tau = inf`.
pub fn beta_tau(sigma_star: f64, gap: f64, tau: Tau) -> Result<f64> {
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(Error::domain("beta_tau", format!("gap must be positive, got {gap}")));
    }
    if !(sigma_star >= 0.0 && sigma_star.is_finite()) {
        return Err(Error::domain("beta_tau", format!("sigma* = {sigma_star}")));
    }
    let var = sigma_star * sigma_star;
    Ok(match tau {
        Tau::Infinite => 2.0 * var / (gap * gap),
        Tau::Finite(t) => {
            let inv = 1.0 / t;
            2.0 * (0.5 * inv).powf(inv) * var / gap.powf(2.0 - inv)
        }
    })
}

/// Explore-then-commit sample size per arm,
/// `max(1, ceil(4 sigma^2 / gap^2 * ln(sigma^2 T / (4 gap^2))))`.
pub fn etc_sample_size(sigma: f64, gap: f64, horizon: u64) -> Result<u64> {
    if !(gap > 0.0) || !(sigma >= 0.0) || horizon == 0 {
        return Err(Error::domain(
            "etc_sample_size",
            format!("sigma = {sigma}, gap = {gap}, T = {horizon}"),
        ));
    }
    let ratio = sigma * sigma / (gap * gap);
    let arg = ratio * horizon as f64 / 4.0;
    if arg <= 1.0 {
        return Ok(1);
    }
    Ok((4.0 * ratio * arg.ln()).ceil().max(1.0) as u64)
}

/// Prior knowledge about the instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PriorClass {
    /// `Phi(sigma)` (`s = 0`) or `Psi^s(gamma)`.
    Single(ClassSpec),
    /// `Phi(sigma) ∩ Psi(gamma)`.
    Intersection { sigma: f64, gamma: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tunability {
    pub tunable: bool,
    pub diagnostic: String,
}

const S_TOL: f64 = 1e-12;

/// Whether UCB-tau with exponent `tau` admits a logarithmic-regret tuning for `class`.
pub fn tunability_check(tau: Tau, class: &PriorClass) -> Tunability {
    let verdict = |tunable: bool, diagnostic: String| Tunability { tunable, diagnostic };
    let t = tau.value();
    if t < 0.5 {
        return verdict(false, format!("tau = {t} is below 1/2"));
    }
    match *class {
        PriorClass::Intersection { .. } => match tau {
            Tau::Finite(t) if t > 0.5 => {
                verdict(true, format!("tau = {t} in (1/2, inf) is tunable for Phi ∩ Psi"))
            }
            _ => verdict(
                false,
                format!("the Phi ∩ Psi pairing needs 1/2 < tau < inf, got tau = {tau}"),
            ),
        },
        PriorClass::Single(c) => {
            if tau == Tau::Finite(0.5) && c.s == 0.0 {
                return verdict(true, "tau = 1/2 is tunable for Phi(sigma)".into());
            }
            if tau == Tau::Infinite && c.s == 1.0 {
                return verdict(true, "tau = inf is tunable for Psi(gamma)".into());
            }
            if let Tau::Finite(t) = tau {
                let paired = 1.0 - 1.0 / (2.0 * t);
                if t < 1.0 && (c.s - paired).abs() <= S_TOL {
                    return verdict(
                        true,
                        format!("tau = {t} pairs with Psi^s for s = 1 - 1/(2 tau) = {paired}"),
                    );
                }
            }
            let expected = match tau {
                Tau::Infinite => "s = 1".to_string(),
                Tau::Finite(t) if t == 0.5 => "s = 0".to_string(),
                Tau::Finite(t) if t < 1.0 => format!("s = {}", 1.0 - 1.0 / (2.0 * t)),
                Tau::Finite(_) => "an intersection class Phi ∩ Psi".to_string(),
            };
            verdict(
                false,
                format!("tau = {tau} is not tunable for the class with s = {}; needs {expected}", c.s),
            )
        }
    }
}

/// A mapping from prior knowledge to exploration masses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TuningRule {
    /// `alpha = (2 + delta) sigma^2`, for `tau = 1/2`.
    Phi { sigma: f64, delta: f64 },
    /// `alpha = 2 (sigma^2 + gamma^2)`, for `1/2 < tau < inf`.
    Intersection { sigma: f64, gamma: f64 },
    /// `alpha = (2 + delta) gamma^2`, for `tau = inf`.
    Psi { gamma: f64, delta: f64 },
    /// `alpha = 2 gamma^2`, for `1/2 <= tau < 1` on `Psi^(1 - 1/(2 tau))(gamma)`.
    Minimax { gamma: f64 },
    /// `alpha_a = delta * beta_a(tau)` from the true instance gaps (oracle knowledge).
    ExplicitBeta { delta: f64 },
}

impl TuningRule {
    pub fn tag(&self) -> &'static str {
        match self {
            TuningRule::Phi { .. } => "phi",
            TuningRule::Intersection { .. } => "intersection",
            TuningRule::Psi { .. } => "psi",
            TuningRule::Minimax { .. } => "minimax",
            TuningRule::ExplicitBeta { .. } => "explicit_beta",
        }
    }

    /// Uses the true gaps of the instance.
    pub fn is_oracle(&self) -> bool {
        matches!(self, TuningRule::ExplicitBeta { .. })
    }

    /// The prior class this rule is built for. `None` for oracle tuning.
    pub fn prior_class(&self, tau: Tau) -> Result<Option<PriorClass>> {
        Ok(match *self {
            TuningRule::Phi { sigma, .. } => Some(PriorClass::Single(ClassSpec::phi(sigma)?)),
            TuningRule::Intersection { sigma, gamma } => {
                Some(PriorClass::Intersection { sigma, gamma })
            }
            TuningRule::Psi { gamma, .. } => Some(PriorClass::Single(ClassSpec::psi(gamma)?)),
            TuningRule::Minimax { gamma } => {
                let s = match tau {
                    Tau::Finite(t) if (0.5..1.0).contains(&t) => 1.0 - 1.0 / (2.0 * t),
                    _ => {
                        return Err(Error::Incompatible(format!(
                            "minimax rule needs 1/2 <= tau < 1, got tau = {tau}"
                        )))
                    }
                };
                Some(PriorClass::Single(ClassSpec::new(s, gamma)?))
            }
            TuningRule::ExplicitBeta { .. } => None,
        })
    }

    fn validate(&self) -> Result<()> {
        let (ok, what) = match *self {
            TuningRule::Phi { sigma, delta } => (sigma >= 0.0 && delta > 0.0, "sigma >= 0, delta > 0"),
            TuningRule::Intersection { sigma, gamma } => (sigma >= 0.0 && gamma >= 0.0, "sigma, gamma >= 0"),
            TuningRule::Psi { gamma, delta } => (gamma >= 0.0 && delta > 0.0, "gamma >= 0, delta > 0"),
            TuningRule::Minimax { gamma } => (gamma >= 0.0, "gamma >= 0"),
            TuningRule::ExplicitBeta { delta } => (delta > 0.0, "delta > 0"),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPolicy(format!("{} rule requires {what}: {self:?}", self.tag())))
        }
    }
}

/// Per-arm exploration masses prescribed by `rule` for exponent `tau` on `env`.
///
/// Oracle tuning uses `beta_a(tau)` with the true gaps; the optimal arm, whose
/// own gap is zero, uses the smallest positive gap of the instance.
pub fn alpha_from_rule(rule: &TuningRule, env: &EnvironmentSpec, tau: Tau) -> Result<Vec<f64>> {
    rule.validate()?;
    if let Some(class) = rule.prior_class(tau)? {
        let check = tunability_check(tau, &class);
        if !check.tunable {
            return Err(Error::Incompatible(format!("{} rule: {}", rule.tag(), check.diagnostic)));
        }
    }
    let k = env.k();
    Ok(match *rule {
        TuningRule::Phi { sigma, delta } => vec![(2.0 + delta) * sigma * sigma; k],
        TuningRule::Intersection { sigma, gamma } => vec![2.0 * (sigma * sigma + gamma * gamma); k],
        TuningRule::Psi { gamma, delta } => vec![(2.0 + delta) * gamma * gamma; k],
        TuningRule::Minimax { gamma } => vec![2.0 * gamma * gamma; k],
        TuningRule::ExplicitBeta { delta } => {
            if tau.value() <= 0.0 {
                return Err(Error::InvalidPolicy(format!("tau = {tau} must be positive")));
            }
            let sigma_star = env.sigma_star();
            let surrogate = env.min_gap();
            env.gaps()
                .iter()
                .map(|&g| {
                    let gap = if g > 0.0 { g } else { surrogate };
                    beta_tau(sigma_star, gap, tau).map(|b| delta * b)
                })
                .collect::<Result<_>>()?
        }
    })
}
