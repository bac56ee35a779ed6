//! Experiment configuration documents.
//!
//! A configuration is a flat TOML table. Every axis key takes a scalar or a
//! list; the grid is the Cartesian product of the lists. See the README for
//! the full grammar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::{Tau, TieBreak};
use crate::sim::ExecutionMode;

/// A scalar or a list of values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Axis<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Axis::One(v) => vec![v.clone()],
            Axis::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    Gaussian,
    Bernoulli,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    UcbTau,
    UcbInf,
    Etc,
    Greedy,
    EpsGreedy,
    Thompson,
}

impl PolicyKind {
    pub fn tag(self) -> &'static str {
        match self {
            PolicyKind::UcbTau => "ucb_tau",
            PolicyKind::UcbInf => "ucb_inf",
            PolicyKind::Etc => "etc",
            PolicyKind::Greedy => "greedy",
            PolicyKind::EpsGreedy => "eps_greedy",
            PolicyKind::Thompson => "thompson",
        }
    }
}

/// How UCB-tau exploration masses are chosen. Class parameters (sigma, gamma)
/// are read off the instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// `delta * beta_a(tau)` from the true gaps.
    ExplicitBeta,
    /// `(2 + delta) sigma^2`.
    Phi,
    /// `2 (sigma^2 + gamma^2)`.
    Intersection,
    /// `(2 + delta) gamma^2`.
    Psi,
    /// `2 gamma^2` with `gamma` measured at `s = 1 - 1/(2 tau)`.
    Minimax,
    /// A literal exploration mass from the `alpha` axis.
    Alpha,
}

impl RuleKind {
    pub fn tag(self) -> &'static str {
        match self {
            RuleKind::ExplicitBeta => "explicit_beta",
            RuleKind::Phi => "phi",
            RuleKind::Intersection => "intersection",
            RuleKind::Psi => "psi",
            RuleKind::Minimax => "minimax",
            RuleKind::Alpha => "alpha",
        }
    }

    /// Whether the rule reads the `delta` axis.
    pub fn uses_delta(self) -> bool {
        matches!(self, RuleKind::ExplicitBeta | RuleKind::Phi | RuleKind::Psi)
    }
}

/// Named delta ranges: 9 log-uniform points on `[e^-2, e^2]` or `[e^-3, e^3]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPreset {
    Narrow,
    Wide,
}

impl DeltaPreset {
    pub fn values(self) -> Vec<f64> {
        let half_width = match self {
            DeltaPreset::Narrow => 2.0,
            DeltaPreset::Wide => 3.0,
        };
        (0..9).map(|i| (-half_width + half_width * i as f64 / 4.0).exp()).collect()
    }
}

fn default_arms() -> Axis<usize> {
    Axis::One(10)
}
fn default_one() -> Axis<f64> {
    Axis::One(1.0)
}
fn default_tau() -> Axis<Tau> {
    Axis::One(Tau::Finite(0.5))
}
fn default_policies() -> Axis<PolicyKind> {
    Axis::One(PolicyKind::UcbTau)
}
fn default_rule() -> Axis<RuleKind> {
    Axis::One(RuleKind::ExplicitBeta)
}
fn default_horizon() -> Axis<u64> {
    Axis::One(10_000)
}
fn default_repetitions() -> Axis<u64> {
    Axis::One(512)
}
fn default_epsilon() -> f64 {
    0.1
}

/// A grid of experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub family: Family,
    #[serde(default = "default_arms")]
    pub arms: Axis<usize>,
    /// Reward sd of every Gaussian arm.
    #[serde(default = "default_one")]
    pub sigma: Axis<f64>,
    /// Gap between the optimal arm and every other arm.
    #[serde(default = "default_one")]
    pub gap: Axis<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Axis<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_preset: Option<DeltaPreset>,
    #[serde(default = "default_tau")]
    pub tau: Axis<Tau>,
    #[serde(default = "default_policies")]
    pub policies: Axis<PolicyKind>,
    #[serde(default = "default_rule")]
    pub rule: Axis<RuleKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Axis<f64>>,
    #[serde(default = "default_horizon")]
    pub horizon: Axis<u64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: Axis<u64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub mode: ExecutionMode,
    /// Explicit checkpoint rounds; the horizon is always appended.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default)]
    pub tie_break: TieBreak,
    /// Fixed exploration rate of epsilon-greedy.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// When set, epsilon-greedy anneals as `min(1, c K / t)` instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_c: Option<f64>,
    /// Explore-then-commit samples per arm; derived from the instance when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etc_m: Option<u64>,
    /// Explicit Gaussian means; replaces the arms/sigma/gap axes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sds: Option<Vec<f64>>,
    /// Explicit Bernoulli success probabilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for GridConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty document uses defaults")
    }
}

impl GridConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: GridConfig = toml::from_str(text).map_err(|e| {
            let key = e
                .span()
                .map(|span| {
                    let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "document".into());
            Error::config(key, e.message().trim().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn deltas(&self) -> Vec<f64> {
        match (&self.delta, self.delta_preset) {
            (Some(axis), _) => axis.values(),
            (None, Some(preset)) => preset.values(),
            (None, None) => vec![1.0],
        }
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.alpha.as_ref().map(Axis::values).unwrap_or_default()
    }

    /// Whether the instance is given explicitly rather than by the arms/sigma/gap axes.
    pub fn explicit_env(&self) -> bool {
        self.means.is_some() || self.probs.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        fn nonempty<T: Clone>(key: &str, axis: &Axis<T>) -> Result<()> {
            if axis.values().is_empty() {
                Err(Error::config(key, "axis must not be empty"))
            } else {
                Ok(())
            }
        }
        fn all(key: &str, values: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
            match values.iter().find(|v| !ok(**v)) {
                Some(bad) => Err(Error::config(key, format!("{what}, got {bad}"))),
                None => Ok(()),
            }
        }

        nonempty("arms", &self.arms)?;
        nonempty("sigma", &self.sigma)?;
        nonempty("gap", &self.gap)?;
        nonempty("tau", &self.tau)?;
        nonempty("policies", &self.policies)?;
        nonempty("rule", &self.rule)?;
        nonempty("horizon", &self.horizon)?;
        nonempty("repetitions", &self.repetitions)?;

        if self.delta.is_some() && self.delta_preset.is_some() {
            return Err(Error::config("delta_preset", "give either `delta` or `delta_preset`, not both"));
        }
        if let Some(axis) = &self.delta {
            nonempty("delta", axis)?;
        }
        all("delta", &self.deltas(), |d| d > 0.0 && d.is_finite(), "delta must be positive")?;
        if let Some(k) = self.arms.values().iter().find(|&&k| k < 2) {
            return Err(Error::config("arms", format!("need at least 2 arms, got {k}")));
        }
        all("sigma", &self.sigma.values(), |s| s >= 0.0 && s.is_finite(), "sigma must be >= 0")?;
        all("gap", &self.gap.values(), |g| g > 0.0 && g.is_finite(), "gap must be positive")?;
        if self.family == Family::Bernoulli && !self.explicit_env() {
            all("gap", &self.gap.values(), |g| g <= 1.0, "Bernoulli gaps must lie in (0, 1]")?;
        }
        if self.horizon.values().contains(&0) {
            return Err(Error::config("horizon", "horizon must be positive"));
        }
        if self.repetitions.values().contains(&0) {
            return Err(Error::config("repetitions", "repetitions must be positive"));
        }

        let rules = self.rule.values();
        match &self.alpha {
            Some(axis) => {
                nonempty("alpha", axis)?;
                all("alpha", &axis.values(), |a| a > 0.0 && a.is_finite(), "exploration mass must be positive")?;
            }
            None if rules.contains(&RuleKind::Alpha) => {
                return Err(Error::config("alpha", "rule `alpha` needs an `alpha` axis"));
            }
            None => {}
        }

        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("epsilon", format!("must lie in [0, 1], got {}", self.epsilon)));
        }
        if let Some(c) = self.epsilon_c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::config("epsilon_c", format!("must be positive, got {c}")));
            }
        }
        if self.etc_m == Some(0) {
            return Err(Error::config("etc_m", "must be at least 1"));
        }
        if let Some(cp) = &self.checkpoints {
            if cp.is_empty() || cp[0] == 0 || cp.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config("checkpoints", "must be strictly increasing positive rounds"));
            }
        }

        match (self.family, &self.means, &self.sds, &self.probs) {
            (_, None, None, None) => {}
            (Family::Gaussian, Some(m), sds, None) => {
                if let Some(s) = sds {
                    if s.len() != m.len() {
                        return Err(Error::config("sds", format!("{} sds for {} means", s.len(), m.len())));
                    }
                }
            }
            (Family::Gaussian, None, Some(_), None) => {
                return Err(Error::config("sds", "`sds` needs `means`"));
            }
            (Family::Bernoulli, None, None, Some(_)) => {}
            (Family::Gaussian, _, _, Some(_)) => {
                return Err(Error::config("probs", "`probs` needs family = \"bernoulli\""));
            }
            (Family::Bernoulli, _, _, _) => {
                return Err(Error::config("means", "Bernoulli instances take `probs`"));
            }
        }
        Ok(())
    }

    /// Replaces the checkpoint list (`--checkpoints`).
    pub fn with_checkpoints(mut self, checkpoints: Vec<u64>) -> Result<Self> {
        self.checkpoints = Some(checkpoints);
        self.validate()?;
        Ok(self)
    }

    pub fn checkpoints_for(&self, horizon: u64) -> Vec<u64> {
        match &self.checkpoints {
            None => crate::sim::geometric_checkpoints(horizon),
            Some(cp) => {
                let mut out: Vec<u64> = cp.iter().copied().filter(|&t| t < horizon).collect();
                out.push(horizon);
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_uses_desk_defaults() {
        let c = GridConfig::from_toml_str("").unwrap();
        assert_eq!(c.repetitions.values(), vec![512]);
        assert_eq!(c.horizon.values(), vec![10_000]);
        assert_eq!(c.arms.values(), vec![10]);
        assert_eq!(c.deltas(), vec![1.0]);
        assert_eq!(c.mode, ExecutionMode::Ordered);
    }

    #[test]
    fn scalars_and_lists() {
        let c = GridConfig::from_toml_str(
            r#"
            arms = [2, 5]
            sigma = 0.5
            tau = [0.5, 2, "inf"]
            policies = ["ucb_tau", "thompson"]
            rule = "alpha"
            alpha = [2.1]
            mode = "parallel"
            "#,
        )
        .unwrap();
        assert_eq!(c.arms.values(), vec![2, 5]);
        assert_eq!(c.sigma.values(), vec![0.5]);
        assert_eq!(c.tau.values(), vec![Tau::Finite(0.5), Tau::Finite(2.0), Tau::Infinite]);
        assert_eq!(c.policies.values(), vec![PolicyKind::UcbTau, PolicyKind::Thompson]);
        assert_eq!(c.mode, ExecutionMode::Parallel);
    }

    #[test]
    fn delta_presets() {
        let narrow = DeltaPreset::Narrow.values();
        assert_eq!(narrow.len(), 9);
        assert!((narrow[0] - (-2f64).exp()).abs() < 1e-15);
        assert!((narrow[4] - 1.0).abs() < 1e-15);
        assert!((narrow[8] - 2f64.exp()).abs() < 1e-12);
        let wide = DeltaPreset::Wide.values();
        assert!((wide[8] - 3f64.exp()).abs() < 1e-12);
        // log-uniform spacing
        for w in narrow.windows(2) {
            assert!((w[1].ln() - w[0].ln() - 0.5).abs() < 1e-12);
        }
        let c = GridConfig::from_toml_str("delta_preset = \"wide\"").unwrap();
        assert_eq!(c.deltas(), wide);
    }

    #[test]
    fn rejects_bad_values_with_key() {
        let cases = [
            ("alpha = [0.0]\nrule = \"alpha\"", "alpha"),
            ("alpha = -1.0\nrule = \"alpha\"", "alpha"),
            ("rule = \"alpha\"", "alpha"),
            ("arms = 1", "arms"),
            ("gap = 0.0", "gap"),
            ("delta = [1.0]\ndelta_preset = \"narrow\"", "delta_preset"),
            ("horizon = 0", "horizon"),
            ("epsilon = 2.0", "epsilon"),
            ("checkpoints = [4, 2]", "checkpoints"),
            ("means = [1.0, 0.0]\nsds = [1.0]", "sds"),
            ("family = \"bernoulli\"\nmeans = [1.0, 0.0]", "means"),
        ];
        for (doc, key) in cases {
            match GridConfig::from_toml_str(doc) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{doc}"),
                other => panic!("{doc}: {other:?}"),
            }
        }
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = GridConfig::from_toml_str("arms = 2\nbogus_key = 3\n").unwrap_err();
        match err {
            Error::Config { key, msg } => {
                assert_eq!(key, "line 2");
                assert!(msg.contains("bogus_key"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        let err = GridConfig::from_toml_str("tau = [0.5, -1]").unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn checkpoint_override_keeps_horizon() {
        let c = GridConfig::default().with_checkpoints(vec![10, 100, 5000]).unwrap();
        assert_eq!(c.checkpoints_for(1000), vec![10, 100, 1000]);
        assert_eq!(GridConfig::default().checkpoints_for(5), vec![1, 2, 4, 5]);
    }

    #[test]
    fn resolved_config_round_trips_through_json() {
        let c = GridConfig::from_toml_str("delta_preset = \"narrow\"\ntau = [0.5, \"inf\"]").unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: GridConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
