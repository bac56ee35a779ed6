//! Grid expansion: configuration axes to concrete run specifications.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Family, GridConfig, PolicyKind, RuleKind};
use crate::env::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::policies::{Alpha, EpsSchedule, PolicyConfig, Tau};
use crate::sim::RunSpec;
use crate::tuning::{alpha_from_rule, etc_sample_size, tunability_check, TuningRule};

/// Coordinates of one grid cell, as written to the CSV.
///
/// `delta` is the rule parameter of the cell; under the `alpha` rule it holds
/// the literal exploration mass. `sigma`, `gap` and `arms` describe the
/// instance: the largest sd, the smallest positive gap and the arm count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellCoords {
    pub policy: PolicyKind,
    pub tau: Option<Tau>,
    pub rule: Option<RuleKind>,
    pub delta: Option<f64>,
    pub sigma: f64,
    pub gap: f64,
    pub arms: usize,
    pub horizon: u64,
    pub repetitions: u64,
}

impl CellCoords {
    /// Stable textual form hashed into ids and seeds.
    pub fn canonical(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        format!(
            "policy={};tau={};rule={};delta={};sigma={:?};gap={:?};arms={};horizon={};repetitions={}",
            self.policy.tag(),
            opt(self.tau.map(|t| t.to_string())),
            opt(self.rule.map(|r| r.tag().to_string())),
            opt(self.delta.map(|d| format!("{d:?}"))),
            self.sigma,
            self.gap,
            self.arms,
            self.horizon,
            self.repetitions,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: String,
    pub coords: CellCoords,
    pub spec: RunSpec,
}

impl Cell {
    /// Digest of everything that determines the cell's output.
    pub fn config_hash(&self) -> String {
        let body = serde_json::to_string(&self.spec).expect("run specs serialize");
        hex(&Sha256::digest(format!("v{}|{body}", super::output::SCHEMA_VERSION).as_bytes()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub coords: CellCoords,
    pub diagnostic: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Expansion {
    pub cells: Vec<Cell>,
    pub skipped: Vec<Skipped>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Per-cell seed: the first 8 bytes of `SHA-256(master_seed | coordinates)`.
pub fn cell_seed(master_seed: u64, coords: &CellCoords) -> u64 {
    let digest = Sha256::digest(format!("{master_seed}|{}", coords.canonical()).as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Short file-system id of a cell.
pub fn cell_id(coords: &CellCoords) -> String {
    hex(&Sha256::digest(coords.canonical().as_bytes())[..8])
}

/// The instances spanned by the configuration.
pub fn environments(config: &GridConfig) -> Result<Vec<EnvironmentSpec>> {
    if let Some(means) = &config.means {
        let sds = config.sds.clone().unwrap_or_else(|| vec![1.0; means.len()]);
        return Ok(vec![EnvironmentSpec::gaussian(means, &sds).map_err(|e| Error::config("means", e.to_string()))?]);
    }
    if let Some(probs) = &config.probs {
        return Ok(vec![EnvironmentSpec::bernoulli(probs).map_err(|e| Error::config("probs", e.to_string()))?]);
    }
    let mut envs = Vec::new();
    for k in config.arms.values() {
        match config.family {
            Family::Gaussian => {
                for sigma in config.sigma.values() {
                    for gap in config.gap.values() {
                        envs.push(EnvironmentSpec::gaussian_grid(k, sigma, gap)?);
                    }
                }
            }
            Family::Bernoulli => {
                for gap in config.gap.values() {
                    envs.push(EnvironmentSpec::bernoulli_grid(k, gap)?);
                }
            }
        }
    }
    Ok(envs)
}

/// The tuning rule a UCB-tau cell resolves to, with class parameters read off `env`.
pub fn tuning_rule(rule: RuleKind, env: &EnvironmentSpec, tau: Tau, delta: f64) -> Result<Option<TuningRule>> {
    let gamma = || env.noise_gap_statistic(1.0);
    Ok(Some(match rule {
        RuleKind::ExplicitBeta => TuningRule::ExplicitBeta { delta },
        RuleKind::Phi => TuningRule::Phi { sigma: env.max_sigma(), delta },
        RuleKind::Intersection => TuningRule::Intersection { sigma: env.max_sigma(), gamma: gamma()? },
        RuleKind::Psi => TuningRule::Psi { gamma: gamma()?, delta },
        RuleKind::Minimax => {
            let s = match tau {
                Tau::Finite(t) if (0.5..1.0).contains(&t) => 1.0 - 1.0 / (2.0 * t),
                // out of range; prior_class reports the incompatibility
                _ => 1.0,
            };
            TuningRule::Minimax { gamma: env.noise_gap_statistic(s)? }
        }
        RuleKind::Alpha => return Ok(None),
    }))
}

/// Why a (rule, tau) pairing is skipped, if it is. Mirrors [`tunability_check`].
fn incompatibility(rule: &TuningRule, tau: Tau) -> Option<String> {
    match rule.prior_class(tau) {
        Err(e) => Some(e.to_string()),
        Ok(None) => None,
        Ok(Some(class)) => {
            let check = tunability_check(tau, &class);
            (!check.tunable).then_some(check.diagnostic)
        }
    }
}

enum Planned {
    Run(PolicyConfig),
    Skip(String),
}

/// Cartesian product of the configuration axes. Incompatible tuning
/// pairings are skipped with the tunability diagnostic.
pub fn expand_grid(config: &GridConfig) -> Result<Expansion> {
    config.validate()?;
    let envs = environments(config)?;
    let mut out = Expansion::default();
    let mut seen = HashSet::new();

    for horizon in config.horizon.values() {
        for repetitions in config.repetitions.values() {
            for env in &envs {
                for policy in config.policies.values() {
                    for (tau, rule, delta, plan) in plan_policy(config, env, policy, horizon)? {
                        let coords = CellCoords {
                            policy,
                            tau,
                            rule,
                            delta,
                            sigma: env.max_sigma(),
                            gap: env.min_gap(),
                            arms: env.k(),
                            horizon,
                            repetitions,
                        };
                        let id = cell_id(&coords);
                        if !seen.insert(id.clone()) {
                            log::warn!("duplicate grid cell {} ignored", coords.canonical());
                            continue;
                        }
                        match plan {
                            Planned::Skip(diagnostic) => {
                                log::info!("skipping {}: {diagnostic}", coords.canonical());
                                out.skipped.push(Skipped { coords, diagnostic });
                            }
                            Planned::Run(policy_config) => {
                                let seed = cell_seed(config.master_seed, &coords);
                                let spec = RunSpec::new(env.clone(), policy_config, horizon, repetitions, seed)
                                    .with_checkpoints(config.checkpoints_for(horizon));
                                spec.validate()?;
                                out.cells.push(Cell { id, coords, spec });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

type PlanRow = (Option<Tau>, Option<RuleKind>, Option<f64>, Planned);

fn plan_policy(config: &GridConfig, env: &EnvironmentSpec, policy: PolicyKind, horizon: u64) -> Result<Vec<PlanRow>> {
    let mut rows = Vec::new();
    match policy {
        PolicyKind::UcbTau => {
            for tau in config.tau.values() {
                for rule in config.rule.values() {
                    let params = match rule {
                        RuleKind::Alpha => config.alphas(),
                        r if r.uses_delta() => config.deltas(),
                        _ => vec![f64::NAN],
                    };
                    for p in params {
                        let delta = (!p.is_nan()).then_some(p);
                        let plan = match tuning_rule(rule, env, tau, p)? {
                            None => Planned::Run(PolicyConfig::UcbTau {
                                tau,
                                alpha: Alpha::Scalar(p),
                                tie_break: config.tie_break,
                            }),
                            Some(r) => match incompatibility(&r, tau) {
                                Some(diag) => Planned::Skip(diag),
                                None => Planned::Run(PolicyConfig::UcbTau {
                                    tau,
                                    alpha: Alpha::PerArm(alpha_from_rule(&r, env, tau)?),
                                    tie_break: config.tie_break,
                                }),
                            },
                        };
                        rows.push((Some(tau), Some(rule), delta, plan));
                    }
                }
            }
        }
        PolicyKind::UcbInf => {
            for delta in config.deltas() {
                let plan = Planned::Run(PolicyConfig::UcbInf { delta, sigma_star: None, tie_break: config.tie_break });
                rows.push((Some(Tau::Infinite), None, Some(delta), plan));
            }
        }
        PolicyKind::Etc => {
            let m = match config.etc_m {
                Some(m) => m,
                None => etc_sample_size(env.max_sigma(), env.min_gap(), horizon)?,
            };
            rows.push((None, None, None, Planned::Run(PolicyConfig::Etc { m })));
        }
        PolicyKind::Greedy => rows.push((None, None, None, Planned::Run(PolicyConfig::Greedy))),
        PolicyKind::EpsGreedy => {
            let schedule = match config.epsilon_c {
                Some(c) => EpsSchedule::Annealed { c },
                None => EpsSchedule::Fixed { epsilon: config.epsilon },
            };
            rows.push((None, None, None, Planned::Run(PolicyConfig::EpsGreedy { schedule })));
        }
        PolicyKind::Thompson => rows.push((None, None, None, Planned::Run(PolicyConfig::thompson_for(env)?))),
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expand(doc: &str) -> Expansion {
        expand_grid(&GridConfig::from_toml_str(doc).unwrap()).unwrap()
    }

    #[test]
    fn product_of_axis_sizes() {
        let e = expand("arms = 2\nsigma = 1.0\ntau = [0.5, 1]\npolicies = \"ucb_tau\"");
        assert_eq!(e.cells.len(), 2);
        assert!(e.skipped.is_empty());
    }

    #[test]
    fn incompatible_rule_is_skipped() {
        let e = expand("tau = 1\nrule = \"phi\"");
        assert!(e.cells.is_empty());
        assert_eq!(e.skipped.len(), 1);
        let class = crate::tuning::PriorClass::Single(crate::env::ClassSpec::phi(1.0).unwrap());
        assert_eq!(e.skipped[0].diagnostic, tunability_check(Tau::Finite(1.0), &class).diagnostic);
    }

    #[test]
    fn nine_deltas_by_six_taus_is_54_cells() {
        let e = expand("delta_preset = \"narrow\"\ntau = [0.3333333333333333, 0.5, 1, 2, 4, 32]");
        assert_eq!(e.cells.len(), 54);
        assert!(e.skipped.is_empty());
    }

    #[test]
    fn unused_axes_collapse() {
        let e = expand(
            "delta = [0.5, 1.0, 2.0]\ntau = [0.5, 2]\npolicies = [\"greedy\", \"thompson\", \"etc\", \"ucb_inf\"]",
        );
        // greedy, thompson, etc: one each; ucb_inf: one per delta
        assert_eq!(e.cells.len(), 3 + 3);
    }

    #[test]
    fn rules_resolve_to_masses() {
        let e = expand(
            "arms = 3\nsigma = 2.0\ngap = 0.5\ntau = [0.5, 0.75, 1, \"inf\"]\n\
             rule = [\"phi\", \"intersection\", \"psi\", \"minimax\", \"alpha\"]\nalpha = 3.0\ndelta = 0.1",
        );
        let alpha = |tau: Tau, rule: RuleKind| {
            e.cells.iter().find(|c| c.coords.tau == Some(tau) && c.coords.rule == Some(rule)).map(|c| {
                match &c.spec.policy {
                    PolicyConfig::UcbTau { alpha: Alpha::PerArm(v), .. } => v[0],
                    PolicyConfig::UcbTau { alpha: Alpha::Scalar(a), .. } => *a,
                    other => panic!("{other:?}"),
                }
            })
        };
        let half = Tau::Finite(0.5);
        assert_eq!(alpha(half, RuleKind::Phi), Some(2.1 * 4.0));
        // gamma = sigma / gap = 4
        assert_eq!(alpha(Tau::Finite(1.0), RuleKind::Intersection), Some(2.0 * (4.0 + 16.0)));
        assert_eq!(alpha(Tau::Infinite, RuleKind::Psi), Some(2.1 * 16.0));
        // s = 1/3 at tau = 3/4: gamma = 2 / 0.5^(1/3)
        let g = 2.0 / 0.5f64.powf(1.0 / 3.0);
        assert!((alpha(Tau::Finite(0.75), RuleKind::Minimax).unwrap() - 2.0 * g * g).abs() < 1e-12);
        assert_eq!(alpha(Tau::Infinite, RuleKind::Alpha), Some(3.0));
        assert_eq!(alpha(Tau::Finite(1.0), RuleKind::Phi), None);
        assert_eq!(alpha(Tau::Finite(1.0), RuleKind::Minimax), None);
        // 4 taus x 5 rules = 20 pairings; phi: only 1/2, psi: only inf,
        // intersection: 0.75 and 1, minimax: 1/2 and 0.75, alpha: all 4
        assert_eq!(e.cells.len(), 1 + 1 + 2 + 2 + 4);
        assert_eq!(e.skipped.len(), 20 - e.cells.len());
    }

    #[test]
    fn seeds_depend_on_master_seed_and_coordinates() {
        let a = expand("tau = [0.5, 2]");
        let b = expand("tau = [0.5, 2]\nmaster_seed = 7");
        assert_ne!(a.cells[0].spec.master_seed, a.cells[1].spec.master_seed);
        assert_ne!(a.cells[0].spec.master_seed, b.cells[0].spec.master_seed);
        assert_eq!(a.cells[0].id, b.cells[0].id);
        assert_eq!(a, expand("tau = [0.5, 2]"));
    }

    #[test]
    fn explicit_instance_replaces_axes() {
        let e = expand("means = [1.0, 0.0]\nsds = [0.0, 1.0]\narms = [2, 5]\npolicies = \"greedy\"");
        assert_eq!(e.cells.len(), 1);
        assert_eq!(e.cells[0].coords.arms, 2);
        assert_eq!(e.cells[0].coords.sigma, 1.0);
        let b = expand("family = \"bernoulli\"\narms = 3\ngap = 0.2\npolicies = \"thompson\"");
        assert_eq!(b.cells[0].coords.sigma, 0.5);
        assert_eq!(b.cells[0].spec.env.means(), &[0.6, 0.4, 0.4]);
    }

    #[test]
    fn etc_size_comes_from_the_instance() {
        let e = expand("arms = 2\nhorizon = 400\npolicies = \"etc\"");
        assert_eq!(e.cells[0].spec.policy, PolicyConfig::Etc { m: 19 });
    }
}
