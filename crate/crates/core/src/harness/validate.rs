//! Built-in validation suite: lemma validators plus a fast battery of
//! simulator and formula invariants.

use serde::{Deserialize, Serialize};

use crate::bounds::{self, LemmaGrid, LemmaReport, PullBoundForm};
use crate::env::EnvironmentSpec;
use crate::policies::{ucb_tau_index, Alpha, EpsSchedule, PolicyConfig, Tau, ThompsonFamily, TieBreak};
use crate::sim::{run_batch, run_episode, ExecutionMode, RunSpec};
use crate::tuning::beta_tau;

/// Lemma slack below `-LEMMA_TOLERANCE` counts as a violation.
pub const LEMMA_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub lemmas: LemmaReport,
    pub invariants: Vec<InvariantCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.lemmas.all_hold(LEMMA_TOLERANCE) && self.invariants.iter().all(|c| c.passed)
    }
}

fn check(name: &str, outcome: Result<String, String>) -> InvariantCheck {
    let (passed, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    InvariantCheck { name: name.into(), passed, detail }
}

fn policies(env: &EnvironmentSpec) -> Vec<PolicyConfig> {
    vec![
        PolicyConfig::UcbTau { tau: Tau::Finite(0.5), alpha: Alpha::Scalar(2.1), tie_break: TieBreak::Random },
        PolicyConfig::UcbTau { tau: Tau::Finite(2.0), alpha: Alpha::Scalar(1.0), tie_break: TieBreak::Ordered },
        PolicyConfig::UcbInf { delta: 0.1, sigma_star: None, tie_break: TieBreak::Random },
        PolicyConfig::Etc { m: 5 },
        PolicyConfig::Greedy,
        PolicyConfig::EpsGreedy { schedule: EpsSchedule::Annealed { c: 1.0 } },
        PolicyConfig::Thompson { family: ThompsonFamily::Gaussian { sd: env.max_sigma() } },
    ]
}

fn episode_accounting() -> Result<String, String> {
    let env = EnvironmentSpec::gaussian(&[0.2, 1.0, 0.7, -0.4], &[1.0, 0.5, 2.0, 0.0]).map_err(|e| e.to_string())?;
    let horizon = 300;
    let mut episodes = 0;
    for policy in policies(&env) {
        let spec = RunSpec::new(env.clone(), policy.clone(), horizon, 4, 11);
        for rep in 0..4 {
            let traj = run_episode(&spec, rep).map_err(|e| e.to_string())?;
            let total: u64 = traj.pull_counts.iter().sum();
            if total != horizon {
                return Err(format!("{}: sum of pulls {total} != {horizon}", policy.tag()));
            }
            let weighted: f64 = env.gaps().iter().zip(&traj.pull_counts).map(|(g, &n)| g * n as f64).sum();
            if (weighted - traj.final_regret()).abs() > 1e-9 * weighted.max(1.0) {
                return Err(format!("{}: regret {} != sum gap N {weighted}", policy.tag(), traj.final_regret()));
            }
            if traj.pseudo_regret.windows(2).any(|w| w[1] < w[0]) {
                return Err(format!("{}: pseudo-regret decreased", policy.tag()));
            }
            episodes += 1;
        }
    }
    Ok(format!("{episodes} episodes: pulls sum to T, regret equals sum gap_a N_a, nondecreasing"))
}

fn ordered_reproducible() -> Result<String, String> {
    let env = EnvironmentSpec::gaussian_grid(5, 1.0, 0.5).map_err(|e| e.to_string())?;
    let policy = PolicyConfig::UcbTau { tau: Tau::Finite(2.0), alpha: Alpha::Scalar(1.5), tie_break: TieBreak::Random };
    let spec = RunSpec::new(env, policy, 500, 32, 99);
    let a = run_batch(&spec, ExecutionMode::Ordered).map_err(|e| e.to_string())?;
    let b = run_batch(&spec, ExecutionMode::Ordered).map_err(|e| e.to_string())?;
    let p = run_batch(&spec, ExecutionMode::Parallel).map_err(|e| e.to_string())?;
    let ja = serde_json::to_string(&a).map_err(|e| e.to_string())?;
    let jb = serde_json::to_string(&b).map_err(|e| e.to_string())?;
    if ja != jb {
        return Err("two ordered batches serialize differently".into());
    }
    for (x, y) in a.mean.iter().chain(&a.std).zip(p.mean.iter().chain(&p.std)) {
        if (x - y).abs() > 1e-6 * x.abs().max(1.0) {
            return Err(format!("parallel reduction drifted: {x} vs {y}"));
        }
    }
    Ok("ordered batches byte-identical; parallel within 1e-6 relative".into())
}

fn threshold_below_intersection_mass() -> Result<String, String> {
    let mut n = 0;
    for i in 1..=200 {
        let tau = 0.5 + 0.05 * i as f64;
        for &sigma in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            for &gap in &[0.05, 0.2, 0.5, 1.0, 2.0, 10.0] {
                let gamma = sigma / gap;
                let beta = beta_tau(sigma, gap, Tau::Finite(tau)).map_err(|e| e.to_string())?;
                let alpha = 2.0 * (sigma * sigma + gamma * gamma);
                if !(beta < alpha) {
                    return Err(format!("beta {beta} >= 2(sigma^2 + gamma^2) {alpha} at tau={tau}, sigma={sigma}, gap={gap}"));
                }
                n += 1;
            }
        }
    }
    Ok(format!("beta_a(tau) < 2(sigma^2 + gamma^2) at {n} grid points"))
}

fn beta_forms_agree() -> Result<String, String> {
    let mut n = 0;
    for &tau in &[0.55, 0.75, 1.0, 2.0, 4.0, 32.0] {
        for &gap in &[0.1, 1.0, 3.0] {
            for &sigma in &[0.3, 1.0, 2.0] {
                let k = 1.0 / (2.0 * tau);
                let a = bounds::beta_eps_k(gap * (1.0 - k), k, sigma).map_err(|e| e.to_string())?;
                let b = beta_tau(sigma, gap, Tau::Finite(tau)).map_err(|e| e.to_string())?;
                if (a - b).abs() > 1e-12 * b {
                    return Err(format!("beta(eps, k) = {a} vs beta_a(tau) = {b} at tau={tau}, gap={gap}"));
                }
                n += 1;
            }
        }
    }
    Ok(format!("beta(eps, k) equals beta_a(tau) at {n} points"))
}

fn pull_bound_forms() -> Result<String, String> {
    for &tau in &[0.5, 1.0, 2.0, 8.0] {
        let tau = Tau::Finite(tau);
        let beta = beta_tau(1.0, 0.5, tau).map_err(|e| e.to_string())?;
        let f = |form| bounds::thm1_pull_bound(1.5 * beta, 0.5, tau, 0.1 / tau.value(), 1e4, 1.0, form);
        let nta = f(PullBoundForm::Nta).map_err(|e| e.to_string())?;
        let re = f(PullBoundForm::NtaRe).map_err(|e| e.to_string())?;
        if (re - 2.0 * nta).abs() > 1e-9 * re {
            return Err(format!("forms at tau={tau}: {nta} and {re}"));
        }
    }
    Ok("rewritten pull-count form is twice the original".into())
}

fn unpulled_arm_index() -> Result<String, String> {
    for tau in [Tau::Finite(0.3), Tau::Finite(0.5), Tau::Finite(4.0), Tau::Infinite] {
        if ucb_tau_index(0.0, 0, 10, 1.0, tau) != f64::INFINITY {
            return Err(format!("unpulled index finite at tau={tau}"));
        }
        if ucb_tau_index(0.25, 3, 1, 1.0, tau) != 0.25 {
            return Err(format!("bonus nonzero at t=1, tau={tau}"));
        }
    }
    Ok("unpulled arms index +inf; no bonus at t = 1".into())
}

/// Runs the lemma validators on `grid` and the invariant battery.
pub fn run_validation(grid: &LemmaGrid) -> ValidationReport {
    let lemmas = bounds::validate_lemmas(grid);
    let invariants = vec![
        check("episode_accounting", episode_accounting()),
        check("ordered_reproducible", ordered_reproducible()),
        check("threshold_below_intersection_mass", threshold_below_intersection_mass()),
        check("beta_forms_agree", beta_forms_agree()),
        check("pull_bound_forms", pull_bound_forms()),
        check("unpulled_arm_index", unpulled_arm_index()),
    ];
    ValidationReport { lemmas, invariants }
}
