//! Closed-form theoretical quantities for overlay against simulation.
//!
//! Every evaluator is total: out-of-domain arguments return
//! [`Error::Domain`] instead of NaN. Logarithms are natural.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::env::{ArmModel, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::policies::Tau;
use crate::tuning::beta_tau;

/// Which asymptotic lower bound to evaluate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundForm {
    /// `sum_a gap_a / KL(P* || P_a)`.
    #[default]
    GapWeighted,
    /// `sum_a 1 / KL(P_a || P*)`, a pull-count style coefficient.
    PullCount,
}

/// The two printed forms of the pull-count bound. They differ by a
/// factor of two; both are exposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PullBoundForm {
    /// `alpha / (2 [(1/(2 tau) - eta) gap]^(1/tau)) ln T`
    Nta,
    /// `(1 - 2 tau eta)^(-1/tau) (alpha / beta) (2 sigma*^2 / gap^2) ln T`
    NtaRe,
}

impl PullBoundForm {
    pub fn tag(self) -> &'static str {
        match self {
            PullBoundForm::Nta => "thm1_nta",
            PullBoundForm::NtaRe => "thm1_nta_re",
        }
    }
}

/// An evaluated bound on a grid of horizons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
    pub values: Vec<(u64, f64)>,
}

impl BoundCurve {
    fn evaluate(
        name: impl Into<String>,
        parameters: BTreeMap<String, f64>,
        checkpoints: &[u64],
        mut f: impl FnMut(u64) -> Result<f64>,
    ) -> Result<Self> {
        let values = checkpoints
            .iter()
            .map(|&t| f(t).map(|v| (t, v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundCurve { name: name.into(), parameters, values })
    }

    /// Policy tag used when the curve is written next to simulation rows.
    pub fn policy_tag(&self) -> String {
        format!("bound:{}", self.name)
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn check_horizon(func: &'static str, horizon: f64) -> Result<f64> {
    if horizon >= 1.0 && horizon.is_finite() {
        Ok(horizon.ln())
    } else {
        Err(Error::domain(func, format!("horizon must be >= 1, got {horizon}")))
    }
}

/// `KL(N(m1, s1^2) || N(m2, s2^2))`; infinite when either law is degenerate
/// and the two differ.
pub fn gaussian_kl(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    if s1 == s2 && m1 == m2 {
        return 0.0;
    }
    if s1 == 0.0 || s2 == 0.0 {
        return f64::INFINITY;
    }
    let d = m1 - m2;
    (s2 / s1).ln() + (s1 * s1 + d * d) / (2.0 * s2 * s2) - 0.5
}

/// Bernoulli relative entropy `kl(p, q)` with `0 ln 0 = 0`.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    fn term(x: f64, y: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else if y == 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).ln()
        }
    }
    term(p, q) + term(1.0 - p, 1.0 - q)
}

fn arm_kl(p: &ArmModel, q: &ArmModel) -> Result<f64> {
    match (p, q) {
        (ArmModel::Gaussian { mean: m1, sd: s1 }, ArmModel::Gaussian { mean: m2, sd: s2 }) => {
            Ok(gaussian_kl(*m1, *s1, *m2, *s2))
        }
        (ArmModel::Bernoulli { p }, ArmModel::Bernoulli { p: q }) => Ok(bernoulli_kl(*p, *q)),
        _ => Err(Error::UnsupportedFamily(format!(
            "KL is available for Gaussian or Bernoulli pairs, got {:?} vs {:?}",
            p.family(),
            q.family()
        ))),
    }
}

/// Coefficient `c` of the asymptotic lower bound `c ln T`. Arms at infinite
/// divergence contribute nothing.
pub fn lai_robbins_coefficient(env: &EnvironmentSpec, form: LowerBoundForm) -> Result<f64> {
    let star = &env.arms()[env.optimal_arm()];
    let mut total = 0.0;
    for (arm, &gap) in env.arms().iter().zip(env.gaps()) {
        if gap <= 0.0 {
            continue;
        }
        let (kl, weight) = match form {
            LowerBoundForm::GapWeighted => (arm_kl(star, arm)?, gap),
            LowerBoundForm::PullCount => (arm_kl(arm, star)?, 1.0),
        };
        if kl.is_finite() {
            total += weight / kl;
        }
    }
    Ok(total)
}

pub fn lai_robbins_curve(env: &EnvironmentSpec, form: LowerBoundForm, checkpoints: &[u64]) -> Result<BoundCurve> {
    let c = lai_robbins_coefficient(env, form)?;
    let name = match form {
        LowerBoundForm::GapWeighted => "lai_robbins",
        LowerBoundForm::PullCount => "lai_robbins_pull",
    };
    BoundCurve::evaluate(name, params(&[("coefficient", c)]), checkpoints, |t| {
        Ok(c * check_horizon("lai_robbins_curve", t as f64)?)
    })
}

/// Leading term of the expected pull count of a sub-optimal arm under
/// UCB-tau. `sigma_star` enters the precondition `alpha > beta_a(tau)` and the
/// rewritten form.
pub fn thm1_pull_bound(
    alpha: f64,
    gap: f64,
    tau: Tau,
    eta: f64,
    horizon: f64,
    sigma_star: f64,
    form: PullBoundForm,
) -> Result<f64> {
    const F: &str = "thm1_pull_bound";
    let log_t = check_horizon(F, horizon)?;
    if tau.value() < 0.5 {
        return Err(Error::domain(F, format!("tau must be >= 1/2, got {tau}")));
    }
    if !(eta >= 0.0) {
        return Err(Error::domain(F, format!("eta must be >= 0, got {eta}")));
    }
    let two_tau_eta = match tau {
        Tau::Finite(t) => 2.0 * t * eta,
        Tau::Infinite if eta == 0.0 => 0.0,
        Tau::Infinite => f64::INFINITY,
    };
    if two_tau_eta >= 1.0 {
        return Err(Error::domain(F, format!("need 2 tau eta < 1, got {two_tau_eta}")));
    }
    let beta = beta_tau(sigma_star, gap, tau)?;
    if !(alpha > beta && alpha.is_finite()) {
        return Err(Error::domain(
            F,
            format!("alpha = {alpha} does not exceed beta = {beta}; the under-exploration bound applies"),
        ));
    }
    let inv = match tau {
        Tau::Finite(t) => 1.0 / t,
        Tau::Infinite => 0.0,
    };
    Ok(match form {
        PullBoundForm::Nta => {
            let half_inv = match tau {
                Tau::Finite(t) => 0.5 / t,
                Tau::Infinite => 0.0,
            };
            let base = (half_inv - eta) * gap;
            alpha / (2.0 * base.powf(inv)) * log_t
        }
        PullBoundForm::NtaRe => {
            let var = sigma_star * sigma_star;
            (1.0 - two_tau_eta).powf(-inv) * (alpha / beta) * (2.0 * var / (gap * gap)) * log_t
        }
    })
}

/// Regret-scale pull-count curve: `sum_a gap_a * pull_bound_a(T)`.
pub fn thm1_regret_curve(
    env: &EnvironmentSpec,
    alphas: &[f64],
    tau: Tau,
    eta: f64,
    form: PullBoundForm,
    checkpoints: &[u64],
) -> Result<BoundCurve> {
    if alphas.len() != env.k() {
        return Err(Error::domain(
            "thm1_regret_curve",
            format!("{} exploration masses for {} arms", alphas.len(), env.k()),
        ));
    }
    let sigma_star = env.sigma_star();
    let mut p = params(&[("tau", tau.value()), ("eta", eta)]);
    for (a, &alpha) in alphas.iter().enumerate() {
        p.insert(format!("alpha_{a}"), alpha);
    }
    BoundCurve::evaluate(form.tag(), p, checkpoints, |t| {
        let mut total = 0.0;
        for (a, &gap) in env.gaps().iter().enumerate() {
            if gap > 0.0 {
                total += gap * thm1_pull_bound(alphas[a], gap, tau, eta, t as f64, sigma_star, form)?;
            }
        }
        Ok(total)
    })
}

/// `(1 + 2 gamma^2) T^(1 - tau) (K ln T)^tau` for `tau` in `[1/2, 1)`.
pub fn thm2_minimax_bound(tau: f64, gamma: f64, k: usize, horizon: f64) -> Result<f64> {
    const F: &str = "thm2_minimax_bound";
    let log_t = check_horizon(F, horizon)?;
    if !(0.5..1.0).contains(&tau) {
        return Err(Error::domain(F, format!("tau must lie in [1/2, 1), got {tau}")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::domain(F, format!("gamma = {gamma}")));
    }
    if k == 0 {
        return Err(Error::domain(F, "K must be positive"));
    }
    Ok((1.0 + 2.0 * gamma * gamma) * horizon.powf(1.0 - tau) * (k as f64 * log_t).powf(tau))
}

pub fn thm2_curve(tau: f64, gamma: f64, k: usize, checkpoints: &[u64]) -> Result<BoundCurve> {
    BoundCurve::evaluate(
        "thm2_minimax",
        params(&[("tau", tau), ("gamma", gamma), ("arms", k as f64)]),
        checkpoints,
        |t| thm2_minimax_bound(tau, gamma, k, t as f64),
    )
}

/// Threshold data for the tail bound. When supplied, `u` must satisfy
/// `u >= alpha_a ln T / (gap - eps - eps2)^(1/tau)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailThreshold {
    pub alpha_a: f64,
    pub gap: f64,
    pub eps: f64,
    pub tau: f64,
}

/// Arguments of [`thm4_tail_bound`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBoundParams {
    pub u: f64,
    pub horizon: f64,
    pub eps2: f64,
    pub sigma_a: f64,
    pub sigma_star: f64,
    pub delta: f64,
    pub alpha_star: f64,
    /// `beta(eps - delta, k)`.
    pub beta: f64,
    pub threshold: Option<TailThreshold>,
}

/// `T exp(-u eps2^2 / (2 sigma_a^2)) + (2 sigma*^2 / delta^2) u^((beta - alpha*) / beta)`,
/// an upper bound on `P(N_a(T) >= u)`.
pub fn thm4_tail_bound(p: &TailBoundParams) -> Result<f64> {
    const F: &str = "thm4_tail_bound";
    let log_t = check_horizon(F, p.horizon)?;
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(F, format!("{name} must be positive, got {v}")))
        }
    };
    positive("u", p.u)?;
    positive("eps2", p.eps2)?;
    positive("delta", p.delta)?;
    positive("beta", p.beta)?;
    if !(p.sigma_a >= 0.0 && p.sigma_star >= 0.0) {
        return Err(Error::domain(F, format!("sigma_a = {}, sigma* = {}", p.sigma_a, p.sigma_star)));
    }
    if !(p.alpha_star > p.beta && p.alpha_star.is_finite()) {
        return Err(Error::domain(
            F,
            format!("need beta < alpha*, got beta = {}, alpha* = {}", p.beta, p.alpha_star),
        ));
    }
    if let Some(th) = p.threshold {
        let room = th.gap - th.eps - p.eps2;
        if !(room > 0.0) || !(th.tau > 0.0) {
            return Err(Error::domain(F, format!("gap - eps - eps2 = {room}, tau = {}", th.tau)));
        }
        let min_u = th.alpha_a * log_t / room.powf(1.0 / th.tau);
        if p.u < min_u {
            return Err(Error::domain(F, format!("u = {} is below the threshold {min_u}", p.u)));
        }
    }
    let first = if p.sigma_a == 0.0 {
        0.0
    } else {
        p.horizon * (-p.u * p.eps2 * p.eps2 / (2.0 * p.sigma_a * p.sigma_a)).exp()
    };
    let coef = 2.0 * p.sigma_star * p.sigma_star / (p.delta * p.delta);
    Ok(first + coef * p.u.powf((p.beta - p.alpha_star) / p.beta))
}

/// `(2 sigma*^2 / delta^2) (1 + T^(1 - alpha*/beta_a) ln T)`, valid when the
/// optimal arm is under-explored (`alpha* <= beta_a`).
pub fn thm5_underexploration_bound(
    horizon: f64,
    alpha_star: f64,
    beta_a: f64,
    sigma_star: f64,
    delta: f64,
) -> Result<f64> {
    const F: &str = "thm5_underexploration_bound";
    let log_t = check_horizon(F, horizon)?;
    if !(beta_a > 0.0 && beta_a.is_finite()) || !(alpha_star >= 0.0) {
        return Err(Error::domain(F, format!("alpha* = {alpha_star}, beta_a = {beta_a}")));
    }
    if alpha_star > beta_a {
        return Err(Error::domain(
            F,
            format!("alpha* = {alpha_star} exceeds beta_a = {beta_a}; the logarithmic bound applies"),
        ));
    }
    if !(delta > 0.0) || !(sigma_star >= 0.0) {
        return Err(Error::domain(F, format!("delta = {delta}, sigma* = {sigma_star}")));
    }
    let coef = 2.0 * sigma_star * sigma_star / (delta * delta);
    Ok(coef * (1.0 + horizon.powf(1.0 - alpha_star / beta_a) * log_t))
}

/// Regret-scale under-exploration curve summed over every sub-optimal arm
/// whose threshold the optimal arm's mass fails to exceed.
pub fn thm5_curve(
    env: &EnvironmentSpec,
    alpha_star: f64,
    tau: Tau,
    delta: f64,
    checkpoints: &[u64],
) -> Result<BoundCurve> {
    let sigma_star = env.sigma_star();
    let mut arms = Vec::new();
    for (a, &gap) in env.gaps().iter().enumerate() {
        if gap > 0.0 {
            let beta = beta_tau(sigma_star, gap, tau)?;
            if alpha_star <= beta {
                arms.push((a, gap, beta));
            }
        }
    }
    if arms.is_empty() {
        return Err(Error::domain(
            "thm5_curve",
            format!("alpha* = {alpha_star} exceeds every beta_a; no arm is under-explored"),
        ));
    }
    let p = params(&[("tau", tau.value()), ("alpha_star", alpha_star), ("delta", delta)]);
    BoundCurve::evaluate("thm5_underexploration", p, checkpoints, |t| {
        arms.iter().try_fold(0.0, |acc, &(_, gap, beta)| {
            Ok(acc + gap * thm5_underexploration_bound(t as f64, alpha_star, beta, sigma_star, delta)?)
        })
    })
}

/// `B(k) = k^k (1-k)^(1-k)` with `0^0 = 1`.
pub fn butterfly_constant(k: f64) -> f64 {
    k.powf(k) * (1.0 - k).powf(1.0 - k)
}

/// `beta(eps, k) = 2 B(k)^2 sigma*^2 / eps^(2 - 2k)`.
pub fn beta_eps_k(eps: f64, k: f64, sigma_star: f64) -> Result<f64> {
    if !(k > 0.0 && k < 1.0) || !(eps > 0.0 && eps.is_finite()) || !(sigma_star >= 0.0) {
        return Err(Error::domain("beta_eps_k", format!("eps = {eps}, k = {k}, sigma* = {sigma_star}")));
    }
    let b = butterfly_constant(k);
    Ok(2.0 * b * b * sigma_star * sigma_star / eps.powf(2.0 - 2.0 * k))
}

/// `sum_{n=1}^N n^(-s)`.
pub fn zeta_partial(n: u64, s: f64) -> f64 {
    (1..=n).map(|i| (i as f64).powf(-s)).sum()
}

/// Riemann zeta for real `s > 1` via Euler–Maclaurin summation.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0 && s.is_finite()) {
        return Err(Error::domain("zeta", format!("s must exceed 1, got {s}")));
    }
    const N: u64 = 20;
    // B_2j / (2j)!
    const COEF: [f64; 5] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
    ];
    let n = N as f64;
    let mut sum = zeta_partial(N - 1, s) + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // rising factorial s (s+1) ... (s + 2j - 2)
    let mut rising = s;
    for (j, c) in COEF.iter().enumerate() {
        let order = 2 * j as i32 + 1;
        sum += c * rising * n.powf(-s - order as f64);
        rising *= (s + order as f64) * (s + order as f64 + 1.0);
    }
    Ok(sum)
}

/// Grid resolution for [`validate_lemmas`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaGrid {
    /// Points on `[0, 10]` for each of `a` and `b`.
    pub ab_points: usize,
    /// Points on `[0, 1]` for `k`.
    pub k_points: usize,
    /// Largest `N` for the partial-sum bound.
    pub n_max: u64,
    /// Points on `[0, 1]` for the partial-sum exponent.
    pub s_points: usize,
    /// Points on `(1, 10]` for the full zeta bound.
    pub zeta_points: usize,
}

impl Default for LemmaGrid {
    fn default() -> Self {
        LemmaGrid { ab_points: 101, k_points: 101, n_max: 10_000, s_points: 101, zeta_points: 900 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub name: String,
    pub evaluations: u64,
    pub min_slack: f64,
    /// Where the minimum slack was attained.
    pub argmin: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn min_slack(&self) -> f64 {
        self.checks.iter().map(|c| c.min_slack).fold(f64::INFINITY, f64::min)
    }

    pub fn all_hold(&self, tolerance: f64) -> bool {
        self.checks.iter().all(|c| c.min_slack >= -tolerance)
    }
}

struct Tracker {
    evaluations: u64,
    min_slack: f64,
    argmin: String,
}

impl Tracker {
    fn new() -> Self {
        Tracker { evaluations: 0, min_slack: f64::INFINITY, argmin: String::new() }
    }

    fn record(&mut self, slack: f64, at: impl FnOnce() -> String) {
        self.evaluations += 1;
        if slack < self.min_slack || slack.is_nan() {
            self.min_slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
            self.argmin = at();
        }
    }

    fn finish(self, name: &str) -> LemmaCheck {
        LemmaCheck { name: name.into(), evaluations: self.evaluations, min_slack: self.min_slack, argmin: self.argmin }
    }
}

fn linspace(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let steps = points.max(2) - 1;
    (0..=steps).map(move |i| if i == steps { hi } else { lo + (hi - lo) * i as f64 / steps as f64 })
}

/// Slack of `a + b >= a^k b^(1-k) / B(k)`.
pub fn butterfly_slack(a: f64, b: f64, k: f64) -> f64 {
    a + b - a.powf(k) * b.powf(1.0 - k) / butterfly_constant(k)
}

/// Evaluate the three auxiliary inequalities on dense grids. Violations are
/// reported through negative slack, never as errors.
pub fn validate_lemmas(grid: &LemmaGrid) -> LemmaReport {
    let mut butterfly = Tracker::new();
    for a in linspace(0.0, 10.0, grid.ab_points) {
        for b in linspace(0.0, 10.0, grid.ab_points) {
            for k in linspace(0.0, 1.0, grid.k_points) {
                butterfly.record(butterfly_slack(a, b, k), || format!("a={a}, b={b}, k={k}"));
            }
        }
    }

    let mut partial = Tracker::new();
    for s in linspace(0.0, 1.0, grid.s_points) {
        let mut acc = 0.0;
        for n in 1..=grid.n_max {
            let nf = n as f64;
            acc += nf.powf(-s);
            let bound = 1.0 + nf.powf(1.0 - s) * nf.ln();
            partial.record(bound - acc, || format!("N={n}, s={s}"));
        }
    }

    let mut full = Tracker::new();
    let m = grid.zeta_points.max(1);
    for j in 1..=m {
        let s = 1.0 + 9.0 * j as f64 / m as f64;
        let slack = match zeta(s) {
            Ok(z) => s / (s - 1.0) - z,
            Err(_) => f64::NAN,
        };
        full.record(slack, || format!("s={s}"));
    }

    LemmaReport {
        checks: vec![
            butterfly.finish("butterfly"),
            partial.finish("zeta_partial"),
            full.finish("zeta"),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    fn tau(t: f64) -> Tau {
        Tau::new(t).unwrap()
    }

    #[test]
    fn lai_robbins_gaussian_examples() {
        let two = EnvironmentSpec::gaussian_grid(2, 1.0, 1.0).unwrap();
        assert_relative_eq!(lai_robbins_coefficient(&two, LowerBoundForm::GapWeighted).unwrap(), 2.0);
        let ten = EnvironmentSpec::gaussian_grid(10, 1.0, 1.0).unwrap();
        assert_relative_eq!(lai_robbins_coefficient(&ten, LowerBoundForm::GapWeighted).unwrap(), 18.0);
        // equal variances make both directions agree: 9 * 2 / 1
        assert_relative_eq!(lai_robbins_coefficient(&ten, LowerBoundForm::PullCount).unwrap(), 18.0);
    }

    #[test]
    fn lai_robbins_bernoulli_example() {
        let env = EnvironmentSpec::bernoulli(&[0.75, 0.25]).unwrap();
        let kl = 0.75 * 3f64.ln() + 0.25 * (1.0 / 3.0f64).ln();
        assert_relative_eq!(kl, 0.549_306_144_334_054_9, epsilon = 1e-12);
        let c = lai_robbins_coefficient(&env, LowerBoundForm::GapWeighted).unwrap();
        assert_relative_eq!(c, 0.5 / kl, epsilon = 1e-12);
        assert!((c - 0.910_239).abs() < 1e-6);
    }

    #[test]
    fn lai_robbins_directions_differ_with_unequal_variances() {
        let env = EnvironmentSpec::gaussian(&[1.0, 0.0], &[1.0, 2.0]).unwrap();
        let gw = lai_robbins_coefficient(&env, LowerBoundForm::GapWeighted).unwrap();
        let pc = lai_robbins_coefficient(&env, LowerBoundForm::PullCount).unwrap();
        // KL(N(1,1)||N(0,4)) = ln 2 + 2/8 - 1/2 ; KL(N(0,4)||N(1,1)) = -ln 2 + 5/2 - 1/2
        assert_relative_eq!(gw, 1.0 / (2f64.ln() - 0.25), epsilon = 1e-12);
        assert_relative_eq!(pc, 1.0 / (2.0 - 2f64.ln()), epsilon = 1e-12);
    }

    #[test]
    fn lai_robbins_degenerate_and_mixed() {
        let env = EnvironmentSpec::gaussian(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(lai_robbins_coefficient(&env, LowerBoundForm::GapWeighted).unwrap(), 0.0);
        let mixed = EnvironmentSpec::new(vec![ArmModel::bernoulli(0.9), ArmModel::gaussian(0.0, 1.0)]).unwrap();
        assert!(matches!(
            lai_robbins_coefficient(&mixed, LowerBoundForm::GapWeighted),
            Err(Error::UnsupportedFamily(_))
        ));
    }

    #[test]
    fn lai_robbins_curve_scales_log() {
        let env = EnvironmentSpec::gaussian_grid(10, 1.0, 1.0).unwrap();
        let curve = lai_robbins_curve(&env, LowerBoundForm::GapWeighted, &[1, 10_000]).unwrap();
        assert_eq!(curve.policy_tag(), "bound:lai_robbins");
        assert_eq!(curve.values[0], (1, 0.0));
        assert!((curve.values[1].1 - 165.786_126_7).abs() < 1e-6);
    }

    #[test]
    fn bernoulli_kl_conventions() {
        assert_eq!(bernoulli_kl(0.0, 0.5), 2f64.ln());
        assert_eq!(bernoulli_kl(0.3, 0.3), 0.0);
        assert!(bernoulli_kl(0.5, 0.0).is_infinite());
    }

    #[test]
    fn thm1_examples() {
        // sigma* below 1 keeps alpha strictly above beta; the leading term
        // itself does not depend on sigma*.
        let v = thm1_pull_bound(2.0, 1.0, tau(0.5), 0.0, E, 0.9, PullBoundForm::Nta).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        let v = thm1_pull_bound(1.0, 1.0, tau(1.0), 0.0, E * E, 0.9, PullBoundForm::Nta).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn thm1_preconditions() {
        let f = |alpha, t, eta, s| thm1_pull_bound(alpha, 1.0, tau(t), eta, 100.0, s, PullBoundForm::Nta);
        assert!(f(2.0, 0.5, 0.0, 1.0).is_err(), "alpha == beta");
        assert!(f(2.5, 0.5, 1.0, 1.0).is_err(), "2 tau eta == 1");
        assert!(f(2.5, 0.4, 0.0, 1.0).is_err(), "tau below 1/2");
        assert!(f(2.5, 0.5, 0.99, 1.0).unwrap() > 100.0 * f(2.5, 0.5, 0.0, 1.0).unwrap());
    }

    #[test]
    fn thm1_forms_near_half() {
        // alpha just above beta = 2 sigma^2, eta -> 0
        let sigma: f64 = 1.3;
        let gap = 0.7;
        let alpha = 2.0 * sigma * sigma * (1.0 + 1e-9);
        let nta = thm1_pull_bound(alpha, gap, tau(0.5), 0.0, E, sigma, PullBoundForm::Nta).unwrap();
        let re = thm1_pull_bound(alpha, gap, tau(0.5), 0.0, E, sigma, PullBoundForm::NtaRe).unwrap();
        let lr = sigma * sigma / (gap * gap);
        assert_relative_eq!(nta, lr, max_relative = 1e-8);
        assert_relative_eq!(re, 2.0 * lr, max_relative = 1e-8);
    }

    #[test]
    fn thm1_infinite_tau() {
        let nta = thm1_pull_bound(3.0, 1.0, Tau::Infinite, 0.0, E, 1.0, PullBoundForm::Nta).unwrap();
        assert_relative_eq!(nta, 1.5);
        assert!(thm1_pull_bound(3.0, 1.0, Tau::Infinite, 0.1, E, 1.0, PullBoundForm::Nta).is_err());
    }

    #[test]
    fn thm2_examples() {
        assert_eq!(thm2_minimax_bound(0.5, 1.0, 2, 1.0).unwrap(), 0.0);
        let v = thm2_minimax_bound(0.5, 1.0, 2, E).unwrap();
        assert!((v - 3.0 * E.sqrt() * 2f64.sqrt()).abs() < 1e-12);
        assert!((v - 6.99493).abs() < 1e-4);
        assert!(thm2_minimax_bound(1.0, 1.0, 2, E).is_err());
        assert!(thm2_minimax_bound(0.49, 1.0, 2, E).is_err());
    }

    #[test]
    fn thm2_decreasing_in_tau_when_horizon_dominates() {
        let (k, t) = (5, 1e4);
        assert!(t > k as f64 * f64::ln(t));
        let vals: Vec<f64> = (0..50).map(|i| thm2_minimax_bound(0.5 + i as f64 * 0.01, 1.0, k, t).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    fn tail(u: f64) -> TailBoundParams {
        TailBoundParams {
            u,
            horizon: 100.0,
            eps2: 1.0,
            sigma_a: 1.0,
            sigma_star: 1.0,
            delta: 0.5,
            alpha_star: 2.0,
            beta: 1.0,
            threshold: None,
        }
    }

    #[test]
    fn thm4_example_and_decay() {
        let v = thm4_tail_bound(&tail(50.0)).unwrap();
        assert_relative_eq!(v, 100.0 * (-25f64).exp() + 8.0 / 50.0, epsilon = 1e-15);
        assert!((v - 0.16).abs() < 1e-8);
        let grid: Vec<f64> = (1..200).map(|i| thm4_tail_bound(&tail(i as f64 * 5.0)).unwrap()).collect();
        assert!(grid.windows(2).all(|w| w[1] <= w[0]));
        assert!(thm4_tail_bound(&tail(1e12)).unwrap() < 1e-10);
    }

    #[test]
    fn thm4_domain() {
        let mut p = tail(50.0);
        p.beta = 2.0;
        assert!(thm4_tail_bound(&p).is_err());
        let mut p = tail(50.0);
        p.threshold = Some(TailThreshold { alpha_a: 2.0, gap: 3.0, eps: 0.5, tau: 0.5 });
        // 2 ln 100 / 1.5^2 ~ 4.09
        assert!(thm4_tail_bound(&p).is_ok());
        p.u = 4.0;
        assert!(thm4_tail_bound(&p).is_err());
        p.threshold = Some(TailThreshold { alpha_a: 2.0, gap: 1.0, eps: 0.5, tau: 0.5 });
        assert!(thm4_tail_bound(&p).is_err());
    }

    #[test]
    fn thm5_examples() {
        let coef = 2.0 / 0.25;
        assert_relative_eq!(thm5_underexploration_bound(E, 1.5, 1.5, 1.0, 0.5).unwrap(), 2.0 * coef, epsilon = 1e-12);
        let v = thm5_underexploration_bound(100.0, 0.5, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(v, 2.0 * (1.0 + 10.0 * 100f64.ln()), epsilon = 1e-12);
        assert!((v - 94.1034).abs() < 1e-4);
        let zero = thm5_underexploration_bound(100.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(zero, 2.0 * (1.0 + 100.0 * 100f64.ln()), epsilon = 1e-12);
        assert!(thm5_underexploration_bound(100.0, 1.1, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn thm5_curve_requires_underexplored_arm() {
        let env = EnvironmentSpec::gaussian_grid(3, 1.0, 1.0).unwrap();
        assert!(thm5_curve(&env, 5.0, tau(2.0), 1.0, &[10]).is_err());
        let beta = beta_tau(1.0, 1.0, tau(2.0)).unwrap();
        let c = thm5_curve(&env, beta / 2.0, tau(2.0), 1.0, &[100]).unwrap();
        let one = thm5_underexploration_bound(100.0, beta / 2.0, beta, 1.0, 1.0).unwrap();
        assert_relative_eq!(c.values[0].1, 2.0 * one, epsilon = 1e-12);
    }

    #[test]
    fn beta_eps_k_examples() {
        assert_relative_eq!(butterfly_constant(0.5), 0.5);
        assert_relative_eq!(beta_eps_k(1.0, 0.5, 1.0).unwrap(), 0.5);
        assert_eq!(beta_eps_k(1.0, 0.3, 0.0).unwrap(), 0.0);
        assert!(beta_eps_k(1.0, 1.0, 1.0).is_err());
        assert!(beta_eps_k(0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn beta_eps_k_matches_beta_tau_on_grid() {
        for &t in &[0.55, 0.75, 1.0, 1.5, 2.0, 4.0, 32.0] {
            for &gap in &[0.1, 0.5, 1.0, 3.0] {
                for &s in &[0.2, 1.0, 2.5] {
                    let k = 1.0 / (2.0 * t);
                    let eps = gap * (1.0 - k);
                    let lhs = beta_eps_k(eps, k, s).unwrap();
                    let rhs = beta_tau(s, gap, tau(t)).unwrap();
                    assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn butterfly_points() {
        assert!(butterfly_slack(1.0, 1.0, 0.5).abs() < 1e-15);
        for &b in &[0.0, 0.3, 7.0] {
            assert!((butterfly_slack(2.0, b, 0.0) - 2.0).abs() < 1e-15);
            assert_eq!(butterfly_slack(0.0, b, 0.0), 0.0);
        }
    }

    #[test]
    fn zeta_known_values() {
        assert!((zeta_partial(10, 0.5) - 5.020_997_899_292_666).abs() < 1e-12);
        assert!(zeta_partial(10, 0.5) <= 1.0 + 10f64.sqrt() * 10f64.ln());
        assert_relative_eq!(zeta(2.0).unwrap(), PI * PI / 6.0, epsilon = 1e-13);
        assert_relative_eq!(zeta(4.0).unwrap(), PI.powi(4) / 90.0, epsilon = 1e-13);
        assert_relative_eq!(zeta(3.0).unwrap(), 1.202_056_903_159_594_2, epsilon = 1e-13);
        assert!(zeta(1.0).is_err());
    }

    #[test]
    fn zeta_matches_bracketed_partial_sum() {
        // sum_{n<=N} + integral tail brackets zeta(s) within N^-s
        let n = 200_000u64;
        for &s in &[1.3, 1.7, 2.5, 6.0] {
            let head = zeta_partial(n, s);
            let nf = n as f64;
            let lo = head + (nf + 1.0).powf(1.0 - s) / (s - 1.0);
            let hi = head + nf.powf(1.0 - s) / (s - 1.0);
            let z = zeta(s).unwrap();
            assert!(z >= lo - 1e-9 && z <= hi + 1e-9, "s={s}: {lo} <= {z} <= {hi}");
        }
    }

    #[test]
    fn lemmas_hold_on_small_grid() {
        let grid = LemmaGrid { ab_points: 21, k_points: 21, n_max: 500, s_points: 11, zeta_points: 90 };
        let report = validate_lemmas(&grid);
        assert_eq!(report.checks.len(), 3);
        assert!(report.all_hold(1e-12), "{report:?}");
        assert_eq!(report.checks[0].evaluations, 21 * 21 * 21);
        // N = 1 makes the partial-sum bound tight
        assert_eq!(report.checks[1].min_slack, 0.0);
    }

    proptest! {
        #[test]
        fn butterfly_holds(a in 0.0..50.0f64, b in 0.0..50.0f64, k in 0.0..=1.0f64) {
            prop_assert!(butterfly_slack(a, b, k) >= -1e-12 * (1.0 + a + b));
        }

        #[test]
        fn thm1_forms_differ_by_two(
            t in 0.5..20.0f64, gap in 0.05..5.0f64, sigma in 0.1..3.0f64,
            excess in 1.001..5.0f64, eta_frac in 0.0..0.95f64, horizon in 1.0..1e6f64,
        ) {
            let eta = eta_frac / (2.0 * t);
            let alpha = excess * beta_tau(sigma, gap, tau(t)).unwrap();
            let a = thm1_pull_bound(alpha, gap, tau(t), eta, horizon, sigma, PullBoundForm::Nta).unwrap();
            let b = thm1_pull_bound(alpha, gap, tau(t), eta, horizon, sigma, PullBoundForm::NtaRe).unwrap();
            prop_assert!(a.is_finite() && a >= 0.0);
            prop_assert!((b - 2.0 * a).abs() <= 1e-9 * b.max(1.0));
        }

        #[test]
        fn evaluators_nonnegative(
            t in 0.5..0.999f64, gamma in 0.0..5.0f64, k in 1usize..1000, horizon in 1.0..1e7f64,
        ) {
            let v = thm2_minimax_bound(t, gamma, k, horizon).unwrap();
            prop_assert!(v.is_finite() && v >= 0.0);
            let w = thm5_underexploration_bound(horizon, t, 1.0, gamma, 0.5).unwrap();
            prop_assert!(w.is_finite() && w >= 0.0);
        }
    }
}
