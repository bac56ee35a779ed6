//! Regret statistics: batch summaries, discounted regret, regret-at-risk and
//! a growth-rate diagnostic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quantile levels reported for every checkpoint.
pub const RAR_LEVELS: [f64; 3] = [0.5, 0.9, 0.95];

/// Streaming mean / variance (Welford), mergeable across workers.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation; zero for fewer than two observations.
    pub fn std(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.n - 1) as f64).sqrt()
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.std() / (self.n as f64).sqrt()
        }
    }
}

/// Aggregated pseudo-regret over the repetitions of one run.
///
/// Both the standard deviation of the pseudo-regret and the standard error of
/// its mean are kept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub repetitions: u64,
    pub checkpoints: Vec<u64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `quantiles[c][j]` is the regret-at-risk at level `RAR_LEVELS[j]`.
    pub quantiles: Vec<Vec<f64>>,
    /// Mean pull count of the worst arm at each checkpoint.
    pub worst_arm_pulls: Vec<f64>,
    /// Mean final pull count of every arm.
    pub mean_pulls: Vec<f64>,
    /// `regret_samples[c][r]`: pseudo-regret of repetition `r` at checkpoint `c`.
    pub regret_samples: Vec<Vec<f64>>,
    /// `worst_samples[c][r]`: worst-arm pull count of repetition `r` at checkpoint `c`.
    pub worst_samples: Vec<Vec<u64>>,
}

impl RegretSummary {
    /// Builds a summary from per-repetition samples, accumulating in repetition order.
    pub fn from_samples(
        checkpoints: Vec<u64>,
        regret_samples: Vec<Vec<f64>>,
        worst_samples: Vec<Vec<u64>>,
        mean_pulls: Vec<f64>,
    ) -> Result<Self> {
        let moments: Vec<Moments> = regret_samples
            .iter()
            .map(|col| {
                let mut m = Moments::default();
                col.iter().for_each(|&x| m.push(x));
                m
            })
            .collect();
        Self::assemble(checkpoints, moments, regret_samples, worst_samples, mean_pulls)
    }

    /// Builds a summary from pre-merged moments; quantiles still come from the samples.
    pub(crate) fn assemble(
        checkpoints: Vec<u64>,
        moments: Vec<Moments>,
        regret_samples: Vec<Vec<f64>>,
        worst_samples: Vec<Vec<u64>>,
        mean_pulls: Vec<f64>,
    ) -> Result<Self> {
        if checkpoints.is_empty()
            || regret_samples.len() != checkpoints.len()
            || worst_samples.len() != checkpoints.len()
            || moments.len() != checkpoints.len()
        {
            return Err(Error::EmptySample);
        }
        let repetitions = regret_samples[0].len() as u64;
        let quantiles = regret_samples
            .iter()
            .map(|col| RAR_LEVELS.iter().map(|&l| regret_at_risk(col, l)).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let worst_arm_pulls = worst_samples
            .iter()
            .map(|col| {
                let mut m = Moments::default();
                col.iter().for_each(|&x| m.push(x as f64));
                m.mean()
            })
            .collect();
        Ok(Self {
            repetitions,
            checkpoints,
            mean: moments.iter().map(Moments::mean).collect(),
            std: moments.iter().map(Moments::std).collect(),
            stderr: moments.iter().map(Moments::stderr).collect(),
            quantiles,
            worst_arm_pulls,
            mean_pulls,
            regret_samples,
            worst_samples,
        })
    }

    pub fn final_regrets(&self) -> &[f64] {
        self.regret_samples.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_mean(&self) -> f64 {
        *self.mean.last().unwrap_or(&0.0)
    }

    pub fn final_stderr(&self) -> f64 {
        *self.stderr.last().unwrap_or(&0.0)
    }
}

/// Discount rate of the lambda-regret.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscountSpec {
    lambda: f64,
}

impl DiscountSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Self { lambda })
        } else {
            Err(Error::domain("DiscountSpec", format!("lambda must be positive, got {lambda}")))
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// `sum_t exp(-lambda t) gap_t` over the realized rounds `t = 1..=len`.
pub fn discounted_regret_from_gaps(gaps: &[f64], lambda: f64) -> Result<f64> {
    let lambda = DiscountSpec::new(lambda)?.lambda();
    let decay = (-lambda).exp();
    let mut weight = 1.0;
    let mut total = 0.0;
    for &g in gaps {
        weight *= decay;
        total += weight * g;
    }
    Ok(total)
}

/// Lambda-regret assembled from the T-regrets `R_1..R_N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscountedEstimate {
    /// `(1 - e^-lambda) sum_{n <= N} e^(-n lambda) R_n`.
    pub partial_sum: f64,
    /// `e^(-(N+1) lambda) R_N`: the rest of the series when the regret stops
    /// growing after round N, as it does for a finished episode.
    pub frozen_tail: f64,
    /// Upper bound on everything beyond `partial_sum` when regret keeps
    /// accruing at no more than `max_gap` per round.
    pub truncation_bound: f64,
}

impl DiscountedEstimate {
    /// Lambda-regret of an episode that ends after round N.
    pub fn realized(&self) -> f64 {
        self.partial_sum + self.frozen_tail
    }
}

pub fn discounted_from_finite_regrets(
    regrets: &[f64],
    lambda: f64,
    max_gap: f64,
) -> Result<DiscountedEstimate> {
    let lambda = DiscountSpec::new(lambda)?.lambda();
    let decay = (-lambda).exp();
    let mut weight = 1.0;
    let mut sum = 0.0;
    for &r in regrets {
        weight *= decay;
        sum += weight * r;
    }
    let last = regrets.last().copied().unwrap_or(0.0);
    let n = regrets.len() as f64;
    let frozen_tail = weight * decay * last;
    Ok(DiscountedEstimate {
        partial_sum: -(-lambda).exp_m1() * sum,
        frozen_tail,
        truncation_bound: frozen_tail + max_gap.max(0.0) * (-lambda * n).exp() / lambda,
    })
}

/// Smallest sample value whose empirical CDF reaches `alpha`.
pub fn regret_at_risk(samples: &[f64], alpha: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("regret_at_risk", format!("alpha = {alpha} not in (0, 1)")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // first k with k / n >= alpha; the slack absorbs representation error in alpha * n
    let k = ((alpha * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[k.min(n) - 1])
}

/// Least-squares slope of `ln R_T` against `ln T` over the last decade of
/// checkpoints. Near zero for logarithmic growth, `a` for `R_T ~ T^a`.
pub fn consistency_probe(horizons: &[u64], regrets: &[f64]) -> Result<f64> {
    if horizons.len() != regrets.len() || horizons.len() < 3 {
        return Err(Error::domain(
            "consistency_probe",
            format!("need >= 3 matching points, got {} / {}", horizons.len(), regrets.len()),
        ));
    }
    let t_max = *horizons.iter().max().unwrap() as f64;
    let mut points: Vec<(f64, f64)> = horizons
        .iter()
        .zip(regrets)
        .filter(|(&t, _)| t as f64 >= t_max / 10.0)
        .map(|(&t, &r)| ((t as f64).ln(), r.max(f64::MIN_POSITIVE).ln()))
        .collect();
    if points.len() < 2 {
        points = horizons
            .iter()
            .zip(regrets)
            .rev()
            .take(2)
            .map(|(&t, &r)| ((t as f64).ln(), r.max(f64::MIN_POSITIVE).ln()))
            .collect();
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("consistency_probe", "checkpoints do not span a range"));
    }
    Ok(sxy / sxx)
}
