//! Index functions of the optimistic policies.

use crate::error::{Error, Result};

use super::Tau;

/// UCB-tau index `mean + (alpha ln t / n)^tau`; `+inf` for an unpulled arm.
///
/// At `tau = inf` the bonus is `+inf` while `n < alpha ln t` and zero once the
/// arm holds at least `alpha ln t` samples.
pub fn ucb_tau_index(mean_hat: f64, n: u64, t: u64, alpha: f64, tau: Tau) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    ucb_tau_index_with_log(mean_hat, n, (t as f64).ln(), alpha, tau)
}

#[inline]
pub(crate) fn ucb_tau_index_with_log(mean_hat: f64, n: u64, ln_t: f64, alpha: f64, tau: Tau) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let mass = alpha * ln_t;
    let bonus = match tau {
        Tau::Infinite => {
            if (n as f64) < mass {
                f64::INFINITY
            } else {
                0.0
            }
        }
        Tau::Finite(t) if t == 0.5 => (mass / n as f64).sqrt(),
        Tau::Finite(t) => (mass / n as f64).powf(t),
    };
    mean_hat + bonus
}

/// Piecewise UCB-infinity index: the empirical mean once the arm holds at least
/// `(2 + delta) sigma*^2 ln t / gap^2` samples, `+inf` before.
pub fn ucb_inf_index(mean_hat: f64, n: u64, t: u64, sigma_star: f64, delta: f64, gap: f64) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::domain("ucb_inf_index", format!("gap must be positive, got {gap}")));
    }
    let coef = (2.0 + delta) * sigma_star * sigma_star / (gap * gap);
    Ok(ucb_tau_index(mean_hat, n, t, coef, Tau::Infinite))
}
