//! Closed-form LCPA for interference-free channels.
//!
//! With orthogonal channels the worst-case problem becomes a common error
//! level `mu` that every user must reach. User `k` reaches `mu` with
//!
//! ```text
//! p_k(mu) = [ s_k * (exp(D_k ln2 / (B T) * ((mu / (rho_k a_k))^(-1/b_k) - A_k)) - 1) ]+
//! ```
//!
//! with `s_k = noise / G[k][k]`. Each `p_k` is nonincreasing in `mu`, so the
//! level that spends exactly the budget is found by bisection.

use std::f64::consts::LN_2;

use crate::channel::SystemConfig;
use crate::error_model::LearningTask;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorLevelSolution {
    pub mu_star: f64,
    pub powers: Vec<f64>,
    pub bisection_iterations: usize,
}

/// Power that brings user `k`'s weighted modeled error down to `mu`,
/// given its own-channel gain `g_kk`.
pub fn power_at_level(task: &LearningTask, g_kk: f64, config: &SystemConfig, mu: f64) -> Result<f64> {
    if !(task.a > 0.0 && task.b > 0.0) {
        return Err(Error::Domain(format!("error level undefined for a = {}, b = {}", task.a, task.b)));
    }
    if !(mu > 0.0) || !(g_kk > 0.0) {
        return Err(Error::Domain(format!("need mu > 0 and g_kk > 0, got mu = {mu}, g_kk = {g_kk}")));
    }
    Ok(power_at_level_unchecked(task, g_kk, config, mu))
}

fn power_at_level_unchecked(task: &LearningTask, g_kk: f64, config: &SystemConfig, mu: f64) -> f64 {
    let needed_samples = (mu / (task.rho * task.a)).powf(-1.0 / task.b);
    let exponent =
        task.bits_per_sample as f64 * LN_2 / config.bandwidth_time() * (needed_samples - task.initial_samples);
    let inverse_gain = config.noise_power_w / g_kk;
    (inverse_gain * exponent.exp_m1()).max(0.0)
}

pub const DEFAULT_EPS: f64 = 1e-9;
const MAX_BISECTION: usize = 200;

/// Finds the error level whose powers spend the budget (to `eps` relative)
/// for diagonal gains `g_diag`.
pub fn solve_asymptotic(
    g_diag: &[f64],
    config: &SystemConfig,
    tasks: &[LearningTask],
    eps: f64,
) -> Result<ErrorLevelSolution> {
    if g_diag.len() != tasks.len() || tasks.is_empty() {
        return Err(Error::InvalidConfig(format!("{} gains for {} tasks", g_diag.len(), tasks.len())));
    }
    if !(config.total_power_w > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidConfig("budget and eps must be positive".into()));
    }
    for (k, (task, &g)) in tasks.iter().zip(g_diag).enumerate() {
        if !(task.a > 0.0 && task.b > 0.0) {
            return Err(Error::Domain(format!("user {k}: asymptotic allocation needs a > 0 and b > 0")));
        }
        if !(g > 0.0) {
            return Err(Error::DegenerateChannel { user: k });
        }
    }
    let budget = config.total_power_w;
    let spend = |mu: f64| -> Vec<f64> {
        tasks.iter().zip(g_diag).map(|(t, &g)| power_at_level_unchecked(t, g, config, mu)).collect()
    };
    let total = |mu: f64| spend(mu).iter().sum::<f64>();

    // At mu_hi every user already meets the level with the samples it holds.
    let mut hi = tasks.iter().map(|t| t.rho * t.a * t.initial_samples.max(1.0).powf(-t.b)).fold(0.0, f64::max);
    let mut lo = hi;
    let mut iterations = 0;
    while total(lo) < budget {
        hi = lo;
        lo *= 0.5;
        iterations += 1;
        if iterations > MAX_BISECTION || lo == 0.0 {
            return Err(Error::NonConvergence { what: "asymptotic bracket search", iterations });
        }
    }
    if total(hi) >= budget {
        // Only possible if hi == lo with exact spend.
        let powers = spend(hi);
        return Ok(ErrorLevelSolution { mu_star: hi, powers, bisection_iterations: iterations });
    }
    loop {
        // Geometric midpoint: mu spans orders of magnitude.
        let mid = (lo * hi).sqrt();
        let powers = spend(mid);
        let sum: f64 = powers.iter().sum();
        iterations += 1;
        if (sum - budget).abs() <= eps * budget {
            return Ok(ErrorLevelSolution { mu_star: mid, powers, bisection_iterations: iterations });
        }
        if iterations >= MAX_BISECTION || mid <= lo || mid >= hi {
            return Err(Error::NonConvergence { what: "asymptotic bisection", iterations });
        }
        if sum > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
