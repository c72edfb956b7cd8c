//! Throughput-oriented reference allocators.

use std::f64::consts::LN_2;

use crate::channel::{rate, GainMatrix, SystemConfig};
use crate::mm_solver::PowerAllocation;
use crate::simplex::{minimize, PowerSimplex, SubgradientOptions};
use crate::{Error, Result};

const FIXED_POINT_CAP: usize = 100_000;
const SUM_RATE_OUTER_CAP: usize = 100;

/// `P/K` to every user.
pub fn uniform(config: &SystemConfig) -> PowerAllocation {
    PowerAllocation {
        powers: PowerSimplex::new(config.total_power_w, None).uniform_point(config.num_users),
        objective: f64::NAN,
        iterations: 0,
        converged: true,
        history: Vec::new(),
    }
}

fn sum_rate(g: &GainMatrix, p: &[f64], noise: f64) -> f64 {
    (0..p.len()).map(|k| rate(g, p, noise, k)).sum()
}

fn min_rate(g: &GainMatrix, p: &[f64], noise: f64) -> f64 {
    (0..p.len()).map(|k| rate(g, p, noise, k)).fold(f64::INFINITY, f64::min)
}

fn check_gains(g: &GainMatrix, config: &SystemConfig) -> Result<()> {
    if g.num_users() != config.num_users {
        return Err(Error::InvalidConfig(format!("{} users in gains, {} in config", g.num_users(), config.num_users)));
    }
    if let Some(user) = g.diagonal().iter().position(|&d| !(d > 0.0)) {
        return Err(Error::DegenerateChannel { user });
    }
    Ok(())
}

/// Smallest power vector giving every user SINR `gamma`, by the monotone
/// iteration `p <- gamma * (F p + u)` from zero. `None` once the iterate
/// exceeds the budget, which means `gamma` is not achievable.
fn min_power_for_sinr(g: &GainMatrix, noise: f64, gamma: f64, budget: f64) -> Result<Option<Vec<f64>>> {
    let k = g.num_users();
    let mut p = vec![0.0; k];
    let mut next = vec![0.0; k];
    for _ in 0..FIXED_POINT_CAP {
        for (i, n) in next.iter_mut().enumerate() {
            *n = gamma * g.interference(&p, noise, i) / g.get(i, i);
        }
        let total: f64 = next.iter().sum();
        if total > budget {
            return Ok(None);
        }
        let delta = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut p, &mut next);
        if delta <= 1e-15 * total {
            return Ok(Some(p));
        }
    }
    Err(Error::NonConvergence { what: "SINR fixed point", iterations: FIXED_POINT_CAP })
}

/// Maximizes the minimum rate by bisection on a common SINR target.
///
/// `tol` is the relative width at which bisection on the target stops.
pub fn max_min_fairness(g: &GainMatrix, config: &SystemConfig, tol: f64) -> Result<PowerAllocation> {
    check_gains(g, config)?;
    let noise = config.noise_power_w;
    let budget = config.total_power_w;
    // No user can beat its interference-free SNR at full budget.
    let mut hi = g.diagonal().iter().map(|d| d * budget / noise).fold(f64::INFINITY, f64::min);
    let mut lo = 0.0;
    let mut best = vec![0.0; g.num_users()];
    let mut iterations = 0;
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        match min_power_for_sinr(g, noise, mid, budget)? {
            Some(p) => {
                lo = mid;
                best = p;
            }
            None => hi = mid,
        }
    }
    if lo == 0.0 {
        best = min_power_for_sinr(g, noise, tol * hi, budget)?
            .ok_or(Error::NonConvergence { what: "max-min bracket", iterations })?;
    }
    // Scaling up keeps SINRs balanced and raises them all.
    let total: f64 = best.iter().sum();
    let powers: Vec<f64> = best.iter().map(|v| v * budget / total).collect();
    let objective = min_rate(g, &powers, noise);
    Ok(PowerAllocation { powers, objective, iterations, converged: true, history: Vec::new() })
}

/// Maximizes the sum rate by successive convex approximation from the
/// uniform split. Each step keeps `log(signal + interference + noise)` and
/// linearizes `log(interference + noise)` at the current point, giving a
/// concave lower bound that is tight there.
pub fn sum_rate_max(g: &GainMatrix, config: &SystemConfig, tol: f64) -> Result<PowerAllocation> {
    check_gains(g, config)?;
    let noise = config.noise_power_w;
    let set = PowerSimplex::new(config.total_power_w, config.max_power_w);
    let k_users = g.num_users();
    let mut p = set.uniform_point(k_users);
    let mut objective = sum_rate(g, &p, noise);
    let mut history = vec![objective];
    let opts = SubgradientOptions { tol, ..SubgradientOptions::default() };
    let mut converged = false;
    let mut iterations = 0;
    while iterations < SUM_RATE_OUTER_CAP {
        iterations += 1;
        let anchor: Vec<f64> = (0..k_users).map(|k| g.interference(&p, noise, k)).collect();
        let oracle = |q: &[f64], grad: &mut [f64]| -> f64 {
            grad.iter_mut().for_each(|v| *v = 0.0);
            let mut value = 0.0;
            for k in 0..k_users {
                let interference = g.interference(q, noise, k);
                let total = interference + g.get(k, k) * q[k];
                value += (total.ln() - interference / anchor[k] - anchor[k].ln() + 1.0) / LN_2;
                for (l, gr) in grad.iter_mut().enumerate() {
                    let gkl = g.get(k, l);
                    let d = if l == k { gkl / total } else { gkl * (1.0 / total - 1.0 / anchor[k]) };
                    *gr -= d / LN_2;
                }
            }
            -value
        };
        let m = minimize(&p, &set, &opts, oracle)?;
        let next_objective = sum_rate(g, &m.point, noise);
        if next_objective <= objective {
            converged = true;
            break;
        }
        let gain = (next_objective - objective) / objective.abs().max(f64::MIN_POSITIVE);
        p = m.point;
        objective = next_objective;
        history.push(objective);
        if gain < tol {
            converged = true;
            break;
        }
    }
    Ok(PowerAllocation { powers: p, objective, iterations, converged, history })
}

/// Interference-free water-filling on the diagonal gains:
/// `p_k = [w - noise / G[k][k]]+` with the water level `w` spending the budget.
///
/// Off-diagonal gains are ignored on purpose.
pub fn water_filling(g_diag: &[f64], config: &SystemConfig) -> Result<PowerAllocation> {
    if let Some(user) = g_diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::DegenerateChannel { user });
    }
    let budget = config.total_power_w;
    let floors: Vec<f64> = g_diag.iter().map(|d| config.noise_power_w / d).collect();
    let spend = |w: f64| floors.iter().map(|f| (w - f).max(0.0)).sum::<f64>();
    let mut lo = floors.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = lo + budget;
    let mut iterations = 0;
    while iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if spend(mid) > budget {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    // Recompute the level exactly on the active set found by bisection.
    let mut active: Vec<usize> = (0..floors.len()).filter(|&k| floors[k] < hi).collect();
    active.sort_by(|&a, &b| floors[a].total_cmp(&floors[b]));
    let mut level = f64::NAN;
    while let Some(&last) = active.last() {
        level = (budget + active.iter().map(|&k| floors[k]).sum::<f64>()) / active.len() as f64;
        if floors[last] < level {
            break;
        }
        active.pop();
    }
    let powers: Vec<f64> = floors.iter().map(|f| (level - f).max(0.0)).collect();
    let objective = powers.iter().zip(g_diag).map(|(p, d)| (d * p / config.noise_power_w).ln_1p() / LN_2).sum();
    Ok(PowerAllocation { powers, objective, iterations, converged: true, history: Vec::new() })
}
