//! Majorization-minimization allocator for the worst-case modeled error.
//!
//! The objective `max_k rho_k * phi_k(p)` is minimized over the power
//! simplex, where `phi_k` composes the error model with the sample count
//! of user `k`. It is not convex in `p` because interference enters each
//! rate through `-log(interference)`. Every MM iteration linearizes that term
//! at the current iterate, which yields a convex upper bound that is tight
//! (in value and gradient) at the iterate. Minimizing the bound never
//! increases the true objective.

use std::f64::consts::LN_2;

use crate::channel::{rate, GainMatrix, SystemConfig};
use crate::error_model::LearningTask;
use crate::simplex::{minimize, PowerSimplex, SubgradientOptions};
use crate::{Error, Result};

/// Power split produced by any allocator, with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// Per-user transmit powers in watts.
    pub powers: Vec<f64>,
    /// Value of the criterion the producing scheme optimizes: the worst
    /// weighted modeled error for LCPA, the minimum or total rate
    /// (bits/s/Hz) for the rate baselines, NaN for the uniform split.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each outer iterate, starting with the initial point.
    /// Empty for closed-form schemes.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmOptions {
    pub max_iterations: usize,
    /// Stop once the relative objective decrease falls below this.
    pub mm_tol: f64,
    pub subproblem: SubgradientOptions,
}

impl Default for MmOptions {
    fn default() -> Self {
        Self { max_iterations: 50, mm_tol: 1e-6, subproblem: SubgradientOptions::default() }
    }
}

fn check_inputs(g: &GainMatrix, config: &SystemConfig, tasks: &[LearningTask], p: Option<&[f64]>) -> Result<()> {
    let k = g.num_users();
    if tasks.len() != k {
        return Err(Error::InvalidConfig(format!("{} tasks for {k} users", tasks.len())));
    }
    if let Some(p) = p {
        if p.len() != k || p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain(format!("power vector must have {k} nonnegative entries")));
        }
    }
    if !(config.noise_power_w > 0.0) {
        return Err(Error::InvalidConfig("noise power must be positive".into()));
    }
    Ok(())
}

/// Modeled (unweighted) error of user `k` at powers `p`:
/// `a_k * (B*T/D_k * R_k(p) + A_k)^-b_k`.
pub fn phi(g: &GainMatrix, config: &SystemConfig, tasks: &[LearningTask], p: &[f64], k: usize) -> Result<f64> {
    check_inputs(g, config, tasks, Some(p))?;
    phi_unchecked(g, config, &tasks[k], p, k)
}

fn phi_unchecked(g: &GainMatrix, config: &SystemConfig, task: &LearningTask, p: &[f64], k: usize) -> Result<f64> {
    let samples = config.bandwidth_time() / task.bits_per_sample as f64 * rate(g, p, config.noise_power_w, k)
        + task.initial_samples;
    if !(samples > 0.0) {
        return Err(Error::Domain(format!("user {k} has no samples (A = 0 and zero rate)")));
    }
    Ok(task.a * samples.powf(-task.b))
}

/// `max_k rho_k * phi_k(p)`.
pub fn lcpa_objective(g: &GainMatrix, config: &SystemConfig, tasks: &[LearningTask], p: &[f64]) -> Result<f64> {
    check_inputs(g, config, tasks, Some(p))?;
    let mut worst = f64::NEG_INFINITY;
    for (k, task) in tasks.iter().enumerate() {
        worst = worst.max(task.rho * phi_unchecked(g, config, task, p, k)?);
    }
    Ok(worst)
}

/// Expansion point of the surrogates plus the interference-plus-noise
/// level each user sees there.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateState {
    pub anchor: Vec<f64>,
    pub interference: Vec<f64>,
}

impl SurrogateState {
    pub fn new(g: &GainMatrix, config: &SystemConfig, anchor: &[f64]) -> Self {
        let interference = (0..g.num_users()).map(|k| g.interference(anchor, config.noise_power_w, k)).collect();
        Self { anchor: anchor.to_vec(), interference }
    }
}

/// Braced term of the surrogate: the sample count with `log(interference)`
/// replaced by its tangent at the anchor. Concave in `p`.
fn surrogate_samples(
    state: &SurrogateState,
    g: &GainMatrix,
    config: &SystemConfig,
    task: &LearningTask,
    p: &[f64],
    k: usize,
) -> f64 {
    let scale = config.bandwidth_time() / (task.bits_per_sample as f64 * LN_2);
    let interference = g.interference(p, config.noise_power_w, k);
    let total = interference + g.get(k, k) * p[k];
    let anchor_i = state.interference[k];
    scale * (total.ln() - interference / anchor_i - anchor_i.ln() + 1.0) + task.initial_samples
}

/// Gradient of [`surrogate_samples`] with respect to `p`.
fn surrogate_samples_gradient(
    state: &SurrogateState,
    g: &GainMatrix,
    config: &SystemConfig,
    task: &LearningTask,
    p: &[f64],
    k: usize,
    out: &mut [f64],
) {
    let scale = config.bandwidth_time() / (task.bits_per_sample as f64 * LN_2);
    let interference = g.interference(p, config.noise_power_w, k);
    let total = interference + g.get(k, k) * p[k];
    let anchor_i = state.interference[k];
    for (l, o) in out.iter_mut().enumerate() {
        let gkl = g.get(k, l);
        *o = if l == k { scale * gkl / total } else { scale * gkl * (1.0 / total - 1.0 / anchor_i) };
    }
}

/// Convex upper bound on `phi_k` that touches it at `state.anchor`.
///
/// Errors with [`Error::Domain`] where the braced sample term is not positive;
/// the bound is undefined there.
pub fn surrogate_phi(
    state: &SurrogateState,
    g: &GainMatrix,
    config: &SystemConfig,
    tasks: &[LearningTask],
    p: &[f64],
    k: usize,
) -> Result<f64> {
    check_inputs(g, config, tasks, Some(p))?;
    let task = &tasks[k];
    let u = surrogate_samples(state, g, config, task, p, k);
    if !(u > 0.0) {
        return Err(Error::Domain(format!("surrogate sample term of user {k} is {u}")));
    }
    Ok(task.a * u.powf(-task.b))
}

/// Gradient of [`surrogate_phi`] with respect to `p`.
pub fn surrogate_gradient(
    state: &SurrogateState,
    g: &GainMatrix,
    config: &SystemConfig,
    tasks: &[LearningTask],
    p: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    check_inputs(g, config, tasks, Some(p))?;
    let task = &tasks[k];
    let u = surrogate_samples(state, g, config, task, p, k);
    if !(u > 0.0) {
        return Err(Error::Domain(format!("surrogate sample term of user {k} is {u}")));
    }
    let mut grad = vec![0.0; p.len()];
    surrogate_samples_gradient(state, g, config, task, p, k, &mut grad);
    let factor = -task.a * task.b * u.powf(-task.b - 1.0);
    grad.iter_mut().for_each(|v| *v *= factor);
    Ok(grad)
}

/// Minimizes `max_k rho_k * surrogate_k(p | anchor)` over the power simplex.
pub fn solve_subproblem(
    state: &SurrogateState,
    g: &GainMatrix,
    config: &SystemConfig,
    tasks: &[LearningTask],
    tol: f64,
) -> Result<Vec<f64>> {
    let opts = SubgradientOptions { tol, ..SubgradientOptions::default() };
    solve_subproblem_with(state, g, config, tasks, &opts).map(|(p, _)| p)
}

/// Like [`solve_subproblem`] with full minimizer settings; also returns the
/// surrogate objective at the solution.
pub fn solve_subproblem_with(
    state: &SurrogateState,
    g: &GainMatrix,
    config: &SystemConfig,
    tasks: &[LearningTask],
    opts: &SubgradientOptions,
) -> Result<(Vec<f64>, f64)> {
    check_inputs(g, config, tasks, Some(&state.anchor))?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidConfig("subproblem tolerance must be positive".into()));
    }
    let set = PowerSimplex::new(config.total_power_w, config.max_power_w);
    let k_users = tasks.len();
    let mut scratch = vec![0.0; k_users];
    let oracle = |p: &[f64], grad: &mut [f64]| -> f64 {
        let mut worst = f64::NEG_INFINITY;
        let mut worst_k = 0;
        let mut worst_u = 0.0;
        for (k, task) in tasks.iter().enumerate() {
            let u = surrogate_samples(state, g, config, task, p, k);
            if !(u > 0.0) {
                // Outside the surrogate's domain: treat as +inf and steer
                // toward larger u_k.
                surrogate_samples_gradient(state, g, config, task, p, k, grad);
                grad.iter_mut().for_each(|v| *v = -*v);
                return f64::INFINITY;
            }
            let value = task.rho * task.a * u.powf(-task.b);
            if value > worst {
                worst = value;
                worst_k = k;
                worst_u = u;
            }
        }
        let task = &tasks[worst_k];
        surrogate_samples_gradient(state, g, config, task, p, worst_k, &mut scratch);
        let factor = -task.rho * task.a * task.b * worst_u.powf(-task.b - 1.0);
        for (o, s) in grad.iter_mut().zip(&scratch) {
            *o = factor * s;
        }
        worst
    };
    let m = minimize(&state.anchor, &set, opts, oracle)?;
    Ok((m.point, m.value))
}

/// Runs MM from the uniform split until the relative objective decrease
/// drops below `opts.mm_tol` or `opts.max_iterations` is reached.
pub fn solve_lcpa(
    g: &GainMatrix,
    config: &SystemConfig,
    tasks: &[LearningTask],
    opts: &MmOptions,
) -> Result<PowerAllocation> {
    check_inputs(g, config, tasks, None)?;
    let set = PowerSimplex::new(config.total_power_w, config.max_power_w);
    let mut p = set.uniform_point(tasks.len());
    let mut objective = lcpa_objective(g, config, tasks, &p)?;
    let mut history = vec![objective];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let state = SurrogateState::new(g, config, &p);
        let (next, _) = solve_subproblem_with(&state, g, config, tasks, &opts.subproblem)?;
        let next_objective = lcpa_objective(g, config, tasks, &next)?;
        if next_objective >= objective {
            converged = true;
            break;
        }
        let decrease = (objective - next_objective) / objective.abs().max(f64::MIN_POSITIVE);
        p = next;
        objective = next_objective;
        history.push(objective);
        if decrease < opts.mm_tol {
            converged = true;
            break;
        }
    }
    Ok(PowerAllocation { powers: p, objective, iterations, converged, history })
}
