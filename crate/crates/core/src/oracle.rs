//! Exhaustive 1-D grid searches over `p_1` (with `p_2 = P - p_1`) for
//! two-user instances.
//!
//! The objectives are assembled directly from [`rate`] and
//! [`model_error`], not through the solvers' own objective code.

use crate::channel::{rate, sample_count, GainMatrix, SampleMode, SystemConfig};
use crate::error_model::{model_error, LearningTask};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub p1: f64,
    pub value: f64,
}

/// Worst weighted modeled error, evaluated from rates and the error model.
pub fn worst_error(g: &GainMatrix, config: &SystemConfig, tasks: &[LearningTask], p: &[f64]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for (k, task) in tasks.iter().enumerate() {
        let v = sample_count(config, rate(g, p, config.noise_power_w, k), task, SampleMode::Continuous);
        worst = worst.max(model_error(task, v, true)?);
    }
    Ok(worst)
}

fn scan<F>(config: &SystemConfig, step_fraction: f64, mut f: F) -> Result<GridOptimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(step_fraction > 0.0 && step_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("grid step fraction {step_fraction} out of (0, 1]")));
    }
    let budget = config.total_power_w;
    let n = (1.0 / step_fraction).round() as usize;
    let mut best = GridOptimum { p1: 0.0, value: f64::INFINITY };
    for i in 0..=n {
        let p1 = budget * i as f64 / n as f64;
        let value = f(&[p1, budget - p1])?;
        if value < best.value {
            best = GridOptimum { p1, value };
        }
    }
    Ok(best)
}

/// Grid minimum of the worst weighted modeled error.
pub fn lcpa_grid(
    g: &GainMatrix,
    config: &SystemConfig,
    tasks: &[LearningTask],
    step_fraction: f64,
) -> Result<GridOptimum> {
    if g.num_users() != 2 || tasks.len() != 2 {
        return Err(Error::InvalidConfig("grid oracle needs exactly two users".into()));
    }
    scan(config, step_fraction, |p| worst_error(g, config, tasks, p))
}

/// Grid maximum of the minimum rate, reported as `value = min rate`.
pub fn max_min_grid(g: &GainMatrix, config: &SystemConfig, step_fraction: f64) -> Result<GridOptimum> {
    if g.num_users() != 2 {
        return Err(Error::InvalidConfig("grid oracle needs exactly two users".into()));
    }
    let noise = config.noise_power_w;
    let best = scan(config, step_fraction, |p| Ok(-rate(g, p, noise, 0).min(rate(g, p, noise, 1))))?;
    Ok(GridOptimum { p1: best.p1, value: -best.value })
}

/// Grid maximum of the sum rate, reported as `value = sum rate`.
pub fn sum_rate_grid(g: &GainMatrix, config: &SystemConfig, step_fraction: f64) -> Result<GridOptimum> {
    if g.num_users() != 2 {
        return Err(Error::InvalidConfig("grid oracle needs exactly two users".into()));
    }
    let noise = config.noise_power_w;
    let best = scan(config, step_fraction, |p| Ok(-(rate(g, p, noise, 0) + rate(g, p, noise, 1))))?;
    Ok(GridOptimum { p1: best.p1, value: -best.value })
}
