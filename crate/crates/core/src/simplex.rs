//! Power simplex `{p >= 0, sum p = budget}` (optionally boxed by a per-user
//! cap), Euclidean projection onto it, and a projected subgradient minimizer.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSimplex {
    pub budget: f64,
    pub cap: Option<f64>,
}

impl PowerSimplex {
    pub fn new(budget: f64, cap: Option<f64>) -> Self {
        Self { budget, cap }
    }

    pub fn uniform_point(&self, k: usize) -> Vec<f64> {
        vec![self.budget / k as f64; k]
    }

    /// Euclidean projection of `y` onto the set, in place.
    pub fn project(&self, y: &mut [f64]) {
        match self.cap {
            None => project_simplex(y, self.budget),
            Some(cap) => project_capped(y, self.budget, cap),
        }
    }
}

/// Sort-based projection onto `{x >= 0, sum x = z}`.
fn project_simplex(y: &mut [f64], z: f64) {
    let mut sorted: Vec<f64> = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - z) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for v in y.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
    renormalize(y, z, None);
}

/// Projection onto `{0 <= x <= cap, sum x = z}` by bisection on the shift.
fn project_capped(y: &mut [f64], z: f64, cap: f64) {
    let total = |t: f64| y.iter().map(|&v| (v - t).clamp(0.0, cap)).sum::<f64>();
    let hi_init = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (y.iter().copied().fold(f64::INFINITY, f64::min) - cap, hi_init);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    for v in y.iter_mut() {
        *v = (*v - t).clamp(0.0, cap);
    }
    renormalize(y, z, Some(cap));
}

/// Spreads the floating-point residual of the sum over free coordinates so
/// the budget holds to rounding.
fn renormalize(y: &mut [f64], z: f64, cap: Option<f64>) {
    let residual = z - y.iter().sum::<f64>();
    if residual == 0.0 {
        return;
    }
    let upper = cap.unwrap_or(f64::INFINITY);
    let free: Vec<usize> = (0..y.len()).filter(|&i| if residual > 0.0 { y[i] < upper } else { y[i] > 0.0 }).collect();
    if free.is_empty() {
        return;
    }
    let share = residual / free.len() as f64;
    for i in free {
        y[i] = (y[i] + share).clamp(0.0, upper);
    }
}

/// Settings for [`minimize`].
///
/// Steps are measured as a fraction of the budget. An epoch takes
/// `epoch_len` steps of length `c / sqrt(j)`, then restarts from the best
/// point found with `c` halved. The run ends once `c <= tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgradientOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub initial_step: f64,
    pub epoch_len: usize,
}

impl Default for SubgradientOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iterations: 50_000, initial_step: 0.25, epoch_len: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Minimizes a convex function over `set` by projected subgradient descent
/// with best-iterate tracking, starting at the feasible point `start`.
///
/// `oracle(p, g)` returns the objective at `p` (possibly `+inf`) and writes a
/// subgradient into `g`. Where the objective is infinite, `g` should point
/// away from the region of infinite values.
pub fn minimize<F>(start: &[f64], set: &PowerSimplex, opts: &SubgradientOptions, mut oracle: F) -> Result<Minimum>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let k = start.len();
    let mut grad = vec![0.0; k];
    let mut best = start.to_vec();
    let mut best_value = oracle(&best, &mut grad);
    if k <= 1 {
        return Ok(Minimum { point: best, value: best_value, iterations: 0 });
    }
    let mut iterations = 0;
    let mut c = opts.initial_step;
    let mut x = best.clone();
    let mut dir = vec![0.0; k];
    let mut best_grad = grad.clone();
    while c > opts.tol {
        x.copy_from_slice(&best);
        grad.copy_from_slice(&best_grad);
        for j in 1..=opts.epoch_len {
            if iterations >= opts.max_iterations {
                return Err(Error::NonConvergence { what: "projected subgradient", iterations });
            }
            iterations += 1;
            if !feasible_direction(&x, &grad, set, &mut dir) {
                if x == best {
                    return Ok(Minimum { point: best, value: best_value, iterations });
                }
                break;
            }
            let step = c * set.budget / (j as f64).sqrt();
            for (xi, di) in x.iter_mut().zip(&dir) {
                *xi += step * di;
            }
            set.project(&mut x);
            let value = oracle(&x, &mut grad);
            if value < best_value {
                best_value = value;
                best.copy_from_slice(&x);
                best_grad.copy_from_slice(&grad);
            }
        }
        c *= 0.5;
    }
    Ok(Minimum { point: best, value: best_value, iterations })
}

/// Unit descent direction: `-grad` projected onto the tangent cone of the
/// set at `x`. Returns false when that projection vanishes.
fn feasible_direction(x: &[f64], grad: &[f64], set: &PowerSimplex, dir: &mut [f64]) -> bool {
    let k = x.len();
    let upper = set.cap.unwrap_or(f64::INFINITY);
    let mut free = vec![true; k];
    loop {
        let n_free = free.iter().filter(|&&f| f).count();
        if n_free == 0 {
            return false;
        }
        let mean = (0..k).filter(|&i| free[i]).map(|i| grad[i]).sum::<f64>() / n_free as f64;
        let mut changed = false;
        for i in 0..k {
            if !free[i] {
                continue;
            }
            let d = mean - grad[i];
            // Blocked coordinates: at zero and pushed down, or at the cap and pushed up.
            if (x[i] <= 0.0 && d < 0.0) || (x[i] >= upper && d > 0.0) {
                free[i] = false;
                changed = true;
            }
        }
        if !changed {
            for i in 0..k {
                dir[i] = if free[i] { mean - grad[i] } else { 0.0 };
            }
            break;
        }
    }
    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return false;
    }
    dir.iter_mut().for_each(|d| *d /= norm);
    true
}
