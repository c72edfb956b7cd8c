//! Uplink channel model: i.i.d. Rayleigh vectors with per-user path loss,
//! reduced to MRC composite gains.
//!
//! Random draws come from `ChaCha8Rng::seed_from_u64(seed)`. Each complex
//! entry consumes one Box-Muller pair (two uniform `f64`s), walking users in
//! order and antennas within a user. All quantities are linear: watts, W/W,
//! Hz, seconds.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error_model::LearningTask;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub bandwidth_hz: f64,
    pub time_budget_s: f64,
    pub noise_power_w: f64,
    pub total_power_w: f64,
    pub num_users: usize,
    pub num_antennas: usize,
    /// Linear large-scale gain of each user (variance of every channel entry).
    pub path_loss_linear: Vec<f64>,
    /// Optional per-user transmit power cap. `None` leaves only the sum budget.
    pub max_power_w: Option<f64>,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("time_budget_s", self.time_budget_s),
            ("noise_power_w", self.noise_power_w),
            ("total_power_w", self.total_power_w),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.num_users == 0 || self.num_antennas == 0 {
            return Err(Error::InvalidConfig("need at least one user and one antenna".into()));
        }
        if self.path_loss_linear.len() != self.num_users {
            return Err(Error::InvalidConfig(format!(
                "{} path-loss values for {} users",
                self.path_loss_linear.len(),
                self.num_users
            )));
        }
        // Zero is allowed here; it yields a degenerate channel downstream.
        if let Some(k) = self.path_loss_linear.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidConfig(format!("path loss of user {k} must be >= 0")));
        }
        if let Some(cap) = self.max_power_w {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::InvalidConfig(format!("max_power_w must be positive, got {cap}")));
            }
            if cap * (self.num_users as f64) < self.total_power_w {
                return Err(Error::InvalidConfig("per-user cap times user count is below the total budget".into()));
            }
        }
        Ok(())
    }

    /// `B * T`, the number of channel uses per unit of spectral efficiency.
    pub fn bandwidth_time(&self) -> f64 {
        self.bandwidth_hz * self.time_budget_s
    }
}

/// One channel vector `h_k` per user, each of length `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub vectors: Vec<Vec<Complex64>>,
}

/// Composite gains seen after MRC: `G[k][k] = |h_k|^2` and
/// `G[k][l] = |h_k^H h_l|^2 / |h_k|^2` for `k != l`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    k: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    /// Builds a matrix from row-major entries. Entries must be finite and
    /// nonnegative.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidConfig("gain matrix must be square and nonempty".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidConfig("gains must be finite and nonnegative".into()));
        }
        Ok(Self { k, data })
    }

    /// Interference-free gains, as if all channels were mutually orthogonal.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let k = diag.len();
        let rows: Vec<Vec<f64>> =
            (0..k).map(|i| (0..k).map(|j| if i == j { diag[i] } else { 0.0 }).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn num_users(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.data[k * self.k + l]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.k..(k + 1) * self.k]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.k).map(|k| self.get(k, k)).collect()
    }

    /// Copy with every off-diagonal entry set to zero.
    pub fn diagonal_only(&self) -> Self {
        Self::from_diagonal(&self.diagonal()).expect("diagonal of a valid matrix")
    }

    /// Interference plus noise at user `k`: `sum_{l != k} G[k][l] p_l + noise`.
    #[inline]
    pub fn interference(&self, p: &[f64], noise_power_w: f64, k: usize) -> f64 {
        let row = self.row(k);
        let mut acc = noise_power_w;
        for (l, (&g, &pl)) in row.iter().zip(p).enumerate() {
            if l != k {
                acc += g * pl;
            }
        }
        acc
    }
}

/// Draws `h_k ~ CN(0, path_loss_k * I_N)` for every user.
pub fn draw_channels(config: &SystemConfig, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = config
        .path_loss_linear
        .iter()
        .map(|&variance| {
            let scale = (variance / 2.0).sqrt();
            (0..config.num_antennas)
                .map(|_| {
                    let (re, im) = box_muller(&mut rng);
                    Complex64::new(re * scale, im * scale)
                })
                .collect()
        })
        .collect();
    ChannelRealization { vectors }
}

/// Two independent standard normals from two uniforms.
fn box_muller<R: Rng>(rng: &mut R) -> (f64, f64) {
    // 1 - U lies in (0, 1], keeping the logarithm finite.
    let u1 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = std::f64::consts::TAU * u2;
    (radius * angle.cos(), radius * angle.sin())
}

pub fn gains_from_channels(ch: &ChannelRealization) -> Result<GainMatrix> {
    let k = ch.vectors.len();
    let norms: Vec<f64> = ch.vectors.iter().map(|h| h.iter().map(|z| z.norm_sqr()).sum()).collect();
    if let Some(user) = norms.iter().position(|&n| n <= 0.0) {
        return Err(Error::DegenerateChannel { user });
    }
    let mut data = vec![0.0; k * k];
    for i in 0..k {
        data[i * k + i] = norms[i];
        for j in (i + 1)..k {
            let inner: Complex64 = ch.vectors[i].iter().zip(&ch.vectors[j]).map(|(a, b)| a.conj() * b).sum();
            let cross = inner.norm_sqr();
            data[i * k + j] = cross / norms[i];
            data[j * k + i] = cross / norms[j];
        }
    }
    Ok(GainMatrix { k, data })
}

/// Spectral efficiency of user `k` in bits/s/Hz under MRC reception.
pub fn rate(g: &GainMatrix, p: &[f64], noise_power_w: f64, k: usize) -> f64 {
    let sinr = g.get(k, k) * p[k] / g.interference(p, noise_power_w, k);
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// Whether sample counts keep the fractional part of `B*T*R/D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleMode {
    /// Continuous relaxation used inside the optimizers.
    #[default]
    Continuous,
    /// Whole samples received, used for reporting.
    Discrete,
}

/// Training samples available to the learner of user `k`:
/// `B*T*rate/D + A`, floored in [`SampleMode::Discrete`].
pub fn sample_count(config: &SystemConfig, rate_k: f64, task: &LearningTask, mode: SampleMode) -> f64 {
    let received = config.bandwidth_time() * rate_k / task.bits_per_sample as f64;
    match mode {
        SampleMode::Continuous => received + task.initial_samples,
        SampleMode::Discrete => received.floor() + task.initial_samples,
    }
}
