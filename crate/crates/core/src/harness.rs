//! Monte-Carlo experiments comparing allocation schemes over a sweep of the
//! time budget or the antenna count, with CSV output.
//!
//! The reported error is the modeled weighted error `rho_k * a_k * v_k^-b_k`
//! at the sample counts each allocation achieves, not the error of a
//! retrained classifier.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::asymptotic::{solve_asymptotic, DEFAULT_EPS};
use crate::baselines::{max_min_fairness, sum_rate_max, uniform, water_filling};
use crate::channel::{draw_channels, gains_from_channels, rate, sample_count, GainMatrix, SampleMode, SystemConfig};
use crate::error_model::{model_error, LearningTask};
use crate::mm_solver::{solve_lcpa, MmOptions};
use crate::par::{map_indices, Execution};
use crate::{Error, Result};

/// One-line note written ahead of every sweep report.
pub const REPORT_NOTE: &str =
    "# modeled_max_error is max_k rho_k*a_k*v_k^-b_k at the achieved (continuous) sample counts, clamped to [0,1]; no classifier is retrained";

/// Offset between the seeds of consecutive Monte-Carlo runs.
pub const RUN_SEED_STRIDE: u64 = 1_000_003;

pub const CSV_HEADER: &str = "sweep_value,scheme,user,power_mw,modeled_max_error,samples";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    LcpaMm,
    LcpaAsymptotic,
    MaxMin,
    SumRate,
    WaterFilling,
    Uniform,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::LcpaMm,
        Scheme::LcpaAsymptotic,
        Scheme::MaxMin,
        Scheme::SumRate,
        Scheme::WaterFilling,
        Scheme::Uniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::LcpaMm => "lcpa_mm",
            Scheme::LcpaAsymptotic => "lcpa_asymptotic",
            Scheme::MaxMin => "max_min",
            Scheme::SumRate => "sum_rate",
            Scheme::WaterFilling => "water_filling",
            Scheme::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    TimeBudget,
    NumAntennas,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::TimeBudget => "time_budget_s",
            SweepAxis::NumAntennas => "num_antennas",
        }
    }

    pub fn current(self, config: &SystemConfig) -> f64 {
        match self {
            SweepAxis::TimeBudget => config.time_budget_s,
            SweepAxis::NumAntennas => config.num_antennas as f64,
        }
    }

    /// Copy of `config` with this axis set to `value`.
    pub fn apply(self, config: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut c = config.clone();
        match self {
            SweepAxis::TimeBudget => c.time_budget_s = value,
            SweepAxis::NumAntennas => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::InvalidConfig(format!("antenna count {value} is not a positive integer")));
                }
                c.num_antennas = value as usize;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "time_budget_s" | "T" | "time" => Ok(SweepAxis::TimeBudget),
            "num_antennas" | "N" | "antennas" => Ok(SweepAxis::NumAntennas),
            other => Err(Error::InvalidConfig(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub config: SystemConfig,
    pub tasks: Vec<LearningTask>,
    pub schemes: Vec<Scheme>,
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub mm: MmOptions,
    /// Tolerance handed to the max-min and sum-rate baselines.
    pub baseline_tol: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.tasks.len() != self.config.num_users {
            return Err(Error::InvalidConfig(format!(
                "{} tasks for {} users",
                self.tasks.len(),
                self.config.num_users
            )));
        }
        for t in &self.tasks {
            t.validate()?;
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("no schemes selected".into()));
        }
        if self.sweep_values.is_empty() || self.sweep_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("sweep values must be nonempty and strictly increasing".into()));
        }
        for &v in &self.sweep_values {
            self.sweep_axis.apply(&self.config, v)?;
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.seed.wrapping_add(RUN_SEED_STRIDE.wrapping_mul(run as u64))
    }
}

/// Averages over all runs for one (sweep value, scheme) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub mean_powers_mw: Vec<f64>,
    pub mean_modeled_max_error: f64,
    pub mean_samples: Vec<f64>,
    /// Set when the scheme failed on at least one run; the means are NaN then.
    pub failure: Option<String>,
}

/// Outcome of one scheme on one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub powers_w: Vec<f64>,
    /// Worst weighted modeled error, clamped to `[0, 1]`.
    pub modeled_max_error: f64,
    pub samples: Vec<f64>,
}

/// Powers chosen by `scheme` on gains `g`.
pub fn allocate(
    scheme: Scheme,
    g: &GainMatrix,
    config: &SystemConfig,
    tasks: &[LearningTask],
    mm: &MmOptions,
    tol: f64,
) -> Result<Vec<f64>> {
    let powers = match scheme {
        Scheme::LcpaMm => solve_lcpa(g, config, tasks, mm)?.powers,
        Scheme::LcpaAsymptotic => solve_asymptotic(&g.diagonal(), config, tasks, DEFAULT_EPS)?.powers,
        Scheme::MaxMin => max_min_fairness(g, config, tol)?.powers,
        Scheme::SumRate => sum_rate_max(g, config, tol)?.powers,
        Scheme::WaterFilling => water_filling(&g.diagonal(), config)?.powers,
        Scheme::Uniform => uniform(config).powers,
    };
    Ok(powers)
}

/// Modeled worst error (interference included) and floored sample counts.
pub fn evaluate(g: &GainMatrix, config: &SystemConfig, tasks: &[LearningTask], powers: Vec<f64>) -> Result<Evaluation> {
    let mut worst = f64::NEG_INFINITY;
    let mut samples = Vec::with_capacity(tasks.len());
    for (k, task) in tasks.iter().enumerate() {
        let r = rate(g, &powers, config.noise_power_w, k);
        let v = sample_count(config, r, task, SampleMode::Continuous);
        worst = worst.max(model_error(task, v, true)?);
        samples.push(sample_count(config, r, task, SampleMode::Discrete));
    }
    Ok(Evaluation { powers_w: powers, modeled_max_error: worst.clamp(0.0, 1.0), samples })
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>> {
    run_experiment_with(spec, Execution::default())
}

/// Runs every (sweep value, run) draw, possibly in parallel, then averages
/// in a fixed order so the output does not depend on `exec`.
pub fn run_experiment_with(spec: &ExperimentSpec, exec: Execution) -> Result<Vec<ExperimentRow>> {
    spec.validate()?;
    let mut schemes = spec.schemes.clone();
    schemes.sort();
    schemes.dedup();
    let configs: Vec<SystemConfig> =
        spec.sweep_values.iter().map(|&v| spec.sweep_axis.apply(&spec.config, v)).collect::<Result<_>>()?;

    let draws = map_indices(exec, configs.len() * spec.runs, |idx| {
        let (cell, run) = (idx / spec.runs, idx % spec.runs);
        let config = &configs[cell];
        let gains = gains_from_channels(&draw_channels(config, spec.run_seed(run)));
        schemes
            .iter()
            .map(|&scheme| {
                let g = gains.as_ref().map_err(|e| e.to_string())?;
                allocate(scheme, g, config, &spec.tasks, &spec.mm, spec.baseline_tol)
                    .and_then(|p| evaluate(g, config, &spec.tasks, p))
                    .map_err(|e| e.to_string())
            })
            .collect::<Vec<_>>()
    });

    let k = spec.tasks.len();
    let mut rows = Vec::with_capacity(configs.len() * schemes.len());
    for (cell, &value) in spec.sweep_values.iter().enumerate() {
        for (s, &scheme) in schemes.iter().enumerate() {
            let mut powers = vec![0.0; k];
            let mut samples = vec![0.0; k];
            let mut error = 0.0;
            let mut failure = None;
            for run in 0..spec.runs {
                match &draws[cell * spec.runs + run][s] {
                    Ok(ev) => {
                        error += ev.modeled_max_error;
                        for u in 0..k {
                            powers[u] += ev.powers_w[u] * 1e3;
                            samples[u] += ev.samples[u];
                        }
                    }
                    Err(e) => {
                        failure.get_or_insert_with(|| format!("run {run}: {e}"));
                    }
                }
            }
            let n = spec.runs as f64;
            let row = if failure.is_some() {
                ExperimentRow {
                    sweep_value: value,
                    scheme,
                    mean_powers_mw: vec![f64::NAN; k],
                    mean_modeled_max_error: f64::NAN,
                    mean_samples: vec![f64::NAN; k],
                    failure,
                }
            } else {
                ExperimentRow {
                    sweep_value: value,
                    scheme,
                    mean_powers_mw: powers.iter().map(|p| p / n).collect(),
                    mean_modeled_max_error: error / n,
                    mean_samples: samples.iter().map(|v| v / n).collect(),
                    failure: None,
                }
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Formats with 10 significant digits and a decimal point, switching to
/// exponent notation outside `[1e-5, 1e15)`.
pub fn format_sig10(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0.000000000".into();
    }
    let sci = format!("{x:.9e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..15).contains(&exp) {
        format!("{x:.prec$}", prec = (9 - exp).max(0) as usize)
    } else {
        sci
    }
}

/// Writes the rows as CSV: one line per (row, user), sorted by sweep value,
/// scheme and user.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], mut out: W) -> std::io::Result<()> {
    let mut sorted: Vec<&ExperimentRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.sweep_value.total_cmp(&b.sweep_value).then(a.scheme.cmp(&b.scheme)));
    let mut buf = String::with_capacity(64 * (rows.len() + 1));
    buf.push_str(CSV_HEADER);
    buf.push('\n');
    for row in sorted {
        for user in 0..row.mean_powers_mw.len() {
            buf.push_str(&format!(
                "{},{},{},{},{},{}\n",
                format_sig10(row.sweep_value),
                row.scheme,
                user + 1,
                format_sig10(row.mean_powers_mw[user]),
                format_sig10(row.mean_modeled_max_error),
                format_sig10(row.mean_samples[user]),
            ));
        }
    }
    out.write_all(buf.as_bytes())
}

pub fn emit_csv(rows: &[ExperimentRow], path: &Path) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(rows, &mut w).map_err(io)?;
    w.flush().map_err(io)
}
