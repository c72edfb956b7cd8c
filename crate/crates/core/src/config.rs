//! Experiment configuration files.
//!
//! Configs are TOML with units spelled out in key names. Logarithmic units
//! (dB, dBm) are accepted only here and converted to linear watts once.
//!
//! ```toml
//! [system]
//! bandwidth_khz = 180
//! time_budget_s = 5
//! noise_power_dbm = -87
//! total_power_mw = 20          # or total_power_dbm = 13
//! num_antennas = 4
//! path_loss_db = -100
//! # max_power_mw = 15          # optional per-user cap
//!
//! [experiment]
//! schemes = ["lcpa_mm", "max_min", "sum_rate"]
//! sweep_axis = "time_budget_s"
//! sweep_values = [5, 10, 20]
//! runs = 10
//! seed = 1
//!
//! [[task]]
//! a = 7.3
//! b = 0.69
//! rho = 1.0
//! bits_per_sample = 6276
//! initial_samples = 300
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::channel::SystemConfig;
use crate::error_model::LearningTask;
use crate::harness::{ExperimentSpec, Scheme, SweepAxis};
use crate::mm_solver::MmOptions;
use crate::simplex::SubgradientOptions;
use crate::{Error, Result};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSystem {
    bandwidth_khz: f64,
    time_budget_s: f64,
    noise_power_dbm: f64,
    total_power_dbm: Option<f64>,
    total_power_mw: Option<f64>,
    num_antennas: usize,
    path_loss_db: Option<f64>,
    max_power_mw: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTask {
    #[allow(dead_code)]
    name: Option<String>,
    a: f64,
    b: f64,
    #[serde(default = "one")]
    rho: f64,
    bits_per_sample: u32,
    initial_samples: f64,
    path_loss_db: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileExperiment {
    schemes: Option<Vec<String>>,
    sweep_axis: Option<String>,
    sweep_values: Option<Vec<f64>>,
    runs: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSolver {
    mm_max_iterations: Option<usize>,
    mm_tol: Option<f64>,
    subproblem_tol: Option<f64>,
    subproblem_max_iterations: Option<usize>,
    baseline_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    system: FileSystem,
    experiment: Option<FileExperiment>,
    #[serde(default)]
    solver: FileSolver,
    task: Vec<FileTask>,
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_spec(&text, path)
}

pub fn parse_spec(text: &str, path: &Path) -> Result<ExperimentSpec> {
    let file: FileConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        Error::Parse { path: path.to_path_buf(), line, message: e.message().to_string() }
    })?;
    let invalid = |msg: String| Error::InvalidConfig(format!("{}: {msg}", path.display()));

    let sys = &file.system;
    let total_power_w = match (sys.total_power_dbm, sys.total_power_mw) {
        (Some(dbm), None) => dbm_to_watts(dbm),
        (None, Some(mw)) => mw * 1e-3,
        _ => return Err(invalid("set exactly one of total_power_dbm, total_power_mw".into())),
    };
    let path_loss_linear = file
        .task
        .iter()
        .enumerate()
        .map(|(k, t)| {
            t.path_loss_db
                .or(sys.path_loss_db)
                .map(db_to_linear)
                .ok_or_else(|| invalid(format!("no path_loss_db for task {k}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let config = SystemConfig {
        bandwidth_hz: sys.bandwidth_khz * 1e3,
        time_budget_s: sys.time_budget_s,
        noise_power_w: dbm_to_watts(sys.noise_power_dbm),
        total_power_w,
        num_users: file.task.len(),
        num_antennas: sys.num_antennas,
        path_loss_linear,
        max_power_w: sys.max_power_mw.map(|mw| mw * 1e-3),
    };
    let tasks: Vec<LearningTask> = file
        .task
        .iter()
        .map(|t| LearningTask {
            a: t.a,
            b: t.b,
            rho: t.rho,
            bits_per_sample: t.bits_per_sample,
            initial_samples: t.initial_samples,
        })
        .collect();

    let exp = file.experiment.as_ref();
    let schemes = match exp.and_then(|e| e.schemes.as_ref()) {
        Some(names) => names.iter().map(|s| s.parse()).collect::<Result<Vec<Scheme>>>()?,
        None => Scheme::ALL.to_vec(),
    };
    let sweep_axis = match exp.and_then(|e| e.sweep_axis.as_deref()) {
        Some(s) => s.parse()?,
        None => SweepAxis::TimeBudget,
    };
    let sweep_values = exp.and_then(|e| e.sweep_values.clone()).unwrap_or_else(|| vec![sweep_axis.current(&config)]);

    let defaults = MmOptions::default();
    let solver = &file.solver;
    let mm = MmOptions {
        max_iterations: solver.mm_max_iterations.unwrap_or(defaults.max_iterations),
        mm_tol: solver.mm_tol.unwrap_or(defaults.mm_tol),
        subproblem: SubgradientOptions {
            tol: solver.subproblem_tol.unwrap_or(defaults.subproblem.tol),
            max_iterations: solver.subproblem_max_iterations.unwrap_or(defaults.subproblem.max_iterations),
            ..defaults.subproblem
        },
    };

    let spec = ExperimentSpec {
        config,
        tasks,
        schemes,
        sweep_axis,
        sweep_values,
        runs: exp.and_then(|e| e.runs).unwrap_or(10),
        seed: exp.and_then(|e| e.seed).unwrap_or(0),
        mm,
        baseline_tol: solver.baseline_tol.unwrap_or(1e-9),
    };
    spec.validate()?;
    Ok(spec)
}
