//! Inverse power-law classification error model `a * v^-b` and its
//! brute-force least-squares fit to learning-curve points.

use std::path::Path;

use crate::par::{map_indices, Execution};
use crate::{Error, Result};

/// Learning task served by one user: error-model parameters plus the data
/// layout needed to convert bits into samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningTask {
    /// Error scale. Accounts for classifier complexity.
    pub a: f64,
    /// Decay exponent of the error in the sample size.
    pub b: f64,
    /// Weight `>= 1` applied to the modeled error to hedge model mismatch.
    pub rho: f64,
    /// Bits per uploaded training sample (including the label).
    pub bits_per_sample: u32,
    /// Samples already held at the edge before any upload.
    pub initial_samples: f64,
}

impl LearningTask {
    pub fn validate(&self) -> Result<()> {
        let ok = self.a.is_finite()
            && self.a >= 0.0
            && self.b.is_finite()
            && self.b >= 0.0
            && self.rho.is_finite()
            && self.rho >= 1.0
            && self.bits_per_sample >= 1
            && self.initial_samples.is_finite()
            && self.initial_samples >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid learning task {self:?}")))
        }
    }
}

/// One observed point of a learning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub sample_size: f64,
    pub observed_error: f64,
}

/// Modeled error `a * v^-b`, scaled by `rho` when `weighted` is set.
///
/// Values above 1 are returned as is. Clamping belongs to the reporting layer.
pub fn model_error(task: &LearningTask, v: f64, weighted: bool) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("sample size must be positive, got {v}")));
    }
    let e = task.a * v.powf(-task.b);
    Ok(if weighted { task.rho * e } else { e })
}

/// Predicts the unweighted error at a sample size outside (or inside) the
/// range the parameters were fitted on.
pub fn extrapolate(task: &LearningTask, v_future: f64) -> Result<f64> {
    model_error(task, v_future, false)
}

/// Rectangular search grid over `(a, b)` with optional local refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitGridSpec {
    pub a_min: f64,
    pub a_max: f64,
    pub a_step: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub b_step: f64,
    /// Number of zoom rounds after the coarse pass. Each round searches
    /// `+-1` previous step around the incumbent with `refine_factor`-times finer steps.
    pub refine_rounds: u32,
    pub refine_factor: u32,
}

impl Default for FitGridSpec {
    fn default() -> Self {
        Self {
            a_min: 0.0,
            a_max: 100.0,
            a_step: 0.1,
            b_min: 0.0,
            b_max: 3.0,
            b_step: 0.01,
            refine_rounds: 1,
            refine_factor: 10,
        }
    }
}

impl FitGridSpec {
    /// Resolution of the last search round.
    pub fn final_steps(&self) -> (f64, f64) {
        let shrink = (self.refine_factor.max(1) as f64).powi(self.refine_rounds as i32);
        (self.a_step / shrink, self.b_step / shrink)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub mse: f64,
}

/// Fits `(a, b)` by exhaustive search using the default execution mode.
pub fn fit(points: &[FitPoint], grid: &FitGridSpec) -> Result<FitResult> {
    fit_with(points, grid, Execution::default())
}

pub fn fit_with(points: &[FitPoint], grid: &FitGridSpec, exec: Execution) -> Result<FitResult> {
    for p in points {
        if !(p.sample_size > 0.0) || !(0.0..=1.0).contains(&p.observed_error) {
            return Err(Error::Domain(format!("invalid fit point {p:?}")));
        }
    }
    let mut sizes: Vec<f64> = points.iter().map(|p| p.sample_size).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::InsufficientData { distinct: sizes.len() });
    }
    let a_axis = Axis::new(grid.a_min.max(0.0), grid.a_max, grid.a_step)?;
    let b_axis = Axis::new(grid.b_min.max(0.0), grid.b_max, grid.b_step)?;
    let mut best = search(points, &a_axis, &b_axis, exec);

    let factor = grid.refine_factor.max(1) as f64;
    let (mut a_step, mut b_step) = (grid.a_step, grid.b_step);
    for _ in 0..grid.refine_rounds {
        let a_axis = Axis::around(best.a, a_step, factor, a_axis.lo, a_axis.hi);
        let b_axis = Axis::around(best.b, b_step, factor, b_axis.lo, b_axis.hi);
        a_step /= factor;
        b_step /= factor;
        let refined = search(points, &a_axis, &b_axis, exec);
        if better(&refined, &best) {
            best = refined;
        }
    }
    Ok(best)
}

/// Evenly spaced grid values `lo + i * step` for `i = 0..=n`.
#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    step: f64,
    n: usize,
}

impl Axis {
    fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::EmptyGrid);
        }
        // Tolerate hi landing a hair below an exact multiple of step.
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        Ok(Self { lo, hi, step, n })
    }

    fn around(center: f64, coarse_step: f64, factor: f64, lo: f64, hi: f64) -> Self {
        let step = coarse_step / factor;
        let start = (center - coarse_step).max(lo);
        let end = (center + coarse_step).min(hi);
        let n = ((end - start) / step + 1e-9).floor() as usize;
        Self { lo: start, hi: end, step, n }
    }

    #[inline]
    fn value(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }
}

fn mse(points: &[FitPoint], decay: &[f64], a: f64) -> f64 {
    let mut acc = 0.0;
    for (p, d) in points.iter().zip(decay) {
        let r = p.observed_error - a * d;
        acc += r * r;
    }
    acc / points.len() as f64
}

/// Strict order on candidates: lower MSE, then smaller b, then smaller a.
fn better(x: &FitResult, y: &FitResult) -> bool {
    (x.mse, x.b, x.a) < (y.mse, y.b, y.a)
}

fn search(points: &[FitPoint], a_axis: &Axis, b_axis: &Axis, exec: Execution) -> FitResult {
    let per_b = map_indices(exec, b_axis.n + 1, |j| {
        let b = b_axis.value(j);
        let decay: Vec<f64> = points.iter().map(|p| p.sample_size.powf(-b)).collect();
        let mut best = FitResult { a: a_axis.value(0), b, mse: mse(points, &decay, a_axis.value(0)) };
        for i in 1..=a_axis.n {
            let a = a_axis.value(i);
            let cand = FitResult { a, b, mse: mse(points, &decay, a) };
            if better(&cand, &best) {
                best = cand;
            }
        }
        best
    });
    per_b.into_iter().reduce(|x, y| if better(&y, &x) { y } else { x }).expect("axis has at least one value")
}

/// Reads `sample_size,error` rows (header required).
pub fn read_fit_points(path: &Path) -> Result<Vec<FitPoint>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_fit_points(file, path)
}

pub fn parse_fit_points<R: std::io::Read>(reader: R, path: &Path) -> Result<Vec<FitPoint>> {
    let parse_err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "sample_size" || &headers[1] != "error" {
        return Err(parse_err(
            1,
            format!("expected header `sample_size,error`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, name: &str| -> Result<f64> {
            record[i].parse::<f64>().map_err(|_| parse_err(line, format!("{name} `{}` is not a number", &record[i])))
        };
        let point = FitPoint { sample_size: field(0, "sample_size")?, observed_error: field(1, "error")? };
        if !(point.sample_size > 0.0) || !(0.0..=1.0).contains(&point.observed_error) {
            return Err(parse_err(line, format!("point out of range: {point:?}")));
        }
        points.push(point);
    }
    Ok(points)
}
