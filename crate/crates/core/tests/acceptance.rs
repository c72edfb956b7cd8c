//! Acceptance suite. Each test prints one `[PASS]`/`[FAIL]` line; run with
//! `cargo test -p lcpa --test acceptance -- --nocapture --test-threads=1`
//! to see them in order.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lcpa::asymptotic::DEFAULT_EPS;
use lcpa::config::dbm_to_watts;
use lcpa::harness::{run_experiment_with, RUN_SEED_STRIDE};
use lcpa::mm_solver::{lcpa_objective, surrogate_gradient};
use lcpa::oracle::lcpa_grid;
use lcpa::{
    draw_channels, emit_csv, fit, gains_from_channels, phi, power_at_level, solve_asymptotic, solve_lcpa,
    surrogate_phi, water_filling, Execution, ExperimentSpec, FitGridSpec, FitPoint, GainMatrix, LearningTask,
    MmOptions, Scheme, SurrogateState, SweepAxis, SystemConfig,
};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("[{}] AC{id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "AC{id} {name} failed: {detail}");
}

const CNN: LearningTask = LearningTask { a: 7.3, b: 0.69, rho: 1.0, bits_per_sample: 6276, initial_samples: 300.0 };
const SVM: LearningTask = LearningTask { a: 5.2, b: 0.72, rho: 1.2, bits_per_sample: 324, initial_samples: 200.0 };

fn base_config(n: usize, k: usize) -> SystemConfig {
    SystemConfig {
        bandwidth_hz: 180e3,
        time_budget_s: 5.0,
        noise_power_w: dbm_to_watts(-87.0),
        total_power_w: 20e-3,
        num_users: k,
        num_antennas: n,
        path_loss_linear: vec![1e-10; k],
        max_power_w: None,
    }
}

fn tasks(k: usize) -> Vec<LearningTask> {
    (0..k).map(|i| if i % 2 == 0 { CNN } else { SVM }).collect()
}

fn random_point(rng: &mut ChaCha8Rng, k: usize, budget: f64) -> Vec<f64> {
    let mut p: Vec<f64> = (0..k).map(|_| -rng.gen::<f64>().ln()).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v *= budget / s);
    p
}

#[test]
fn ac1_average_transmit_power_at_ten_antennas() {
    let start = Instant::now();
    let cfg = base_config(10, 2);
    let t = tasks(2);
    let draws = 500;
    let mut lcpa_sum = [0.0; 2];
    let mut wf_sum = [0.0; 2];
    let mut cnn_dominant = 0;
    for run in 0..draws {
        let seed = 2020u64.wrapping_add(RUN_SEED_STRIDE * run as u64);
        let g = gains_from_channels(&draw_channels(&cfg, seed)).unwrap();
        let asym = solve_asymptotic(&g.diagonal(), &cfg, &t, DEFAULT_EPS).unwrap();
        let wf = water_filling(&g.diagonal(), &cfg).unwrap();
        for k in 0..2 {
            lcpa_sum[k] += asym.powers[k] * 1e3;
            wf_sum[k] += wf.powers[k] * 1e3;
        }
        if asym.powers[0] >= 0.95 * cfg.total_power_w {
            cnn_dominant += 1;
        }
    }
    let lcpa_mean = lcpa_sum.map(|v| v / draws as f64);
    let wf_mean = wf_sum.map(|v| v / draws as f64);
    let within = |x: f64, target: f64, tol: f64| (x - target).abs() <= tol * target;
    let elapsed = start.elapsed();
    let pass = within(lcpa_mean[0], 19.8476, 0.10)
        && within(lcpa_mean[1], 0.1524, 0.10)
        && within(wf_mean[0], 9.9862, 0.05)
        && within(wf_mean[1], 10.0138, 0.05)
        && cnn_dominant as f64 >= 0.95 * draws as f64
        && elapsed < Duration::from_secs(30);
    report(
        1,
        "average transmit power, N=10",
        pass,
        format!(
            "asymptotic LCPA ({:.4}, {:.4}) mW, water-filling ({:.4}, {:.4}) mW, CNN >= 95% of budget in {}/{} draws, {:.2?}",
            lcpa_mean[0], lcpa_mean[1], wf_mean[0], wf_mean[1], cnn_dominant, draws, elapsed
        ),
    );
}

#[test]
fn ac2_mm_matches_grid_oracle() {
    let start = Instant::now();
    let cfg = base_config(4, 2);
    let t = tasks(2);
    let mut worst_gap = 0.0f64;
    for seed in 0..20 {
        let g = gains_from_channels(&draw_channels(&cfg, 500 + seed)).unwrap();
        let mm = solve_lcpa(&g, &cfg, &t, &MmOptions::default()).unwrap();
        let grid = lcpa_grid(&g, &cfg, &t, 1e-4).unwrap();
        worst_gap = worst_gap.max((mm.objective - grid.value).abs());
    }
    let elapsed = start.elapsed();
    report(
        2,
        "MM vs exhaustive grid",
        worst_gap <= 1e-3 && elapsed < Duration::from_secs(60),
        format!("max |objective gap| {worst_gap:.3e} over 20 instances, {elapsed:.2?}"),
    );
}

#[test]
fn ac3_asymptotic_matches_mm_without_interference() {
    let cfg = base_config(10, 2);
    let t = tasks(2);
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let g = gains_from_channels(&draw_channels(&cfg, 900 + seed)).unwrap().diagonal_only();
        let asym = solve_asymptotic(&g.diagonal(), &cfg, &t, DEFAULT_EPS).unwrap();
        let mm = solve_lcpa(&g, &cfg, &t, &MmOptions::default()).unwrap();
        for k in 0..2 {
            worst = worst.max((asym.powers[k] - mm.powers[k]).abs() / cfg.total_power_w);
        }
    }
    report(3, "asymptotic vs MM on diagonal gains", worst <= 1e-4, format!("max power gap {worst:.3e} * P_sum"));
}

#[test]
fn ac4_surrogate_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = base_config(4, 2);
    let t = tasks(2);
    let budget = cfg.total_power_w;
    let (mut bound_violation, mut tangency, mut grad_err, mut convexity) = (0.0f64, 0.0f64, 0.0f64, f64::NEG_INFINITY);
    let mut checked = 0;
    for inst in 0..10 {
        let g = gains_from_channels(&draw_channels(&cfg, 40 + inst)).unwrap();
        let anchor = random_point(&mut rng, 2, budget);
        let state = SurrogateState::new(&g, &cfg, &anchor);
        for k in 0..2 {
            let exact = phi(&g, &cfg, &t, &anchor, k).unwrap();
            let bound = surrogate_phi(&state, &g, &cfg, &t, &anchor, k).unwrap();
            tangency = tangency.max((bound - exact).abs() / exact);

            let analytic = surrogate_gradient(&state, &g, &cfg, &t, &anchor, k).unwrap();
            let h = 1e-5 * budget;
            let mut fd = [0.0; 2];
            for l in 0..2 {
                let mut up = anchor.clone();
                let mut down = anchor.clone();
                up[l] += h;
                down[l] -= h;
                if down[l] < 0.0 {
                    down[l] = 0.0;
                }
                fd[l] = (phi(&g, &cfg, &t, &up, k).unwrap() - phi(&g, &cfg, &t, &down, k).unwrap()) / (up[l] - down[l]);
            }
            let scale = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            for l in 0..2 {
                grad_err = grad_err.max((analytic[l] - fd[l]).abs() / scale);
            }
        }
        for _ in 0..100 {
            let p = random_point(&mut rng, 2, budget);
            let q = random_point(&mut rng, 2, budget);
            let mid: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
            for k in 0..2 {
                let exact = phi(&g, &cfg, &t, &p, k).unwrap();
                checked += 1;
                // Outside its domain the bound counts as +inf.
                if let Ok(bound) = surrogate_phi(&state, &g, &cfg, &t, &p, k) {
                    bound_violation = bound_violation.max((exact - bound) / exact);
                }
                if let (Ok(fp), Ok(fq), Ok(fm)) = (
                    surrogate_phi(&state, &g, &cfg, &t, &p, k),
                    surrogate_phi(&state, &g, &cfg, &t, &q, k),
                    surrogate_phi(&state, &g, &cfg, &t, &mid, k),
                ) {
                    convexity = convexity.max(fm - 0.5 * (fp + fq));
                }
            }
        }
    }
    let pass = bound_violation <= 1e-12 && tangency <= 1e-12 && grad_err <= 1e-5 && convexity <= 1e-12;
    report(
        4,
        "surrogate bound/tangency/gradient/convexity",
        pass,
        format!(
            "{checked} points: max bound violation {bound_violation:.2e}, tangency {tangency:.2e}, gradient rel err {grad_err:.2e}, midpoint excess {convexity:.2e}"
        ),
    );
}

#[test]
fn ac5_mm_descent() {
    let mut worst_rise = f64::NEG_INFINITY;
    let mut instances = 0;
    for k in [2usize, 3, 4] {
        let cfg = base_config(4, k);
        let t = tasks(k);
        let per_k = if k == 2 { 34 } else { 33 };
        for seed in 0..per_k {
            let g = gains_from_channels(&draw_channels(&cfg, 7000 + 100 * k as u64 + seed)).unwrap();
            let mm = solve_lcpa(&g, &cfg, &t, &MmOptions::default()).unwrap();
            for w in mm.history.windows(2) {
                worst_rise = worst_rise.max(w[1] - w[0]);
            }
            let sum: f64 = mm.powers.iter().sum();
            assert!((sum - cfg.total_power_w).abs() <= 1e-9 * cfg.total_power_w);
            assert!(mm.powers.iter().all(|&p| p >= 0.0));
            instances += 1;
        }
    }
    report(
        5,
        "MM objective is nonincreasing",
        worst_rise <= 1e-9,
        format!("{instances} instances, max step increase {worst_rise:.3e}"),
    );
}

#[test]
fn ac6_fit_recovery() {
    let grid = FitGridSpec::default();
    let mut details = Vec::new();
    let mut pass = true;
    for (a, b, sizes) in [(7.3, 0.69, [100.0, 150.0, 200.0, 300.0]), (5.2, 0.72, [30.0, 50.0, 100.0, 200.0])] {
        let pts: Vec<FitPoint> =
            sizes.iter().map(|&v: &f64| FitPoint { sample_size: v, observed_error: a * v.powf(-b) }).collect();
        let r = fit(&pts, &grid).unwrap();
        pass &= (r.a - a).abs() <= 0.01 && (r.b - b).abs() <= 0.001 && r.mse <= 1e-10;
        details.push(format!("({a}, {b}) -> ({:.4}, {:.5}) mse {:.1e}", r.a, r.b, r.mse));
    }
    report(6, "noiseless fit recovery", pass, details.join("; "));
}

fn trend_spec(axis: SweepAxis, values: Vec<f64>, n: usize) -> ExperimentSpec {
    ExperimentSpec {
        config: base_config(n, 2),
        tasks: tasks(2),
        schemes: Scheme::ALL.to_vec(),
        sweep_axis: axis,
        sweep_values: values,
        runs: 10,
        seed: 3,
        mm: MmOptions::default(),
        baseline_tol: 1e-9,
    }
}

/// (sweep value bits, scheme) -> modeled max error, read back from CSV.
fn read_errors(path: &Path) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["sweep_value", "scheme", "user", "power_mw", "modeled_max_error", "samples"]
    );
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if &rec[2] != "1" {
            continue;
        }
        out.entry(rec[1].to_string()).or_default().push((rec[0].parse().unwrap(), rec[4].parse().unwrap()));
    }
    out
}

fn check_trends(errors: &BTreeMap<String, Vec<(f64, f64)>>) -> (bool, String) {
    let mut ok = true;
    let mut notes = Vec::new();
    for (scheme, series) in errors {
        if !series.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1) {
            ok = false;
            notes.push(format!("{scheme} not strictly decreasing: {series:?}"));
        }
    }
    let lcpa = &errors["lcpa_mm"];
    let mut min_margin = f64::INFINITY;
    for (scheme, series) in errors {
        if scheme == "lcpa_mm" {
            continue;
        }
        for (i, &(_, e)) in series.iter().enumerate() {
            let margin = e - lcpa[i].1;
            min_margin = min_margin.min(margin);
            if margin < -1e-9 {
                ok = false;
                notes.push(format!("{scheme} beats lcpa_mm at {}: {e} < {}", series[i].0, lcpa[i].1));
            }
        }
    }
    notes.push(format!("min baseline - lcpa_mm margin {min_margin:.3e}"));
    (ok, notes.join("; "))
}

#[test]
fn ac7_sweep_trends() {
    let dir = tempfile::tempdir().unwrap();
    let t_csv = dir.path().join("t_sweep.csv");
    let n_csv = dir.path().join("n_sweep.csv");
    let t_rows =
        lcpa::run_experiment(&trend_spec(SweepAxis::TimeBudget, vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0], 4)).unwrap();
    let n_rows = lcpa::run_experiment(&trend_spec(SweepAxis::NumAntennas, vec![10.0, 20.0, 40.0, 100.0], 10)).unwrap();
    assert!(t_rows.iter().chain(&n_rows).all(|r| r.failure.is_none()));
    for row in t_rows.iter().chain(&n_rows) {
        assert!((row.mean_powers_mw.iter().sum::<f64>() - 20.0).abs() <= 1e-6, "{row:?}");
    }
    emit_csv(&t_rows, &t_csv).unwrap();
    emit_csv(&n_rows, &n_csv).unwrap();
    let (t_ok, t_note) = check_trends(&read_errors(&t_csv));
    let (n_ok, n_note) = check_trends(&read_errors(&n_csv));
    let cnn_at_20 =
        t_rows.iter().find(|r| r.scheme == Scheme::LcpaMm && r.sweep_value == 20.0).map(|r| r.mean_samples[0]).unwrap();
    report(
        7,
        "sweep trends and LCPA dominance",
        t_ok && n_ok,
        format!("T-sweep: {t_note}. N-sweep: {n_note}. LCPA collects {cnn_at_20:.0} CNN samples on average at T=20 s"),
    );
}

#[test]
fn ac8_closed_form_structure() {
    let cfg = base_config(10, 2);
    let t = tasks(2);
    let mut halving = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let task = if rng.gen::<bool>() { CNN } else { SVM };
        let g = 10f64.powf(rng.gen_range(-10.0..-8.0));
        let mu = rng.gen_range(0.01..0.2);
        let p1 = power_at_level(&task, g, &cfg, mu).unwrap();
        let p2 = power_at_level(&task, 2.0 * g, &cfg, mu).unwrap();
        if p1 > 0.0 && p1.is_finite() {
            halving = halving.max((p2 - 0.5 * p1).abs() / (0.5 * p1));
        }
    }
    let mut equalization = 0.0f64;
    for seed in 0..50 {
        let g = gains_from_channels(&draw_channels(&cfg, 300 + seed)).unwrap();
        let diag = g.diagonal();
        let sol = solve_asymptotic(&diag, &cfg, &t, DEFAULT_EPS).unwrap();
        for k in 0..2 {
            if sol.powers[k] > 0.0 {
                let task = &t[k];
                let v = cfg.bandwidth_time() / task.bits_per_sample as f64
                    * (1.0 + diag[k] * sol.powers[k] / cfg.noise_power_w).log2()
                    + task.initial_samples;
                let err = task.rho * task.a * v.powf(-task.b);
                equalization = equalization.max((err - sol.mu_star).abs() / sol.mu_star);
            }
        }
    }
    report(
        8,
        "closed-form scaling and error equalization",
        halving <= 1e-12 && equalization <= 1e-6,
        format!("max halving error {halving:.2e}, max equalization error {equalization:.2e}"),
    );
}

const SWEEP_CONFIG: &str = r#"
[system]
bandwidth_khz = 180
time_budget_s = 5
noise_power_dbm = -87
total_power_mw = 20
num_antennas = 4
path_loss_db = -100

[experiment]
schemes = ["lcpa_mm", "lcpa_asymptotic", "max_min", "sum_rate", "water_filling", "uniform"]
sweep_axis = "time_budget_s"
sweep_values = [5, 10, 20]
runs = 4
seed = 11

[[task]]
a = 7.3
b = 0.69
rho = 1.0
bits_per_sample = 6276
initial_samples = 300

[[task]]
a = 5.2
b = 0.72
rho = 1.2
bits_per_sample = 324
initial_samples = 200
"#;

#[test]
fn ac9_sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(&config, SWEEP_CONFIG).unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_lcpa"))
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        outputs.push(std::fs::read(&out).unwrap());
    }
    let spec = lcpa::config::load_spec(&config).unwrap();
    let seq = run_experiment_with(&spec, Execution::Sequential).unwrap();
    let seq_path = dir.path().join("seq.csv");
    emit_csv(&seq, &seq_path).unwrap();
    let seq_bytes = std::fs::read(&seq_path).unwrap();
    let identical = outputs[0] == outputs[1] && outputs[0] == seq_bytes;
    report(
        9,
        "byte-identical sweep output",
        identical && !outputs[0].is_empty(),
        format!("2 CLI runs + 1 sequential library run, {} bytes each", outputs[0].len()),
    );
}

#[test]
fn gain_matrix_from_diagonal_is_interference_free() {
    let g = GainMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
    assert_eq!(g.get(0, 1), 0.0);
    let cfg = base_config(4, 2);
    assert!(lcpa_objective(&g, &cfg, &tasks(2), &[0.01, 0.01]).unwrap() > 0.0);
}
