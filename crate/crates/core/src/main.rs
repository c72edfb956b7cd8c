use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use lcpa::config::load_spec;
use lcpa::error_model::{fit, read_fit_points, FitGridSpec};
use lcpa::harness::{
    allocate, emit_csv, evaluate, run_experiment, write_csv, ExperimentSpec, Scheme, SweepAxis, REPORT_NOTE,
};
use lcpa::mm_solver::solve_lcpa;
use lcpa::oracle::{lcpa_grid, max_min_grid, worst_error};
use lcpa::{draw_channels, gains_from_channels, max_min_fairness, solve_asymptotic};

#[derive(Parser)]
#[command(name = "lcpa", version, about = "Learning-centric uplink power allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit (a, b) of the error model to a `sample_size,error` CSV.
    Fit(FitArgs),
    /// Draw one channel and print every scheme's allocation.
    Allocate(SpecArgs),
    /// Run a Monte-Carlo sweep and write the CSV table.
    Sweep(SpecArgs),
    /// Compare the solvers against exhaustive 1-D grids on two-user draws.
    Oracle(SpecArgs),
}

#[derive(Args)]
struct FitArgs {
    /// CSV file with header `sample_size,error`.
    points: PathBuf,
    #[arg(long)]
    a_max: Option<f64>,
    #[arg(long)]
    a_step: Option<f64>,
    #[arg(long)]
    b_max: Option<f64>,
    #[arg(long)]
    b_step: Option<f64>,
    #[arg(long)]
    refine_rounds: Option<u32>,
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Comma-separated scheme names.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// `time_budget_s` or `num_antennas`.
    #[arg(long)]
    sweep_axis: Option<String>,
    /// Comma-separated, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    sweep_values: Option<Vec<f64>>,
}

impl SpecArgs {
    fn load(&self) -> anyhow::Result<ExperimentSpec> {
        let mut spec = load_spec(&self.config)?;
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if let Some(runs) = self.runs {
            spec.runs = runs;
        }
        if let Some(names) = &self.schemes {
            spec.schemes = names.iter().map(|s| s.parse()).collect::<Result<Vec<Scheme>, _>>()?;
        }
        if let Some(axis) = &self.sweep_axis {
            spec.sweep_axis = axis.parse::<SweepAxis>()?;
            if self.sweep_values.is_none() {
                spec.sweep_values = vec![spec.sweep_axis.current(&spec.config)];
            }
        }
        if let Some(values) = &self.sweep_values {
            spec.sweep_values = values.clone();
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn run_fit(args: &FitArgs) -> anyhow::Result<()> {
    let points = read_fit_points(&args.points)?;
    let mut grid = FitGridSpec::default();
    if let Some(v) = args.a_max {
        grid.a_max = v;
    }
    if let Some(v) = args.a_step {
        grid.a_step = v;
    }
    if let Some(v) = args.b_max {
        grid.b_max = v;
    }
    if let Some(v) = args.b_step {
        grid.b_step = v;
    }
    if let Some(v) = args.refine_rounds {
        grid.refine_rounds = v;
    }
    let r = fit(&points, &grid)?;
    let (da, db) = grid.final_steps();
    println!("a = {:.4}  b = {:.5}  mse = {:.6e}  (resolution a {da}, b {db})", r.a, r.b, r.mse);
    Ok(())
}

fn run_allocate(args: &SpecArgs) -> anyhow::Result<()> {
    let spec = args.load()?;
    let config = spec.sweep_axis.apply(&spec.config, spec.sweep_values[0])?;
    let g = gains_from_channels(&draw_channels(&config, spec.seed))?;
    println!("{REPORT_NOTE}");
    println!("seed {} with {} = {}", spec.seed, spec.sweep_axis.as_str(), spec.sweep_values[0]);
    for &scheme in &spec.schemes {
        let result = allocate(scheme, &g, &config, &spec.tasks, &spec.mm, spec.baseline_tol)
            .and_then(|p| evaluate(&g, &config, &spec.tasks, p));
        match result {
            Ok(ev) => {
                let powers: Vec<String> = ev.powers_w.iter().map(|p| format!("{:.4}", p * 1e3)).collect();
                let samples: Vec<String> = ev.samples.iter().map(|s| format!("{s:.0}")).collect();
                println!(
                    "{:<16} powers_mw [{}]  modeled_max_error {:.6}  samples [{}]",
                    scheme.as_str(),
                    powers.join(", "),
                    ev.modeled_max_error,
                    samples.join(", ")
                );
            }
            Err(e) => println!("{:<16} FAILED: {e}", scheme.as_str()),
        }
    }
    Ok(())
}

fn run_sweep(args: &SpecArgs) -> anyhow::Result<()> {
    let spec = args.load()?;
    let rows = run_experiment(&spec)?;
    for row in rows.iter().filter(|r| r.failure.is_some()) {
        eprintln!(
            "warning: {} at {} = {} failed: {}",
            row.scheme,
            spec.sweep_axis.as_str(),
            row.sweep_value,
            row.failure.as_deref().unwrap_or_default()
        );
    }
    match &args.out {
        Some(path) => {
            emit_csv(&rows, path)?;
            println!("{REPORT_NOTE}");
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => {
            println!("{REPORT_NOTE}");
            write_csv(&rows, std::io::stdout().lock()).context("writing CSV to stdout")?;
        }
    }
    Ok(())
}

fn run_oracle(args: &SpecArgs) -> anyhow::Result<()> {
    let spec = args.load()?;
    if spec.tasks.len() != 2 {
        bail!("oracle needs a two-user config, got {} users", spec.tasks.len());
    }
    let config = spec.sweep_axis.apply(&spec.config, spec.sweep_values[0])?;
    let budget = config.total_power_w;
    let step = 1e-4;
    println!("run  lcpa_gap        max_min_gap     asym_vs_mm_power/P");
    let (mut worst_lcpa, mut worst_mm, mut worst_asym) = (0.0f64, 0.0f64, 0.0f64);
    for run in 0..spec.runs {
        let g = gains_from_channels(&draw_channels(&config, spec.run_seed(run)))?;
        let mm = solve_lcpa(&g, &config, &spec.tasks, &spec.mm)?;
        let grid = lcpa_grid(&g, &config, &spec.tasks, step)?;
        let lcpa_gap = worst_error(&g, &config, &spec.tasks, &mm.powers)? - grid.value;

        let fair = max_min_fairness(&g, &config, spec.baseline_tol)?;
        let mm_gap = max_min_grid(&g, &config, step)?.value - fair.objective;

        let diag = g.diagonal_only();
        let asym = solve_asymptotic(&diag.diagonal(), &config, &spec.tasks, lcpa::asymptotic::DEFAULT_EPS)?;
        let mm_diag = solve_lcpa(&diag, &config, &spec.tasks, &spec.mm)?;
        let asym_gap = asym.powers.iter().zip(&mm_diag.powers).map(|(a, b)| (a - b).abs() / budget).fold(0.0, f64::max);

        println!("{run:<4} {lcpa_gap:<+15.3e} {mm_gap:<+15.3e} {asym_gap:.3e}");
        worst_lcpa = worst_lcpa.max(lcpa_gap.abs());
        worst_mm = worst_mm.max(mm_gap.abs());
        worst_asym = worst_asym.max(asym_gap);
    }
    println!("max  {worst_lcpa:<15.3e} {worst_mm:<15.3e} {worst_asym:.3e}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Allocate(args) => run_allocate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Oracle(args) => run_oracle(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
