use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use glpen::calibration::{calibrate_from_cache, default_a_grid};
use glpen::experiments::{median_selected_h, theorem_check_many, write_csv};
use glpen::{
    check_assumptions, emit, make_density, oracle_constant, run_replicates, AssumptionConfig,
    BRule, DistanceCache, ExperimentConfig, Kernel,
};

#[derive(Parser)]
#[command(
    name = "glpen",
    version,
    about = "Bandwidth selection for kernel density estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated experiment: one record per (replicate, a).
    Run(ExperimentArgs),
    /// Select a bandwidth on one seeded sample.
    Select(ExperimentArgs),
    /// Sweep a on one seeded sample, find the jump, select with b = 2â.
    Calibrate(ExperimentArgs),
    /// Collapse frequency of the selection on the theorem bandwidth set.
    Theorem(ExperimentArgs),
    /// Numerical check of the kernel conditions.
    CheckKernel {
        /// Kernel name; all four when omitted.
        #[arg(long)]
        kernel: Option<Kernel>,
        #[arg(long, default_value_t = 2000)]
        grid_points: usize,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// key=value file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Test density id, 1..=6.
    #[arg(long)]
    density: Option<String>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    /// min:max:step
    #[arg(long)]
    a_grid: Option<String>,
    /// Comma-separated a values.
    #[arg(long, conflicts_with = "a_grid")]
    a: Option<String>,
    /// `a`, `calibrate`, or a fixed value.
    #[arg(long)]
    b: Option<String>,
    /// `sim`, `theorem`, or a file of bandwidths.
    #[arg(long)]
    bandwidths: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    /// Print the criterion table B, V, B + V for every bandwidth.
    #[arg(long)]
    dump_criterion: bool,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_kv_file(path)
                .with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("density", &self.density),
            ("kernel", &self.kernel),
            ("n", &self.n),
            ("replicates", &self.replicates),
            ("a-grid", &self.a_grid),
            ("a", &self.a),
            ("b", &self.b),
            ("bandwidths", &self.bandwidths),
            ("seed", &self.seed),
            ("out", &self.out),
            ("format", &self.format),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).with_context(|| format!("--{key}"))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(args: ExperimentArgs) -> Result<()> {
    let cfg = args.config()?;
    let records = run_replicates(&cfg)?;
    match &cfg.output {
        Some(_) => {
            let e = emit(&records, &cfg)?;
            eprintln!("wrote {} records to {}", records.len(), e.data.display());
        }
        None => write_csv(&records, io::stdout().lock())?,
    }
    let a_values = match cfg.b_rule {
        BRule::Calibrate => {
            let mut a: Vec<f64> = records.iter().map(|r| r.a).collect();
            a.sort_by(f64::total_cmp);
            a.dedup();
            a
        }
        _ => cfg.a_values.clone(),
    };
    for a in a_values {
        eprintln!(
            "a = {a}: C0 = {:.4}, median h = {}",
            oracle_constant(&records, a)?,
            median_selected_h(&records, a)?
        );
    }
    Ok(())
}

fn one_sample(cfg: &ExperimentConfig) -> Result<DistanceCache> {
    let sample = make_density(cfg.density_id)?.sample(cfg.n, cfg.base_seed)?;
    let grid = cfg.bandwidth_set.resolve(cfg.n)?;
    Ok(DistanceCache::build(&sample, &grid, cfg.kernel)?)
}

fn select(args: ExperimentArgs) -> Result<()> {
    let cfg = args.config()?;
    if cfg.a_values.len() != 1 {
        bail!("select needs exactly one a (use --a)");
    }
    let a = cfg.a_values[0];
    let b = match cfg.b_rule {
        BRule::EqualToA => a,
        BRule::Fixed(b) => b,
        BRule::Calibrate => bail!("use the calibrate subcommand"),
    };
    let result = one_sample(&cfg)?.select_two(a, b)?;
    let mut out = io::stdout().lock();
    if args.dump_criterion {
        writeln!(out, "h,B,V,crit")?;
        for row in &result.table {
            writeln!(out, "{},{},{},{}", row.h, row.b, row.v, row.crit)?;
        }
    }
    writeln!(out, "selected_h = {}", result.selected_h)?;
    Ok(())
}

fn calibrate(args: ExperimentArgs) -> Result<()> {
    let mut cfg = args.config()?;
    if args.a_grid.is_none() && args.a.is_none() && args.config.is_none() {
        cfg.a_values = default_a_grid();
    }
    let cal = calibrate_from_cache(&one_sample(&cfg)?, &cfg.a_values)?;
    match &cfg.output {
        Some(path) => cal.path.write_csv(std::fs::File::create(path)?)?,
        None => cal.path.write_csv(io::stdout().lock())?,
    }
    if args.dump_criterion {
        println!("h,B,V,crit");
        for row in &cal.result.table {
            println!("{},{},{},{}", row.h, row.b, row.v, row.crit);
        }
    }
    eprintln!(
        "a_hat = {}{}, b = {}, selected_h = {}",
        cal.a_hat,
        if cal.jump.no_jump { " (no jump)" } else { "" },
        cal.b,
        cal.result.selected_h
    );
    Ok(())
}

fn theorem(args: ExperimentArgs) -> Result<()> {
    let cfg = args.config()?;
    let freq = theorem_check_many(
        cfg.density_id,
        cfg.kernel,
        cfg.n,
        cfg.replicates,
        &cfg.a_values,
        cfg.base_seed,
    )?;
    println!("a,collapse_frequency");
    for (a, f) in cfg.a_values.iter().zip(freq) {
        println!("{a},{f}");
    }
    Ok(())
}

fn check_kernel(kernel: Option<Kernel>, grid_points: usize) -> Result<()> {
    let cfg = AssumptionConfig {
        grid_points,
        ..AssumptionConfig::default()
    };
    let kernels = kernel.map_or(Kernel::ALL.to_vec(), |k| vec![k]);
    let reports = kernels
        .into_iter()
        .map(|k| check_assumptions(k, &cfg))
        .collect::<glpen::Result<Vec<_>>>()?;
    serde_json::to_writer_pretty(io::stdout().lock(), &reports)?;
    println!();
    if reports.iter().any(|r| !r.all_pass()) {
        bail!("some kernel conditions failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Select(a) => select(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Theorem(a) => theorem(a),
        Command::CheckKernel {
            kernel,
            grid_points,
        } => check_kernel(kernel, grid_points),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
