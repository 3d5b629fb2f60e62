use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lrmc_core::diagnostics::{write_checks_csv, CheckSummary, CHECK_HEADER};
use lrmc_core::harness::{
    emit_report, parse_config, run_check_suite, run_sweep_with, summary_text, write_run_files, CheckScale, Cell,
    ExperimentConfig, RunResult, FALLBACK_OUTPUT_DIR, OUTPUT_DIR_ENV,
};
use lrmc_core::problem::{generate_ground_truth, incoherence, project_omega, sample_mask};
use lrmc_core::solver::metrics::relative_recovery_error;
use lrmc_core::solver::{
    contraction_factor, default_step_size, run_observed, spectral_init_detailed, write_trajectory_csv, SolverConfig,
    Variant,
};

/// Low-rank matrix completion by gradient descent.
///
/// Output directory: `--out`, else `output_dir` from the config (for `run`),
/// else the `LRMC_OUTPUT_DIR` environment variable, else `lrmc-out`.
#[derive(Parser)]
#[command(name = "lrmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file and write the report.
    Run(RunArgs),
    /// Run the diagnostics suite and write checks.csv.
    Check(CheckArgs),
    /// One annotated solver run.
    Demo(DemoArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the planned runs and exit.
    #[arg(long)]
    dry_run: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// Smaller instances, a few seconds.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoVariant {
    Vanilla,
    Projected,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 120)]
    n1: usize,
    #[arg(long, default_value_t = 100)]
    n2: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.4)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = DemoVariant::Vanilla)]
    variant: DemoVariant,
    #[arg(long, default_value_t = 50_000)]
    max_iters: usize,
    /// Print a line every this many iterations.
    #[arg(long, default_value_t = 1000)]
    every: usize,
    /// Also write trajectory.csv here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_out(cli: Option<PathBuf>) -> PathBuf {
    cli.or_else(|| std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
}

fn cell_text(c: &Cell) -> String {
    format!("n1={} n2={} r={} kappa={} p={}", c.n1, c.n2, c.r, c.kappa, c.p)
}

fn dry_run(cfg: &ExperimentConfig, out: &Path) {
    let cells = cfg.cells();
    for (i, c) in cells.iter().enumerate() {
        println!("cell {i}: {}", cell_text(c));
    }
    println!("seeds: {:?}", cfg.seeds);
    println!("variant: {}", cfg.variant.name());
    println!("output: {}", out.display());
    println!("planned runs: {}", cfg.planned_runs());
}

fn run(args: RunArgs) -> lrmc_core::Result<ExitCode> {
    let cfg = parse_config(&args.config)?;
    let out = cfg.resolve_output_dir(args.out.as_deref());
    if args.dry_run {
        dry_run(&cfg, &out);
        return Ok(ExitCode::SUCCESS);
    }
    let total = cfg.planned_runs();
    let done = AtomicUsize::new(0);
    let on_run = |cell: &Cell, run: &RunResult| {
        let k = done.fetch_add(1, Ordering::SeqCst) + 1;
        let status = match &run.outcome {
            Ok(s) => format!("rel_err={:.3e} iters={} success={}", s.final_rel_err, s.iterations, s.success),
            Err(e) => format!("failed: {e}"),
        };
        eprintln!("[{k}/{total}] cell {} ({}) seed {} {}: {status}", run.cell_index, cell_text(cell), run.seed, run.variant.name());
        if let Err(e) = write_run_files(&out, run) {
            eprintln!("warning: {e}");
        }
    };
    let results = run_sweep_with(&cfg, args.threads, &on_run)?;
    emit_report(&results, &out)?;
    print!("{}", summary_text(&results));
    println!("report written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn check(args: CheckArgs) -> lrmc_core::Result<ExitCode> {
    let scale = if args.quick { CheckScale::Quick } else { CheckScale::Full };
    let checks: Vec<CheckSummary> = run_check_suite(scale, args.seed)?;
    println!("{CHECK_HEADER}");
    for c in &checks {
        println!("{}", c.to_csv_line());
    }
    let out = default_out(args.out);
    std::fs::create_dir_all(&out).map_err(|e| lrmc_core::Error::io(&out, e))?;
    let path = out.join("checks.csv");
    let file = std::fs::File::create(&path).map_err(|e| lrmc_core::Error::io(&path, e))?;
    write_checks_csv(&checks, file)?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {failed} failed; written to {}", checks.len(), path.display());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn demo(args: DemoArgs) -> lrmc_core::Result<ExitCode> {
    let gt = generate_ground_truth(args.n1, args.n2, args.r, args.kappa, args.seed)?;
    let mask = sample_mask(args.n1, args.n2, args.p, args.seed.wrapping_add(1))?;
    let observed = project_omega(&gt.matrix(), &mask)?;
    let init = spectral_init_detailed(&observed, &mask, args.r)?;
    let (s1, sr) = (init.singulars[0], init.singulars[args.r - 1]);
    let (eta_lo, eta_hi) = default_step_size(s1, sr)?;
    let rho = contraction_factor(eta_hi, gt.sigma_min());
    let dof = args.r * (args.n1 + args.n2 - args.r);

    println!("instance: {}x{} rank {} kappa {} seed {}", args.n1, args.n2, args.r, args.kappa, args.seed);
    println!("planted singular values: {:?}", gt.singulars);
    println!(
        "incoherence: mu(U)={:.3} mu(V)={:.3}",
        incoherence(&gt.left_basis)?,
        incoherence(&gt.right_basis)?
    );
    println!("observed: {} of {} entries (p={}), degrees of freedom {dof}", mask.len(), args.n1 * args.n2, args.p);
    println!("spectral init singular values: {:?}", init.singulars);
    println!("step size window [{eta_lo:.4e}, {eta_hi:.4e}], using {eta_hi:.4e}; contraction rho={rho:.8}");

    let variant = match args.variant {
        DemoVariant::Vanilla => Variant::Vanilla,
        DemoVariant::Projected => Variant::Projected,
    };
    let cfg = SolverConfig { max_iters: args.max_iters, ..SolverConfig::default() };
    let m = gt.matrix();
    let root_sr = gt.sigma_min().sqrt();
    println!("{:>8} {:>12} {:>12}", "iter", "rel_err", "envelope");
    let out = run_observed(&gt, &mask, &cfg, variant, |t, fp| {
        if t % args.every == 0 {
            println!("{t:>8} {:>12.4e} {:>12.4e}", relative_recovery_error(fp, &m)?, rho.powf(t as f64) * root_sr);
        }
        Ok(())
    })?;
    let last = out.records.last().expect("at least one record");
    println!(
        "stopped at iteration {} ({}): aligned error {:.3e}, relative error {:.3e}, balance gap {:.3e}",
        out.iterations,
        if out.stopped_early { "tolerance reached" } else { "iteration cap" },
        last.aligned_frob_err,
        out.relative_error,
        last.balance_gap
    );
    if variant == Variant::Projected {
        println!("rows clipped by the projection: {}", out.clipped_rows);
    }
    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir).map_err(|e| lrmc_core::Error::io(&dir, e))?;
        let path = dir.join("trajectory.csv");
        let file = std::fs::File::create(&path).map_err(|e| lrmc_core::Error::io(&path, e))?;
        write_trajectory_csv(&out.records, file)?;
        println!("trajectory written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Check(a) => check(a),
        Command::Demo(a) => demo(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
