use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use deepbsde::harness::{
    approx_benchmark, format_sci, gradient_suite, relative_error, render, run_experiment, write_error_curve,
    write_loss_curve, ApproxConfig, ApproxTarget, ExperimentOptions, OutputFormat,
};
use deepbsde::networks::{write_archive, Activation, TimeMode};
use deepbsde::oracle::{branching_estimate, feynman_kac_linear, BranchingConfig, OracleTarget};
use deepbsde::problems::by_name;
use deepbsde::solver::{train_with_state, LrSchedule};
use deepbsde::Result;

#[derive(Parser)]
#[command(name = "deepbsde", version, about = "Deep BSDE solver for high-dimensional semilinear parabolic PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a single model and print its value estimate.
    Solve {
        #[command(flatten)]
        opts: ExperimentArgs,
        /// Write the trained parameters to this archive.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Run a step-count sweep with several runs per row and emit a table.
    Table {
        #[command(flatten)]
        opts: ExperimentArgs,
    },
    /// Monte Carlo reference value without training.
    Oracle(OracleArgs),
    /// Fit XNets with growing kernel counts to a 1-d function.
    Approx(ApproxArgs),
    /// Randomized finite-difference checks of the rollout gradient.
    Check {
        #[arg(long, default_value_t = 20)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
    },
}

#[derive(Args, Default)]
struct ExperimentArgs {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Network architecture: xnet or two-layer.
    #[arg(long)]
    arch: Option<String>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<TimeMode>,
    /// Time steps; a comma-separated list gives a sweep.
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    batch: Option<usize>,
    /// XNet kernel count L (defaults to d).
    #[arg(long)]
    basis: Option<usize>,
    #[arg(long, value_parser = parse_activation)]
    activation: Option<Activation>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Constant rate (`1e-3`) or schedule (`0:5e-3,3000:5e-4`).
    #[arg(long, value_parser = parse_lr)]
    lr: Option<LrSchedule>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Report runtimes as 0 so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
    /// Relative errors against this value instead of the problem's reference.
    #[arg(long)]
    reference: Option<f64>,
    /// Relative errors against a branching-diffusion estimate with this many samples.
    #[arg(long)]
    oracle_samples: Option<u64>,
    /// Directory for loss curves and the error-against-steps file.
    #[arg(long)]
    curves: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<TimeMode, String> {
    s.parse().map_err(|e: deepbsde::Error| e.to_string())
}

fn parse_activation(s: &str) -> std::result::Result<Activation, String> {
    s.parse().map_err(|e: deepbsde::Error| e.to_string())
}

fn parse_lr(s: &str) -> std::result::Result<LrSchedule, String> {
    s.parse().map_err(|e: deepbsde::Error| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    s.parse().map_err(|e: deepbsde::Error| e.to_string())
}

impl ExperimentArgs {
    fn into_options(self) -> Result<ExperimentOptions> {
        let file = match &self.config {
            Some(p) => ExperimentOptions::from_file(p)?,
            None => ExperimentOptions::default(),
        };
        let cli = ExperimentOptions {
            problem: self.problem,
            dim: self.dim,
            arch: self.arch,
            mode: self.mode,
            steps: self.steps.as_deref().map(deepbsde::harness::parse_steps).transpose()?,
            batch: self.batch,
            basis: self.basis,
            activation: self.activation,
            iters: self.iters,
            runs: self.runs,
            seed: self.seed,
            lr: self.lr,
            out: self.out,
            format: self.format,
            timing: self.no_timing.then_some(false),
            reference: self.reference,
            oracle_samples: self.oracle_samples,
            curves: self.curves,
        };
        Ok(file.overlay(cli))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMethod {
    Branching,
    FeynmanKac,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value = "allen_cahn")]
    problem: String,
    #[arg(long, default_value_t = 100)]
    dim: usize,
    #[arg(long, value_enum, default_value_t = OracleMethod::Branching)]
    method: OracleMethod,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exponential branching rate β.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    #[arg(long, default_value_t = 10_000)]
    max_particles: usize,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long, default_value = "exp")]
    target: String,
    /// Comma-separated kernel counts.
    #[arg(long, default_value = "4,8,16")]
    basis: String,
    #[arg(long, default_value_t = 20_000)]
    iters: usize,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn solve(opts: ExperimentArgs, save: Option<PathBuf>) -> Result<()> {
    let spec = opts.into_options()?.into_spec()?;
    let problem = by_name(&spec.problem, spec.dim)?;
    let (trace, state) = train_with_state(&spec.solver, problem.as_ref(), spec.solver.base_seed)?;
    let reference = deepbsde::harness::resolve_reference(&spec.reference, problem.as_ref())?;
    if let Some(path) = &save {
        write_archive(path, &state.named_parameters())?;
    }
    if let Some(dir) = &spec.curves {
        std::fs::create_dir_all(dir)?;
        write_loss_curve(&dir.join("loss.txt"), &trace)?;
    }
    let rel = reference.map(|r| relative_error(trace.value, r)).transpose()?;
    let record = json!({
        "problem": spec.problem,
        "dim": spec.dim,
        "architecture": spec.solver.network.architecture,
        "time_mode": spec.solver.time_mode(),
        "steps": spec.solver.steps,
        "iterations": spec.solver.iterations,
        "seed": trace.seed,
        "value": trace.value,
        "reference": reference,
        "rel_error": rel,
        "final_loss": trace.losses.last(),
        "runtime_s": if spec.timing { trace.runtime_s } else { 0.0 },
    });
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(())
}

fn table(opts: ExperimentArgs) -> Result<()> {
    let spec = opts.into_options()?.into_spec()?;
    let output = run_experiment(&spec)?;
    let text = render(&output.rows, output.reference, &spec, spec.format)?;
    if let Some(dir) = &spec.curves {
        write_error_curve(&dir.join("error_vs_steps.txt"), &output.rows)?;
    }
    match &spec.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let problem = by_name(&args.problem, args.dim)?;
    let target = OracleTarget::from_problem(problem.as_ref())?;
    let (method, estimate) = match args.method {
        OracleMethod::Branching => {
            let poly = problem.polynomial_generator().ok_or_else(|| {
                deepbsde::Error::Unsupported(format!("{} has no polynomial generator", problem.name()))
            })?;
            let cfg = BranchingConfig {
                branch_rate: args.rate,
                max_particles: args.max_particles,
                ..BranchingConfig::for_polynomial(poly, args.samples)
            };
            ("branching", branching_estimate(&target, &cfg, args.seed)?)
        }
        OracleMethod::FeynmanKac => ("feynman_kac", feynman_kac_linear(&target, args.samples, args.seed)?),
    };
    let record = json!({
        "problem": problem.name(),
        "dim": args.dim,
        "method": method,
        "estimate": estimate,
    });
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(())
}

fn approx(args: ApproxArgs) -> Result<()> {
    let target: ApproxTarget = args.target.parse()?;
    let cfg = ApproxConfig {
        iterations: args.iters,
        restarts: args.restarts,
        seed: args.seed,
        ..ApproxConfig::new(target, deepbsde::harness::parse_steps(&args.basis)?)
    };
    println!("basis,max_abs_error,l2_error");
    for row in approx_benchmark(&cfg)? {
        println!("{},{},{}", row.basis, format_sci(row.max_abs_error), format_sci(row.l2_error));
    }
    Ok(())
}

fn check(cases: usize, seed: u64, tolerance: f64) -> Result<bool> {
    let mut ok = true;
    for c in gradient_suite(cases, seed, 1e-6)? {
        let pass = c.max_rel_deviation <= tolerance;
        ok &= pass;
        println!(
            "{} {} {} {} d={} N={} M={} max_rel_dev={}",
            if pass { "PASS" } else { "FAIL" },
            c.problem,
            c.architecture,
            c.time_mode,
            c.dim,
            c.steps,
            c.batch,
            format_sci(c.max_rel_deviation)
        );
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { opts, save } => solve(opts, save).map(|_| true),
        Command::Table { opts } => table(opts).map(|_| true),
        Command::Oracle(args) => oracle(args).map(|_| true),
        Command::Approx(args) => approx(args).map(|_| true),
        Command::Check {
            cases,
            seed,
            tolerance,
        } => check(cases, seed, tolerance),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
