use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{branching_estimate, BranchingConfig, OracleTarget};
use crate::problems::{by_name, Problem};
use crate::solver::{train, SolverConfig, TrainingTrace};

use super::emit::write_loss_curve;
use super::metrics::{error_order, mean, relative_error, sample_std};

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "DEEPBSDE_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::UnknownName {
                kind: "format",
                name: other.into(),
                known: "csv, json".into(),
            }),
        }
    }
}

/// Where the reference value for relative errors comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ReferenceSource {
    /// The problem's built-in reference, if it has one.
    Problem,
    Value { value: f64 },
    /// Branching-diffusion estimate computed before training.
    Branching { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub problem: String,
    pub dim: usize,
    pub solver: SolverConfig,
    /// Time-step counts, one table row each.
    pub sweep: Vec<usize>,
    pub reference: ReferenceSource,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// When false, runtimes are reported as 0 so output is reproducible
    /// byte for byte.
    pub timing: bool,
    /// Directory for per-run loss curves.
    pub curves: Option<PathBuf>,
}

impl RunSpec {
    pub fn new(problem: impl Into<String>, dim: usize, solver: SolverConfig) -> Self {
        let sweep = vec![solver.steps];
        Self {
            problem: problem.into(),
            dim,
            solver,
            sweep,
            reference: ReferenceSource::Problem,
            out: None,
            format: OutputFormat::Csv,
            timing: true,
            curves: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        by_name(&self.problem, self.dim)?;
        if self.sweep.is_empty() || self.sweep.contains(&0) {
            return Err(Error::Config("sweep needs at least one positive step count".into()));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub steps: usize,
    /// Mean training time per run.
    pub runtime_s: f64,
    /// Mean of the per-run values.
    pub value: f64,
    pub rel_error: Option<f64>,
    /// Order against the previous row; only set when the step count doubled.
    pub error_order: Option<f64>,
    /// Sample standard deviation of the per-run values.
    pub std_dev: f64,
    pub seed: u64,
    pub run_values: Vec<f64>,
    pub run_runtimes: Vec<f64>,
    pub run_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub reference: Option<f64>,
}

/// Rayon pool sized by `DEEPBSDE_WORKERS`, or the default size when unset.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::Config(e.to_string()))
}

pub fn resolve_reference(source: &ReferenceSource, problem: &dyn Problem) -> Result<Option<f64>> {
    match source {
        ReferenceSource::Problem => Ok(problem.reference()),
        ReferenceSource::Value { value } => Ok(Some(*value)),
        ReferenceSource::Branching { samples, seed } => {
            let poly = problem.polynomial_generator().ok_or_else(|| {
                Error::Unsupported(format!("{} has no polynomial generator", problem.name()))
            })?;
            let target = OracleTarget::from_problem(problem)?;
            let cfg = BranchingConfig::for_polynomial(poly, *samples);
            Ok(Some(branching_estimate(&target, &cfg, *seed)?.mean))
        }
    }
}

/// Trains `runs` models per sweep entry and aggregates them into rows in
/// sweep order. Run `r` uses seed `base_seed + r` for every step count.
pub fn run_experiment(spec: &RunSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let problem = by_name(&spec.problem, spec.dim)?;
    let reference = resolve_reference(&spec.reference, problem.as_ref())?;
    let runs = spec.solver.runs;
    let tasks: Vec<(usize, usize)> = spec
        .sweep
        .iter()
        .flat_map(|&n| (0..runs).map(move |r| (n, r)))
        .collect();
    let pool = worker_pool()?;
    let traces: Vec<Result<TrainingTrace>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(steps, run)| {
                let cfg = SolverConfig {
                    steps,
                    ..spec.solver.clone()
                };
                train(&cfg, problem.as_ref(), cfg.run_seed(run)).map_err(|e| Error::RunFailed {
                    run,
                    steps,
                    source: Box::new(e),
                })
            })
            .collect()
    });
    let traces = traces.into_iter().collect::<Result<Vec<_>>>()?;

    if let Some(dir) = &spec.curves {
        std::fs::create_dir_all(dir)?;
        for (&(steps, run), trace) in tasks.iter().zip(&traces) {
            write_loss_curve(&dir.join(format!("loss_n{steps}_run{run}.txt")), trace)?;
        }
    }

    let mut rows: Vec<ResultRow> = Vec::with_capacity(spec.sweep.len());
    for (i, chunk) in traces.chunks(runs).enumerate() {
        let steps = spec.sweep[i];
        let run_values: Vec<f64> = chunk.iter().map(|t| t.value).collect();
        let run_runtimes: Vec<f64> = chunk
            .iter()
            .map(|t| if spec.timing { t.runtime_s } else { 0.0 })
            .collect();
        let value = mean(&run_values);
        let rel_error = reference.map(|r| relative_error(value, r)).transpose()?;
        let error_order = match (rows.last(), rel_error) {
            (Some(prev), Some(fine)) => match prev.rel_error {
                Some(coarse) if steps == 2 * prev.steps && coarse > 0.0 && fine > 0.0 => {
                    Some(error_order((prev.steps, coarse), (steps, fine))?)
                }
                _ => None,
            },
            _ => None,
        };
        rows.push(ResultRow {
            steps,
            runtime_s: mean(&run_runtimes),
            value,
            rel_error,
            error_order,
            std_dev: sample_std(&run_values),
            seed: spec.solver.base_seed,
            run_values,
            run_runtimes,
            run_seeds: chunk.iter().map(|t| t.seed).collect(),
        });
    }
    Ok(ExperimentOutput { rows, reference })
}
