//! Flat `key = value` configuration files mirroring the CLI flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::networks::{Activation, NetworkConfig, TimeMode};
use crate::solver::{LrSchedule, SolverConfig};

use super::experiment::{OutputFormat, ReferenceSource, RunSpec};

/// Every setting is optional so that a file and the command line can be
/// layered; [`ExperimentOptions::overlay`] lets the later layer win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOptions {
    pub problem: Option<String>,
    pub dim: Option<usize>,
    pub arch: Option<String>,
    pub mode: Option<TimeMode>,
    pub steps: Option<Vec<usize>>,
    pub batch: Option<usize>,
    pub basis: Option<usize>,
    pub activation: Option<Activation>,
    pub iters: Option<usize>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub lr: Option<LrSchedule>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub timing: Option<bool>,
    pub reference: Option<f64>,
    pub oracle_samples: Option<u64>,
    pub curves: Option<PathBuf>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

/// Comma-separated step counts, e.g. `10,20,40`.
pub fn parse_steps(value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|s| parse("steps", s.trim()))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean `{value}` for `{key}`"))),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl ExperimentOptions {
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut o = Self::default();
        for (k, v) in pairs {
            match k.as_str() {
                "problem" => o.problem = Some(v.clone()),
                "dim" => o.dim = Some(parse(k, v)?),
                "arch" => o.arch = Some(v.clone()),
                "mode" => o.mode = Some(v.parse()?),
                "steps" => o.steps = Some(parse_steps(v)?),
                "batch" => o.batch = Some(parse(k, v)?),
                "basis" => o.basis = Some(parse(k, v)?),
                "activation" => o.activation = Some(v.parse()?),
                "iters" => o.iters = Some(parse(k, v)?),
                "runs" => o.runs = Some(parse(k, v)?),
                "seed" => o.seed = Some(parse(k, v)?),
                "lr" => o.lr = Some(v.parse()?),
                "out" => o.out = Some(PathBuf::from(v)),
                "format" => o.format = Some(v.parse()?),
                "timing" => o.timing = Some(parse_bool(k, v)?),
                "reference" => o.reference = Some(parse(k, v)?),
                "oracle_samples" => o.oracle_samples = Some(parse(k, v)?),
                "curves" => o.curves = Some(PathBuf::from(v)),
                other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
            }
        }
        Ok(o)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_pairs(&parse_pairs(&std::fs::read_to_string(path)?)?)
    }

    /// Settings present in `top` replace those in `self`.
    pub fn overlay(self, top: Self) -> Self {
        Self {
            problem: top.problem.or(self.problem),
            dim: top.dim.or(self.dim),
            arch: top.arch.or(self.arch),
            mode: top.mode.or(self.mode),
            steps: top.steps.or(self.steps),
            batch: top.batch.or(self.batch),
            basis: top.basis.or(self.basis),
            activation: top.activation.or(self.activation),
            iters: top.iters.or(self.iters),
            runs: top.runs.or(self.runs),
            seed: top.seed.or(self.seed),
            lr: top.lr.or(self.lr),
            out: top.out.or(self.out),
            format: top.format.or(self.format),
            timing: top.timing.or(self.timing),
            reference: top.reference.or(self.reference),
            oracle_samples: top.oracle_samples.or(self.oracle_samples),
            curves: top.curves.or(self.curves),
        }
    }

    /// Fills unset fields with defaults: Allen-Cahn in dimension 100, XNet,
    /// discrete time, N = 20, five runs of 10,000 iterations.
    pub fn into_spec(self) -> Result<RunSpec> {
        let sweep = self.steps.unwrap_or_else(|| vec![20]);
        let defaults = SolverConfig::default();
        let mut solver = SolverConfig {
            network: NetworkConfig {
                architecture: self.arch.unwrap_or_else(|| "xnet".into()),
                time_mode: self.mode.unwrap_or(TimeMode::Discrete),
                basis: self.basis,
                activation: self.activation.unwrap_or(Activation::Relu),
                init_seed: 0,
            },
            steps: sweep[0],
            batch: self.batch.unwrap_or(defaults.batch),
            runs: self.runs.unwrap_or(defaults.runs),
            base_seed: self.seed.unwrap_or(0),
            lr_schedule: self.lr,
            ..defaults
        };
        if let Some(iters) = self.iters {
            solver = solver.with_iterations(iters);
        }
        let reference = match (self.reference, self.oracle_samples) {
            (Some(value), _) => ReferenceSource::Value { value },
            (None, Some(samples)) => ReferenceSource::Branching {
                samples,
                seed: solver.base_seed,
            },
            (None, None) => ReferenceSource::Problem,
        };
        let spec = RunSpec {
            problem: self.problem.unwrap_or_else(|| "allen_cahn".into()),
            dim: self.dim.unwrap_or(100),
            solver,
            sweep,
            reference,
            out: self.out,
            format: self.format.unwrap_or(OutputFormat::Csv),
            timing: self.timing.unwrap_or(true),
            curves: self.curves,
        };
        spec.validate()?;
        Ok(spec)
    }
}
