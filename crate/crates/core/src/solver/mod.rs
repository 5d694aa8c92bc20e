//! Deep BSDE rollout, loss, optimizer and training loop.

mod adam;
mod rollout;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::networks::{build_for_dim, Architecture, NetworkConfig, TimeMode};
use crate::problems::Problem;
use crate::sampler::RngState;

pub use adam::{adam_step, AdamConfig};
pub use rollout::{network_input, rollout_grad_check, rollout_loss};
pub use train::{extract_value, train, train_with_state, TrainingTrace};

/// Piecewise-constant learning rate: `(first iteration, rate)` pairs sorted
/// by iteration, the first starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pieces: Vec<(usize, f64)>,
}

impl LrSchedule {
    pub fn new(mut pieces: Vec<(usize, f64)>) -> Result<Self> {
        pieces.sort_by_key(|p| p.0);
        if pieces.first().map(|p| p.0) != Some(0) {
            return Err(Error::Config("learning-rate schedule must start at iteration 0".into()));
        }
        if pieces.iter().any(|p| !(p.1 > 0.0 && p.1.is_finite())) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        Ok(Self { pieces })
    }

    pub fn constant(rate: f64) -> Result<Self> {
        Self::new(vec![(0, rate)])
    }

    pub fn rate_at(&self, iteration: usize) -> f64 {
        self.pieces
            .iter()
            .rev()
            .find(|p| p.0 <= iteration)
            .map(|p| p.1)
            .unwrap_or(self.pieces[0].1)
    }

    pub fn pieces(&self) -> &[(usize, f64)] {
        &self.pieces
    }
}

/// Parses `"5e-3"` or `"0:5e-3,3000:5e-4"`.
impl FromStr for LrSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse learning-rate schedule `{s}`"));
        if !s.contains(':') {
            return Self::constant(s.trim().parse().map_err(|_| bad())?);
        }
        let pieces = s
            .split(',')
            .map(|piece| {
                let (it, rate) = piece.split_once(':').ok_or_else(bad)?;
                Ok((
                    it.trim().parse().map_err(|_| bad())?,
                    rate.trim().parse().map_err(|_| bad())?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pieces)
    }
}

impl fmt::Display for LrSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pieces.iter().map(|(i, r)| format!("{i}:{r:e}")).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub network: NetworkConfig,
    /// Number of time steps N.
    pub steps: usize,
    /// Paths per iteration M.
    pub batch: usize,
    pub iterations: usize,
    /// `None` uses the problem's default schedule.
    pub lr_schedule: Option<LrSchedule>,
    /// θ_{u0} is averaged over iterations `[lo, hi)`.
    pub averaging_window: (usize, usize),
    pub runs: usize,
    pub base_seed: u64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub adam: AdamConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            network: NetworkConfig::default(),
            steps: 20,
            batch: 64,
            iterations: 10_000,
            lr_schedule: None,
            averaging_window: (5_000, 10_000),
            runs: 5,
            base_seed: 0,
            clip_norm: Some(10.0),
            adam: AdamConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn time_mode(&self) -> TimeMode {
        self.network.time_mode
    }

    /// Sets the iteration budget and averages over its second half.
    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self.averaging_window = (iterations / 2, iterations);
        self
    }

    pub fn lr_schedule_for(&self, problem: &dyn Problem) -> Result<LrSchedule> {
        match &self.lr_schedule {
            Some(s) => Ok(s.clone()),
            None => LrSchedule::new(problem.default_lr_schedule()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.averaging_window;
        if lo > hi || hi > self.iterations {
            return Err(Error::Config(format!(
                "averaging window [{lo}, {hi}) must lie within [0, {}]",
                self.iterations
            )));
        }
        if self.runs == 0 || self.batch == 0 || self.steps == 0 {
            return Err(Error::Config("runs, batch and steps must all be at least 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config("clip norm must be positive".into()));
            }
        }
        Ok(())
    }

    /// Seed of independent run `run`.
    pub fn run_seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }
}

/// Trainable state: θ_{u0}, θ_{∇u0} and the gradient networks.
#[derive(Debug)]
pub struct SolverState {
    pub store: ParamStore,
    pub theta_u0: ParamId,
    pub theta_grad_u0: ParamId,
    /// Discrete mode: one entry per step `n = 1..N-1`. Continuous: exactly one.
    pub subnets: Vec<Vec<ParamId>>,
    pub architecture: Box<dyn Architecture>,
    pub time_mode: TimeMode,
    pub iteration: usize,
}

impl SolverState {
    /// Draws θ_{u0} from the problem's init range, sets θ_{∇u0} = 0 and
    /// initializes the networks, all from `rng`.
    pub fn init(config: &SolverConfig, problem: &dyn Problem, rng: &mut RngState) -> Result<Self> {
        let d = problem.dim();
        let architecture = build_for_dim(&config.network, d)?;
        let mut store = ParamStore::new();
        let (lo, hi) = problem.y0_init_range();
        let theta_u0 = store.insert("theta_u0", Tensor::scalar(rng.uniform(lo, hi)))?;
        let theta_grad_u0 = store.insert("theta_grad_u0", Tensor::zeros(&[d]))?;
        let prefixes: Vec<String> = match config.time_mode() {
            TimeMode::Discrete => (1..config.steps).map(|n| format!("net{n}")).collect(),
            TimeMode::Continuous => vec!["net".to_string()],
        };
        let mut subnets = Vec::with_capacity(prefixes.len());
        for prefix in prefixes {
            let ids = architecture
                .init(rng)
                .into_iter()
                .map(|(name, t)| store.insert(format!("{prefix}.{name}"), t))
                .collect::<Result<Vec<_>>>()?;
            subnets.push(ids);
        }
        Ok(Self {
            store,
            theta_u0,
            theta_grad_u0,
            subnets,
            architecture,
            time_mode: config.time_mode(),
            iteration: 0,
        })
    }

    pub fn theta_u0_value(&self) -> f64 {
        self.store.value(self.theta_u0).data()[0]
    }

    /// Parameters of the network consulted at step `n ≥ 1`.
    pub fn net_for_step(&self, n: usize) -> &[ParamId] {
        match self.time_mode {
            TimeMode::Discrete => &self.subnets[n - 1],
            TimeMode::Continuous => &self.subnets[0],
        }
    }

    /// All parameters as `(name, tensor)` pairs.
    pub fn named_parameters(&self) -> Vec<(String, Tensor)> {
        self.store
            .iter()
            .map(|(_, p)| (p.name.clone(), p.value.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::AllenCahn;

    #[test]
    fn schedule_parsing_and_lookup() {
        let s: LrSchedule = "0:5e-3,3000:5e-4".parse().unwrap();
        assert_eq!(s.rate_at(0), 5e-3);
        assert_eq!(s.rate_at(2999), 5e-3);
        assert_eq!(s.rate_at(3000), 5e-4);
        let c: LrSchedule = "0.01".parse().unwrap();
        assert_eq!(c.rate_at(123), 0.01);
        assert!("10:1e-3".parse::<LrSchedule>().is_err());
        assert!("abc".parse::<LrSchedule>().is_err());
        assert_eq!(s.to_string().parse::<LrSchedule>().unwrap(), s);
    }

    #[test]
    fn config_validation() {
        let c = SolverConfig::default();
        c.validate().unwrap();
        assert!(SolverConfig { averaging_window: (5000, 20_000), ..c.clone() }.validate().is_err());
        assert!(SolverConfig { runs: 0, ..c.clone() }.validate().is_err());
        assert!(SolverConfig { batch: 0, ..c.clone() }.validate().is_err());
        let short = c.with_iterations(3000);
        assert_eq!(short.averaging_window, (1500, 3000));
        short.validate().unwrap();
    }

    #[test]
    fn discrete_state_has_n_minus_one_subnets() {
        let p = AllenCahn::new(3).unwrap();
        let cfg = SolverConfig {
            steps: 5,
            ..SolverConfig::default()
        };
        let s = SolverState::init(&cfg, &p, &mut RngState::new(0)).unwrap();
        assert_eq!(s.subnets.len(), 4);
        assert_eq!(s.store.value(s.theta_grad_u0).data(), &[0.0; 3]);
        let y0 = s.theta_u0_value();
        assert!((0.0..0.2).contains(&y0));

        let cont = SolverConfig {
            network: NetworkConfig {
                time_mode: TimeMode::Continuous,
                ..NetworkConfig::default()
            },
            ..cfg
        };
        let s = SolverState::init(&cont, &p, &mut RngState::new(0)).unwrap();
        assert_eq!(s.subnets.len(), 1);
        assert_eq!(s.net_for_step(3), s.net_for_step(1));
    }
}
