use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::sampler::{sample_paths, RngState, TimeGrid};

use super::{adam_step, rollout_loss, SolverConfig, SolverState};

const INIT_STREAM: u64 = 0;
const PATH_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub losses: Vec<f64>,
    /// θ_{u0} used at each iteration, recorded before the update.
    pub theta_u0: Vec<f64>,
    pub initial_value: f64,
    pub runtime_s: f64,
    pub value: f64,
    pub seed: u64,
}

/// Mean of θ_{u0} over iterations `[lo, hi)`.
pub fn extract_value(theta_u0: &[f64], window: (usize, usize)) -> Result<f64> {
    let (lo, hi) = window;
    if lo >= hi || hi > theta_u0.len() {
        return Err(Error::EmptyWindow {
            lo,
            hi,
            len: theta_u0.len(),
        });
    }
    Ok(theta_u0[lo..hi].iter().sum::<f64>() / (hi - lo) as f64)
}

/// Trains with `seed` and returns the trace.
pub fn train(config: &SolverConfig, problem: &dyn Problem, seed: u64) -> Result<TrainingTrace> {
    train_with_state(config, problem, seed).map(|(trace, _)| trace)
}

/// Like [`train`], also returning the final parameters.
pub fn train_with_state(
    config: &SolverConfig,
    problem: &dyn Problem,
    seed: u64,
) -> Result<(TrainingTrace, SolverState)> {
    config.validate()?;
    let schedule = config.lr_schedule_for(problem)?;
    let grid = TimeGrid::new(config.steps, problem.horizon())?;
    let mut state = SolverState::init(config, problem, &mut RngState::derived(seed, INIT_STREAM))?;
    let mut paths = RngState::derived(seed, PATH_STREAM);
    let initial_value = state.theta_u0_value();

    let mut losses = Vec::with_capacity(config.iterations);
    let mut thetas = Vec::with_capacity(config.iterations);
    let mut tape = Tape::new();
    // adam_step clears gradients after every update
    state.store.zero_grad();
    let start = Instant::now();
    for it in 0..config.iterations {
        state.iteration = it;
        let batch = sample_paths(problem, &grid, config.batch, &mut paths).map_err(|e| match e {
            Error::NonFiniteState { step } => Error::NonFiniteLoss { iteration: it, step },
            other => other,
        })?;
        tape.clear();
        let loss = rollout_loss(&mut tape, &state, &batch, problem, &grid)?;
        losses.push(tape.value(loss).data()[0]);
        thetas.push(state.theta_u0_value());
        tape.backward(loss, &mut state.store)?;
        if let Some(max) = config.clip_norm {
            state.store.clip_grad_norm(max);
        }
        adam_step(&mut state.store, schedule.rate_at(it), &config.adam, it as u64 + 1);
    }
    state.iteration = config.iterations;
    let runtime_s = start.elapsed().as_secs_f64();

    let value = if config.iterations == 0 {
        initial_value
    } else {
        extract_value(&thetas, config.averaging_window)?
    };
    let trace = TrainingTrace {
        losses,
        theta_u0: thetas,
        initial_value,
        runtime_s,
        value,
        seed,
    };
    Ok((trace, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::{NetworkConfig, TimeMode};
    use crate::problems::{AllenCahn, LinearQuadratic};

    #[test]
    fn window_means() {
        assert_eq!(extract_value(&[3.0; 10], (2, 8)).unwrap(), 3.0);
        let alt: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { 4.0 }).collect();
        assert_eq!(extract_value(&alt, (0, 10)).unwrap(), 2.5);
        assert!(matches!(extract_value(&alt, (5, 5)), Err(Error::EmptyWindow { .. })));
        assert!(extract_value(&alt, (5, 11)).is_err());
    }

    #[test]
    fn zero_iterations_return_the_initial_value() {
        let p = AllenCahn::new(4).unwrap();
        let cfg = SolverConfig::default().with_iterations(0);
        let t = train(&cfg, &p, 9).unwrap();
        assert!(t.losses.is_empty() && t.theta_u0.is_empty());
        assert_eq!(t.value, t.initial_value);
    }

    #[test]
    fn same_seed_same_trace() {
        let p = AllenCahn::new(5).unwrap();
        let cfg = SolverConfig {
            steps: 4,
            batch: 16,
            ..SolverConfig::default()
        }
        .with_iterations(30);
        let a = train(&cfg, &p, 3).unwrap();
        let b = train(&cfg, &p, 3).unwrap();
        assert_eq!(a.losses, b.losses);
        assert_eq!(a.theta_u0, b.theta_u0);
        assert_eq!(a.losses.len(), 30);
        let c = train(&cfg, &p, 4).unwrap();
        assert_ne!(a.losses, c.losses);
    }

    #[test]
    fn continuous_mode_trains_on_linear_quadratic() {
        let p = LinearQuadratic::new(4).unwrap();
        let cfg = SolverConfig {
            steps: 10,
            batch: 64,
            network: NetworkConfig {
                time_mode: TimeMode::Continuous,
                ..NetworkConfig::default()
            },
            ..SolverConfig::default()
        }
        .with_iterations(1500);
        let t = train(&cfg, &p, 1).unwrap();
        let exact = p.reference().unwrap();
        assert!(((t.value - exact) / exact).abs() < 0.02, "{} vs {exact}", t.value);
        assert!(t.losses.iter().all(|&l| l >= 0.0));
    }
}
