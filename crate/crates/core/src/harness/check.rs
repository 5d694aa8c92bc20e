//! Randomized finite-difference checks of the rollout gradient.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::networks::{Activation, NetworkConfig, TimeMode};
use crate::problems::by_name;
use crate::sampler::RngState;
use crate::solver::{rollout_grad_check, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCase {
    pub problem: String,
    pub architecture: String,
    pub time_mode: TimeMode,
    pub activation: Activation,
    pub dim: usize,
    pub steps: usize,
    pub batch: usize,
    pub seed: u64,
    pub max_rel_deviation: f64,
}

const PROBLEMS: [&str; 3] = ["allen_cahn", "pricing_diffrate", "linear_quadratic"];
const ARCHS: [&str; 2] = ["xnet", "two-layer"];

/// `cases` random configurations with `d ≤ 5`, `N ≤ 3`, `M ≤ 8`, cycling
/// through every architecture and time mode.
pub fn gradient_suite(cases: usize, seed: u64, step: f64) -> Result<Vec<GradCase>> {
    let mut rng = RngState::new(seed);
    let mut out = Vec::with_capacity(cases);
    for i in 0..cases {
        let problem = PROBLEMS[(rng.unit() * PROBLEMS.len() as f64) as usize];
        let architecture = ARCHS[i % 2];
        let time_mode = if (i / 2) % 2 == 0 {
            TimeMode::Discrete
        } else {
            TimeMode::Continuous
        };
        let activation = if rng.unit() < 0.5 {
            Activation::Relu
        } else {
            Activation::Tanh
        };
        let dim = 1 + (rng.unit() * 5.0) as usize;
        let steps = 1 + (rng.unit() * 3.0) as usize;
        let batch = 1 + (rng.unit() * 8.0) as usize;
        let case_seed = seed.wrapping_mul(1000).wrapping_add(i as u64);
        let cfg = SolverConfig {
            network: NetworkConfig {
                architecture: architecture.into(),
                time_mode,
                basis: None,
                activation,
                init_seed: 0,
            },
            steps,
            batch,
            ..SolverConfig::default()
        };
        let p = by_name(problem, dim)?;
        let report = rollout_grad_check(&cfg, p.as_ref(), case_seed, step)?;
        out.push(GradCase {
            problem: problem.into(),
            architecture: architecture.into(),
            time_mode,
            activation,
            dim,
            steps,
            batch,
            seed: case_seed,
            max_rel_deviation: report.max_rel_deviation(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_covers_both_architectures_and_modes() {
        let cases = gradient_suite(4, 1, 1e-6).unwrap();
        assert_eq!(cases.len(), 4);
        assert!(cases.iter().any(|c| c.architecture == "xnet" && c.time_mode == TimeMode::Discrete));
        assert!(cases.iter().any(|c| c.architecture == "two-layer" && c.time_mode == TimeMode::Continuous));
        assert!(cases.iter().all(|c| c.dim <= 5 && c.steps <= 3 && c.batch <= 8));
    }
}
