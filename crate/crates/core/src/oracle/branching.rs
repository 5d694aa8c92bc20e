use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::RngState;

use super::{chunked_estimate, OracleEstimate, OracleTarget};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchingConfig {
    /// `(k, a_k)` with `f(y) = Σ a_k y^k`.
    pub poly: Vec<(u32, f64)>,
    /// Rate β of the exponential lifetimes.
    pub branch_rate: f64,
    /// `(k, p_k)`: probability of branching into `k` offspring.
    pub offspring: Vec<(u32, f64)>,
    pub samples: u64,
    pub max_particles: usize,
}

impl BranchingConfig {
    /// β = 1 and uniform offspring probabilities over the monomials.
    pub fn for_polynomial(poly: Vec<(u32, f64)>, samples: u64) -> Self {
        let support: Vec<u32> = poly.iter().filter(|p| p.1 != 0.0).map(|p| p.0).collect();
        let p = 1.0 / support.len().max(1) as f64;
        Self {
            offspring: support.into_iter().map(|k| (k, p)).collect(),
            poly,
            branch_rate: 1.0,
            samples,
            max_particles: 10_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.branch_rate > 0.0 && self.branch_rate.is_finite()) {
            return Err(Error::Config("branch rate must be positive".into()));
        }
        if self.offspring.iter().any(|p| !(p.1 > 0.0)) {
            return Err(Error::Config("offspring probabilities must be positive".into()));
        }
        for &(k, a) in &self.poly {
            if a != 0.0 && !self.offspring.iter().any(|p| p.0 == k) {
                return Err(Error::Config(format!("no offspring probability for power {k}")));
            }
        }
        if !self.offspring.is_empty() {
            let total: f64 = self.offspring.iter().map(|p| p.1).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("offspring probabilities sum to {total}")));
            }
        }
        if self.max_particles == 0 {
            return Err(Error::Config("particle cap must be positive".into()));
        }
        Ok(())
    }

    fn coefficient(&self, k: u32) -> f64 {
        self.poly.iter().filter(|p| p.0 == k).map(|p| p.1).sum()
    }
}

/// One branching tree rooted at `(0, ξ)`; returns the product of leaf and
/// branch weights.
fn sample_tree(target: &OracleTarget<'_>, cfg: &BranchingConfig, index: u64, rng: &mut RngState) -> Result<f64> {
    let beta = cfg.branch_rate;
    let horizon = target.horizon;
    let mut stack = vec![(0.0, target.start.clone())];
    let mut particles = 1usize;
    let mut weight = 1.0;
    while let Some((birth, mut x)) = stack.pop() {
        let tau = rng.exponential(beta);
        if birth + tau >= horizon {
            target.advance(&mut x, horizon - birth, rng);
            weight *= (target.terminal)(&x) / (-beta * (horizon - birth)).exp();
            continue;
        }
        target.advance(&mut x, tau, rng);
        let u = rng.unit();
        let mut acc = 0.0;
        let Some(&(k, p)) = cfg.offspring.iter().find(|(_, p)| {
            acc += p;
            u < acc
        }).or(cfg.offspring.last()) else {
            // no branching mechanism at all: the branch event carries weight 0
            return Ok(0.0);
        };
        weight *= cfg.coefficient(k) / (p * beta * (-beta * tau).exp());
        particles += k as usize;
        if particles > cfg.max_particles {
            return Err(Error::ParticleCap {
                cap: cfg.max_particles,
                sample: index,
            });
        }
        for _ in 0..k {
            stack.push((birth + tau, x.clone()));
        }
    }
    Ok(weight)
}

/// Unbiased branching-diffusion estimate of `u(0, ξ)` for
/// `u_t + ½s²Δu + Σ a_k u^k = 0`, `u(T, ·) = g`.
pub fn branching_estimate(target: &OracleTarget<'_>, cfg: &BranchingConfig, seed: u64) -> Result<OracleEstimate> {
    cfg.validate()?;
    chunked_estimate(cfg.samples, seed, |i, rng| sample_tree(target, cfg, i, rng))
}
