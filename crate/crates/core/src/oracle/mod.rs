//! Training-free reference values: branching-diffusion Monte Carlo for
//! polynomial generators, Feynman–Kac Monte Carlo and closed forms for the
//! linear case.

mod branching;
mod stats;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::sampler::RngState;

pub use branching::{branching_estimate, BranchingConfig};
pub use stats::{OracleEstimate, RunningStats, Z99};

/// Samples per parallel chunk; chunk `i` draws from stream `i` of the seed.
pub const CHUNK: u64 = 4096;

pub type Terminal<'a> = Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>;

/// Driftless forward process `X_t = ξ + s·W_t` with terminal function `g`.
pub struct OracleTarget<'a> {
    pub dim: usize,
    pub horizon: f64,
    pub start: Vec<f64>,
    pub sigma: f64,
    pub terminal: Terminal<'a>,
}

impl std::fmt::Debug for OracleTarget<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OracleTarget")
            .field("dim", &self.dim)
            .field("horizon", &self.horizon)
            .field("sigma", &self.sigma)
            .finish_non_exhaustive()
    }
}

impl<'a> OracleTarget<'a> {
    pub fn new(dim: usize, horizon: f64, start: Vec<f64>, sigma: f64, terminal: Terminal<'a>) -> Result<Self> {
        if start.len() != dim || dim == 0 {
            return Err(Error::Config(format!("start point has {} entries for dimension {dim}", start.len())));
        }
        if !(horizon >= 0.0 && sigma >= 0.0) {
            return Err(Error::Config("horizon and sigma must be non-negative".into()));
        }
        Ok(Self {
            dim,
            horizon,
            start,
            sigma,
            terminal,
        })
    }

    pub fn from_problem(problem: &'a dyn Problem) -> Result<Self> {
        let sigma = problem.constant_diffusion().ok_or_else(|| {
            Error::Unsupported(format!("{} does not have constant diffusion and zero drift", problem.name()))
        })?;
        Self::new(
            problem.dim(),
            problem.horizon(),
            problem.start().to_vec(),
            sigma,
            Box::new(move |x| problem.terminal(x)),
        )
    }

    pub(crate) fn advance(&self, x: &mut [f64], dt: f64, rng: &mut RngState) {
        let s = self.sigma * dt.sqrt();
        for v in x {
            *v += s * rng.normal();
        }
    }
}

/// Runs `per_sample(global index, rng)` over `samples` draws in parallel
/// chunks and merges the statistics in chunk order.
pub(crate) fn chunked_estimate<F>(samples: u64, seed: u64, per_sample: F) -> Result<OracleEstimate>
where
    F: Fn(u64, &mut RngState) -> Result<f64> + Sync,
{
    if samples == 0 {
        return Err(Error::Config("oracle needs at least one sample".into()));
    }
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Result<RunningStats>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = RngState::derived(seed, c);
            let mut stats = RunningStats::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                stats.push(per_sample(i, &mut rng)?);
            }
            Ok(stats)
        })
        .collect();
    let mut total = RunningStats::default();
    for p in parts {
        total.merge(&p?);
    }
    Ok(OracleEstimate::from_stats(&total, seed))
}

/// Mean of `g(X_T)` with exact Gaussian terminal states. Equals `u(0, ξ)`
/// only when the generator vanishes.
pub fn feynman_kac_linear(target: &OracleTarget<'_>, samples: u64, seed: u64) -> Result<OracleEstimate> {
    chunked_estimate(samples, seed, |_, rng| {
        let mut x = target.start.clone();
        target.advance(&mut x, target.horizon, rng);
        Ok((target.terminal)(&x))
    })
}

/// `|ξ|² + 2dT`, the solution of `u_t + Δu = 0`, `u(T, x) = |x|²` at `(0, ξ)`.
pub fn closed_form_quadratic(d: usize, horizon: f64, xi: &[f64]) -> f64 {
    xi.iter().map(|v| v * v).sum::<f64>() + 2.0 * d as f64 * horizon
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{AllenCahn, LinearQuadratic, PricingDiffRate};

    #[test]
    fn closed_form_values() {
        assert_eq!(closed_form_quadratic(10, 0.3, &[0.0; 10]), 6.0);
        assert_eq!(closed_form_quadratic(1, 0.0, &[1.5]), 2.25);
        let base = closed_form_quadratic(4, 0.5, &[0.0; 4]);
        assert!((closed_form_quadratic(8, 0.5, &[0.0; 8]) - 2.0 * base).abs() < 1e-12);
        assert!((closed_form_quadratic(4, 1.0, &[0.0; 4]) - 2.0 * base).abs() < 1e-12);
    }

    #[test]
    fn feynman_kac_covers_the_quadratic_solution() {
        let p = LinearQuadratic::new(10).unwrap();
        let t = OracleTarget::from_problem(&p).unwrap();
        let e = feynman_kac_linear(&t, 200_000, 1).unwrap();
        assert!(e.contains(6.0), "{e:?}");
        assert_eq!(e.samples, 200_000);
    }

    #[test]
    fn constant_terminal_is_exact() {
        let t = OracleTarget::new(3, 1.0, vec![0.0; 3], 2f64.sqrt(), Box::new(|_| 0.7)).unwrap();
        let e = feynman_kac_linear(&t, 10_000, 2).unwrap();
        assert_eq!(e.mean, 0.7);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn allen_cahn_terminal_mean_lies_in_range() {
        let p = AllenCahn::new(100).unwrap();
        let t = OracleTarget::from_problem(&p).unwrap();
        let e = feynman_kac_linear(&t, 20_000, 3).unwrap();
        assert!(e.mean > 0.0 && e.mean <= 0.5 && e.mean.is_finite());
    }

    #[test]
    fn pricing_is_rejected() {
        let p = PricingDiffRate::new(5).unwrap();
        assert!(matches!(OracleTarget::from_problem(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn estimates_do_not_depend_on_thread_count() {
        let p = LinearQuadratic::new(3).unwrap();
        let t = OracleTarget::from_problem(&p).unwrap();
        let a = feynman_kac_linear(&t, 3 * CHUNK + 17, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| feynman_kac_linear(&t, 3 * CHUNK + 17, 9)).unwrap();
        assert_eq!(a, b);
    }
}
