//! Seeded Brownian increments and Euler–Maruyama forward paths.
//!
//! Randomness comes from ChaCha8, a counter-based stream cipher generator:
//! a `(seed, stream)` pair fully determines the output on every platform.
//! Worker `k` of a job seeded with `s` uses stream `k` of seed `s`. Normal
//! variates use the ziggurat transform of `rand_distr::StandardNormal`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal, Uniform};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::problems::Problem;

/// Uniform partition of `[0, T]` into `steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    steps: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(steps: usize, horizon: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("time grid needs at least one step".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { steps, horizon })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// `t_n = n·dt`.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }
}

/// Deterministic random stream identified by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::derived(seed, 0)
    }

    /// Stream `worker` of `seed`; distinct workers never overlap.
    pub fn derived(seed: u64, worker: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(worker);
        Self {
            seed,
            stream: worker,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            return lo;
        }
        Uniform::new(lo, hi)
            .expect("finite interval")
            .sample(&mut self.rng)
    }

    pub fn exponential(&mut self, rate: f64) -> f64 {
        Exp::new(rate).expect("positive rate").sample(&mut self.rng)
    }

    /// Uniform on [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Brownian increments and the forward paths they drive.
#[derive(Debug, Clone)]
pub struct PathBatch {
    /// `[M, N, d]`, entries ~ Normal(0, dt).
    pub dw: Tensor,
    /// `[M, N + 1, d]`.
    pub x: Tensor,
}

impl PathBatch {
    pub fn batch(&self) -> usize {
        self.dw.shape()[0]
    }

    pub fn steps(&self) -> usize {
        self.dw.shape()[1]
    }

    pub fn dim(&self) -> usize {
        self.dw.shape()[2]
    }

    fn slice(t: &Tensor, n: usize) -> Tensor {
        let (m, k, d) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        let mut out = Vec::with_capacity(m * d);
        for i in 0..m {
            let base = (i * k + n) * d;
            out.extend_from_slice(&t.data()[base..base + d]);
        }
        Tensor::new(vec![m, d], out).expect("slice shape")
    }

    /// States `X_{t_n}` as a `[M, d]` matrix.
    pub fn states_at(&self, n: usize) -> Tensor {
        Self::slice(&self.x, n)
    }

    /// Increments `ΔW_n` as a `[M, d]` matrix.
    pub fn increments_at(&self, n: usize) -> Tensor {
        Self::slice(&self.dw, n)
    }
}

/// `[M, N, d]` i.i.d. Normal(0, dt) increments.
pub fn sample_increments(batch: usize, grid: &TimeGrid, dim: usize, rng: &mut RngState) -> Result<Tensor> {
    if batch == 0 || dim == 0 {
        return Err(Error::Config(format!(
            "increments need batch ≥ 1 and dim ≥ 1, got {batch} and {dim}"
        )));
    }
    let sd = grid.dt().sqrt();
    let n = batch * grid.steps() * dim;
    let data = (0..n).map(|_| sd * rng.normal()).collect();
    Tensor::new(vec![batch, grid.steps(), dim], data)
}

/// One Euler–Maruyama step `x ← x + μ(t, x)dt + σ(t, x)dw`, using `mu` and
/// `sig` as scratch.
fn euler_step(problem: &dyn Problem, t: f64, dt: f64, x: &mut [f64], dw: &[f64], mu: &mut [f64], sig: &mut [f64]) {
    problem.drift(t, x, mu);
    problem.sigma_apply(t, x, dw, sig);
    for ((xi, m), s) in x.iter_mut().zip(mu.iter()).zip(sig.iter()) {
        *xi += m * dt + s;
    }
}

/// Forward paths `X^π` driven by `dw` (shape `[M, N, d]`).
pub fn euler_forward(problem: &dyn Problem, grid: &TimeGrid, dw: &Tensor) -> Result<PathBatch> {
    let d = problem.dim();
    let shape = dw.shape();
    if shape.len() != 3 || shape[1] != grid.steps() || shape[2] != d {
        return Err(Error::ShapeMismatch {
            op: "euler_forward",
            detail: format!("increments {shape:?} vs steps {} and dim {d}", grid.steps()),
        });
    }
    let (m, steps) = (shape[0], shape[1]);
    let dt = grid.dt();
    let mut x = vec![0.0; m * (steps + 1) * d];
    let (mut mu, mut sig) = (vec![0.0; d], vec![0.0; d]);
    let mut state = vec![0.0; d];
    for i in 0..m {
        state.copy_from_slice(problem.start());
        let row = i * (steps + 1) * d;
        x[row..row + d].copy_from_slice(&state);
        for n in 0..steps {
            let inc = &dw.data()[(i * steps + n) * d..(i * steps + n + 1) * d];
            euler_step(problem, grid.time(n), dt, &mut state, inc, &mut mu, &mut sig);
            if !state.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteState { step: n + 1 });
            }
            let at = row + (n + 1) * d;
            x[at..at + d].copy_from_slice(&state);
        }
    }
    Ok(PathBatch {
        dw: dw.clone(),
        x: Tensor::new(vec![m, steps + 1, d], x)?,
    })
}

/// Samples increments and simulates the forward paths in one go.
pub fn sample_paths(problem: &dyn Problem, grid: &TimeGrid, batch: usize, rng: &mut RngState) -> Result<PathBatch> {
    let dw = sample_increments(batch, grid, problem.dim(), rng)?;
    euler_forward(problem, grid, &dw)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakErrorPoint {
    pub steps: usize,
    pub mean: f64,
    pub std_error: f64,
    /// `mean - reference`.
    pub bias: f64,
}

/// Monte Carlo estimate of `E g(X_T)` under the Euler scheme for each step
/// count, compared with the problem's reference. Only meaningful when the
/// generator vanishes, so that `u(0, ξ) = E g(X_T)`.
pub fn weak_error_probe(problem: &dyn Problem, steps: &[usize], paths: usize, rng: &mut RngState) -> Result<Vec<WeakErrorPoint>> {
    if paths == 0 {
        return Err(Error::Config("weak error probe needs at least one path".into()));
    }
    let reference = problem
        .reference()
        .ok_or_else(|| Error::Unsupported(format!("{} has no reference value", problem.name())))?;
    let d = problem.dim();
    let mut out = Vec::with_capacity(steps.len());
    for &n in steps {
        let grid = TimeGrid::new(n, problem.horizon())?;
        let sd = grid.dt().sqrt();
        let (mut mu, mut sig, mut state, mut inc) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        let mut stats = crate::oracle::RunningStats::default();
        for _ in 0..paths {
            state.copy_from_slice(problem.start());
            for k in 0..n {
                inc.iter_mut().for_each(|v| *v = sd * rng.normal());
                euler_step(problem, grid.time(k), grid.dt(), &mut state, &inc, &mut mu, &mut sig);
            }
            stats.push(problem.terminal(&state));
        }
        out.push(WeakErrorPoint {
            steps: n,
            mean: stats.mean(),
            std_error: stats.std_error(),
            bias: stats.mean() - reference,
        });
    }
    Ok(out)
}
