//! Semilinear parabolic PDE instances in their BSDE form.
//!
//! Each problem supplies the forward dynamics (drift and diagonal diffusion),
//! the generator `f(t, x, y, z)` and the terminal condition `g`. Problems are
//! registered by name in a [`ProblemRegistry`].

mod allen_cahn;
mod linear_quadratic;
mod pricing;

use std::collections::BTreeMap;
use std::fmt::Debug;

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

pub use allen_cahn::AllenCahn;
pub use linear_quadratic::LinearQuadratic;
pub use pricing::PricingDiffRate;

/// A semilinear parabolic PDE `u_t + ½Tr(σσᵀ∇²u) + μ·∇u + f(t, x, u, σᵀ∇u) = 0`
/// with terminal condition `u(T, x) = g(x)`.
///
/// The diffusion matrix is diagonal and is only ever exposed through its
/// action on vectors.
pub trait Problem: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn horizon(&self) -> f64;

    /// Start point ξ of the forward process.
    fn start(&self) -> &[f64];

    fn drift(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// Diagonal of σ(t, x).
    fn sigma_diagonal(&self, t: f64, x: &[f64], out: &mut [f64]);

    fn sigma_apply(&self, t: f64, x: &[f64], v: &[f64], out: &mut [f64]) {
        self.sigma_diagonal(t, x, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o *= vi;
        }
    }

    /// σᵀ(t, x)·v; equal to [`Problem::sigma_apply`] since σ is diagonal.
    fn sigma_transpose_apply(&self, t: f64, x: &[f64], v: &[f64], out: &mut [f64]) {
        self.sigma_apply(t, x, v, out);
    }

    fn generator(&self, t: f64, x: &[f64], y: f64, z: &[f64]) -> f64;

    /// Batched generator recorded on a tape. `x` is `[batch, d]` (constant),
    /// `y` is `[batch]` and `z` is `[batch, d]`; returns `[batch]`.
    fn generator_on_tape(&self, tape: &mut Tape, t: f64, x: &Tensor, y: Var, z: Var) -> Result<Var>;

    fn terminal(&self, x: &[f64]) -> f64;

    /// Known value of u(0, ξ), if any.
    fn reference(&self) -> Option<f64>;

    /// Interval from which θ_{u0} is drawn at initialization.
    fn y0_init_range(&self) -> (f64, f64);

    /// Spatial inputs enter networks as `(x - ξ) / input_scale`.
    fn input_scale(&self) -> f64;

    /// Default piecewise-constant learning-rate schedule as
    /// `(first iteration, rate)` pairs.
    fn default_lr_schedule(&self) -> Vec<(usize, f64)> {
        vec![(0, 5e-3), (3000, 5e-4)]
    }

    /// `Some(s)` when μ ≡ 0 and σ ≡ s·I.
    fn constant_diffusion(&self) -> Option<f64> {
        None
    }

    /// Coefficients `(power, a_k)` when `f(t, x, y, z) = Σ a_k y^k`.
    fn polynomial_generator(&self) -> Option<Vec<(u32, f64)>> {
        None
    }
}

pub type ProblemFactory = fn(usize) -> Result<Box<dyn Problem>>;

/// Name → constructor map for problems.
#[derive(Clone)]
pub struct ProblemRegistry {
    entries: BTreeMap<&'static str, ProblemFactory>,
}

impl ProblemRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("allen_cahn", |d| Ok(Box::new(AllenCahn::new(d)?)));
        reg.register("pricing_diffrate", |d| Ok(Box::new(PricingDiffRate::new(d)?)));
        reg.register("linear_quadratic", |d| Ok(Box::new(LinearQuadratic::new(d)?)));
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: ProblemFactory) {
        self.entries.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn build(&self, name: &str, dim: usize) -> Result<Box<dyn Problem>> {
        let factory = self.entries.get(name).ok_or_else(|| Error::UnknownName {
            kind: "problem",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        factory(dim)
    }
}

impl Default for ProblemRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Convenience lookup in the built-in registry.
pub fn by_name(name: &str, dim: usize) -> Result<Box<dyn Problem>> {
    ProblemRegistry::builtin().build(name, dim)
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::Config("problem dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}
