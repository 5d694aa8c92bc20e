use crate::autodiff::{Tape, Tensor, Var};
use crate::error::Result;

use super::{check_dim, Problem};

/// Multilevel-Picard value of u(0, ξ) for d = 100.
pub const PRICING_REFERENCE_D100: f64 = 21.299;

/// European option pricing with different borrowing and lending rates.
///
/// Geometric Brownian motion forward dynamics; the payoff is a call spread on
/// the maximum of the assets and the generator switches between the lending
/// and the borrowing rate depending on the sign of the cash position.
#[derive(Debug, Clone)]
pub struct PricingDiffRate {
    dim: usize,
    start: Vec<f64>,
}

impl PricingDiffRate {
    pub const HORIZON: f64 = 0.5;
    pub const MU_BAR: f64 = 0.06;
    pub const SIGMA_BAR: f64 = 0.2;
    pub const RATE_LEND: f64 = 0.04;
    pub const RATE_BORROW: f64 = 0.06;
    pub const SPOT: f64 = 100.0;

    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            start: vec![Self::SPOT; dim],
        })
    }

    fn premium_coeff() -> f64 {
        (Self::MU_BAR - Self::RATE_LEND) / Self::SIGMA_BAR
    }
}

impl Problem for PricingDiffRate {
    fn name(&self) -> &'static str {
        "pricing_diffrate"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> f64 {
        Self::HORIZON
    }

    fn start(&self) -> &[f64] {
        &self.start
    }

    fn drift(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = Self::MU_BAR * xi;
        }
    }

    fn sigma_diagonal(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = Self::SIGMA_BAR * xi;
        }
    }

    fn generator(&self, _t: f64, _x: &[f64], y: f64, z: &[f64]) -> f64 {
        let sz: f64 = z.iter().sum();
        -Self::RATE_LEND * y - Self::premium_coeff() * sz
            + (Self::RATE_BORROW - Self::RATE_LEND) * (sz / Self::SIGMA_BAR - y).max(0.0)
    }

    fn generator_on_tape(&self, tape: &mut Tape, _t: f64, _x: &Tensor, y: Var, z: Var) -> Result<Var> {
        let sz = tape.sum_axis(z, 1)?;
        let lend = tape.scale(y, -Self::RATE_LEND)?;
        let premium = tape.scale(sz, -Self::premium_coeff())?;
        let scaled = tape.scale(sz, 1.0 / Self::SIGMA_BAR)?;
        let gap = tape.sub(scaled, y)?;
        let borrowed = tape.relu(gap)?;
        let spread = tape.scale(borrowed, Self::RATE_BORROW - Self::RATE_LEND)?;
        let linear = tape.add(lend, premium)?;
        tape.add(linear, spread)
    }

    fn terminal(&self, x: &[f64]) -> f64 {
        let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (m - 120.0).max(0.0) - 2.0 * (m - 150.0).max(0.0)
    }

    fn reference(&self) -> Option<f64> {
        (self.dim == 100).then_some(PRICING_REFERENCE_D100)
    }

    fn y0_init_range(&self) -> (f64, f64) {
        (15.0, 25.0)
    }

    fn input_scale(&self) -> f64 {
        Self::SPOT
    }
}
