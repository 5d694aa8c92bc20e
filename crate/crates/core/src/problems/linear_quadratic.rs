use crate::autodiff::{Tape, Tensor, Var};
use crate::error::Result;

use super::{check_dim, Problem};

/// `u_t + Δu = 0`, `g(x) = |x|²`, T = 0.3, ξ = 0. Exact solution
/// `u(t, x) = |x|² + 2d(T - t)`.
#[derive(Debug, Clone)]
pub struct LinearQuadratic {
    dim: usize,
    start: Vec<f64>,
}

impl LinearQuadratic {
    pub const HORIZON: f64 = 0.3;

    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            start: vec![0.0; dim],
        })
    }

    pub fn exact(&self, t: f64, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>() + 2.0 * self.dim as f64 * (Self::HORIZON - t)
    }
}

impl Problem for LinearQuadratic {
    fn name(&self) -> &'static str {
        "linear_quadratic"
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

    fn drift(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn sigma_diagonal(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.fill(std::f64::consts::SQRT_2);
    }

    fn generator(&self, _t: f64, _x: &[f64], _y: f64, _z: &[f64]) -> f64 {
        0.0
    }

    fn generator_on_tape(&self, tape: &mut Tape, _t: f64, _x: &Tensor, y: Var, _z: Var) -> Result<Var> {
        let shape = tape.shape(y).to_vec();
        tape.constant(Tensor::zeros(&shape))
    }

    fn terminal(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn reference(&self) -> Option<f64> {
        Some(self.exact(0.0, &self.start))
    }

    fn y0_init_range(&self) -> (f64, f64) {
        let r = self.reference().unwrap_or(1.0);
        (0.5 * r, 1.5 * r)
    }

    fn input_scale(&self) -> f64 {
        1.0
    }

    fn constant_diffusion(&self) -> Option<f64> {
        Some(std::f64::consts::SQRT_2)
    }

    fn polynomial_generator(&self) -> Option<Vec<(u32, f64)>> {
        Some(Vec::new())
    }
}
