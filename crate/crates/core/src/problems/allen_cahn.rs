use crate::autodiff::{Tape, Tensor, Var};
use crate::error::Result;

use super::{check_dim, Problem};

/// Reference value of u(0, 0) for d = 100 obtained by branching diffusion.
pub const ALLEN_CAHN_REFERENCE_D100: f64 = 0.052802;

/// `u_t + Δu + u - u³ = 0`, `g(x) = 1 / (2 + 0.4|x|²)`, T = 0.3, ξ = 0.
#[derive(Debug, Clone)]
pub struct AllenCahn {
    dim: usize,
    start: Vec<f64>,
}

impl AllenCahn {
    pub const HORIZON: f64 = 0.3;

    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            start: vec![0.0; dim],
        })
    }
}

impl Problem for AllenCahn {
    fn name(&self) -> &'static str {
        "allen_cahn"
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

    fn generator(&self, _t: f64, _x: &[f64], y: f64, _z: &[f64]) -> f64 {
        y - y * y * y
    }

    fn generator_on_tape(&self, tape: &mut Tape, _t: f64, _x: &Tensor, y: Var, _z: Var) -> Result<Var> {
        let y2 = tape.square(y)?;
        let y3 = tape.mul(y2, y)?;
        tape.sub(y, y3)
    }

    fn terminal(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        1.0 / (2.0 + 0.4 * r2)
    }

    fn reference(&self) -> Option<f64> {
        (self.dim == 100).then_some(ALLEN_CAHN_REFERENCE_D100)
    }

    fn y0_init_range(&self) -> (f64, f64) {
        (0.0, 0.2)
    }

    fn input_scale(&self) -> f64 {
        1.0
    }

    fn constant_diffusion(&self) -> Option<f64> {
        Some(std::f64::consts::SQRT_2)
    }

    fn polynomial_generator(&self) -> Option<Vec<(u32, f64)>> {
        Some(vec![(1, 1.0), (3, -1.0)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminal_at_origin_is_half() {
        let p = AllenCahn::new(100).unwrap();
        assert_eq!(p.terminal(&[0.0; 100]), 0.5);
    }

    #[test]
    fn generator_fixed_points() {
        let p = AllenCahn::new(2).unwrap();
        for y in [-1.0, 0.0, 1.0] {
            assert_eq!(p.generator(0.0, &[0.0, 0.0], y, &[0.0, 0.0]), 0.0);
        }
    }

    #[test]
    fn reference_only_in_dimension_100() {
        assert_eq!(AllenCahn::new(100).unwrap().reference(), Some(0.052802));
        assert_eq!(AllenCahn::new(20).unwrap().reference(), None);
    }

    #[test]
    fn diffusion_gives_unit_laplacian() {
        let p = AllenCahn::new(3).unwrap();
        let mut s = [0.0; 3];
        p.sigma_diagonal(0.0, &[1.0, 2.0, 3.0], &mut s);
        // ½ σ² = 1 on every coordinate
        assert!(s.iter().all(|v| (0.5 * v * v - 1.0).abs() < 1e-15));
    }
}
