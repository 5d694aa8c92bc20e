use serde::{Deserialize, Serialize};

use crate::autodiff::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update at step `t ≥ 1`; gradients are zeroed
/// afterwards.
pub fn adam_step(store: &mut ParamStore, lr: f64, cfg: &AdamConfig, t: u64) {
    debug_assert!(t >= 1);
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    let step = lr / c1;
    let inv_root_c2 = 1.0 / c2.sqrt();
    for p in store.iter_mut() {
        let entries = p
            .value
            .data_mut()
            .iter_mut()
            .zip(p.grad.data_mut())
            .zip(p.first_moment.data_mut())
            .zip(p.second_moment.data_mut());
        for (((w, g), m), v) in entries {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * *g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * *g * *g;
            *w -= step * *m / (v.sqrt() * inv_root_c2 + cfg.eps);
            *g = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut store = ParamStore::new();
        let id = store.insert("p", Tensor::vector(vec![1.0, -2.0])).unwrap();
        for t in 1..=5 {
            adam_step(&mut store, 0.1, &AdamConfig::default(), t);
        }
        assert_eq!(store.value(id).data(), &[1.0, -2.0]);
    }

    #[test]
    fn first_step_by_hand() {
        let mut store = ParamStore::new();
        let id = store.insert("p", Tensor::scalar(0.0)).unwrap();
        store.get_mut(id).grad = Tensor::scalar(1.0);
        adam_step(&mut store, 0.1, &AdamConfig::default(), 1);
        let want = -0.1 / (1.0 + 1e-8);
        assert!((store.value(id).data()[0] - want).abs() < 1e-15);
        assert_eq!(store.grad(id).data(), &[0.0]);
    }

    /// Scalar recursion run independently of the store-based update.
    fn reference_adam_on_square(p0: f64, lr: f64, steps: u64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut p, mut m, mut v) = (p0, 0.0, 0.0);
        for t in 1..=steps {
            let g = 2.0 * p;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            p -= lr * mh / (vh.sqrt() + eps);
        }
        p
    }

    #[test]
    fn minimizes_a_parabola() {
        let mut store = ParamStore::new();
        let id = store.insert("p", Tensor::scalar(1.0)).unwrap();
        for t in 1..=100 {
            let p = store.value(id).data()[0];
            store.get_mut(id).grad = Tensor::scalar(2.0 * p);
            adam_step(&mut store, 0.1, &AdamConfig::default(), t);
        }
        let p = store.value(id).data()[0];
        let want = reference_adam_on_square(1.0, 0.1, 100);
        assert!((p - want).abs() < 1e-12);
        assert!(p.abs() < 0.1, "p = {p}");
    }
}
