use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::sampler::RngState;

use super::{normal_tensor, take, Activation, Architecture, NamedTensors, NetworkConfig};

/// Extra hidden width over the input width.
pub const HIDDEN_EXTRA: usize = 10;

/// Two hidden layers of width `d_in + 10` and a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FnnParams {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
    pub w3: Tensor,
    pub b3: Tensor,
}

const NAMES: [&str; 6] = ["W1", "b1", "W2", "b2", "W3", "b3"];

impl FnnParams {
    pub fn hidden(&self) -> usize {
        self.b1.len()
    }

    pub fn into_named(self) -> NamedTensors {
        NAMES
            .iter()
            .map(|n| n.to_string())
            .zip([self.w1, self.b1, self.w2, self.b2, self.w3, self.b3])
            .collect()
    }

    pub fn from_named(named: &[(String, Tensor)]) -> Result<Self> {
        Ok(Self {
            w1: take(named, "W1")?.clone(),
            b1: take(named, "b1")?.clone(),
            w2: take(named, "W2")?.clone(),
            b2: take(named, "b2")?.clone(),
            w3: take(named, "W3")?.clone(),
            b3: take(named, "b3")?.clone(),
        })
    }

    pub fn constants(&self, tape: &mut Tape) -> Result<FnnVars> {
        Ok(FnnVars {
            layers: [
                (tape.constant(self.w1.clone())?, tape.constant(self.b1.clone())?),
                (tape.constant(self.w2.clone())?, tape.constant(self.b2.clone())?),
                (tape.constant(self.w3.clone())?, tape.constant(self.b3.clone())?),
            ],
        })
    }
}

/// Tape handles `(W, b)` per layer.
#[derive(Debug, Clone, Copy)]
pub struct FnnVars {
    pub layers: [(Var, Var); 3],
}

impl FnnVars {
    pub fn from_slice(params: &[Var]) -> Result<Self> {
        match params {
            &[w1, b1, w2, b2, w3, b3] => Ok(Self {
                layers: [(w1, b1), (w2, b2), (w3, b3)],
            }),
            _ => Err(Error::ShapeMismatch {
                op: "two-layer",
                detail: format!("expected 6 parameter handles, got {}", params.len()),
            }),
        }
    }
}

fn init_layers(d_in: usize, d_out: usize, activation: Activation, rng: &mut RngState) -> FnnParams {
    let h = d_in + HIDDEN_EXTRA;
    // He variance 2/fan_in for relu, 1/fan_in for tanh.
    let gain = match activation {
        Activation::Relu => 2.0,
        Activation::Tanh => 1.0,
    };
    let w1 = normal_tensor(&[h, d_in], (gain / d_in as f64).sqrt(), rng);
    let w2 = normal_tensor(&[h, h], (gain / h as f64).sqrt(), rng);
    let w3 = normal_tensor(&[d_out, h], (gain / h as f64).sqrt(), rng);
    FnnParams {
        w1,
        b1: Tensor::zeros(&[h]),
        w2,
        b2: Tensor::zeros(&[h]),
        w3,
        b3: Tensor::zeros(&[d_out]),
    }
}

pub fn init_fnn(config: &NetworkConfig, d_in: usize, d_out: usize, rng: &mut RngState) -> Result<FnnParams> {
    if d_in == 0 || d_out == 0 {
        return Err(Error::Config("two-layer net needs positive widths".into()));
    }
    Ok(init_layers(d_in, d_out, config.activation, rng))
}

pub fn fnn_forward(tape: &mut Tape, p: &FnnVars, activation: Activation, x: Var) -> Result<Var> {
    let mut h = x;
    for (i, &(w, b)) in p.layers.iter().enumerate() {
        h = tape.record_affine(h, w, b)?;
        if i < 2 {
            h = match activation {
                Activation::Relu => tape.relu(h)?,
                Activation::Tanh => tape.tanh(h)?,
            };
        }
    }
    Ok(h)
}

#[derive(Debug, Clone)]
pub struct TwoLayerNet {
    d_in: usize,
    d_out: usize,
    activation: Activation,
}

impl TwoLayerNet {
    pub fn new(d_in: usize, d_out: usize, activation: Activation) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::Config("two-layer net needs positive widths".into()));
        }
        Ok(Self {
            d_in,
            d_out,
            activation,
        })
    }

    pub fn hidden(&self) -> usize {
        self.d_in + HIDDEN_EXTRA
    }
}

impl Architecture for TwoLayerNet {
    fn name(&self) -> &'static str {
        "two-layer"
    }

    fn input_dim(&self) -> usize {
        self.d_in
    }

    fn output_dim(&self) -> usize {
        self.d_out
    }

    fn param_count(&self) -> usize {
        let h = self.hidden();
        self.d_in * h + h + h * h + h + h * self.d_out + self.d_out
    }

    fn init(&self, rng: &mut RngState) -> NamedTensors {
        init_layers(self.d_in, self.d_out, self.activation, rng).into_named()
    }

    fn forward(&self, tape: &mut Tape, params: &[Var], x: Var) -> Result<Var> {
        fnn_forward(tape, &FnnVars::from_slice(params)?, self.activation, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{finite_diff_check, ParamStore, DEFAULT_GRAD_FLOOR};

    fn eval(p: &FnnParams, act: Activation, x: &Tensor) -> Tensor {
        let mut tape = Tape::new();
        let vars = p.constants(&mut tape).unwrap();
        let xv = tape.constant(x.clone()).unwrap();
        let y = fnn_forward(&mut tape, &vars, act, xv).unwrap();
        tape.value(y).clone()
    }

    fn input(b: usize, d: usize, seed: u64) -> Tensor {
        let mut rng = RngState::new(seed);
        Tensor::matrix(b, d, (0..b * d).map(|_| rng.normal()).collect()).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut p = init_layers(3, 2, Activation::Relu, &mut RngState::new(0));
        for t in [&mut p.w1, &mut p.w2, &mut p.w3] {
            t.data_mut().fill(0.0);
        }
        let y = eval(&p, Activation::Relu, &input(4, 3, 1));
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn parameter_count_formula() {
        let net = TwoLayerNet::new(100, 100, Activation::Relu).unwrap();
        assert_eq!(net.param_count(), 34_420);
        assert_eq!(net.hidden(), 110);
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let cfg = NetworkConfig::default();
        let a = init_fnn(&cfg, 5, 4, &mut RngState::new(2)).unwrap();
        let b = init_fnn(&cfg, 5, 4, &mut RngState::new(2)).unwrap();
        assert_eq!(a, b);
        for bias in [&a.b1, &a.b2, &a.b3] {
            assert!(bias.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn init_output_is_finite_over_many_inputs() {
        for act in [Activation::Relu, Activation::Tanh] {
            let p = init_layers(10, 10, act, &mut RngState::new(3));
            let y = eval(&p, act, &input(10_000, 10, 4));
            assert!(y.is_finite());
        }
    }

    #[test]
    fn batch_matches_single_samples() {
        let p = init_layers(4, 3, Activation::Tanh, &mut RngState::new(5));
        let x = input(6, 4, 6);
        let batch = eval(&p, Activation::Tanh, &x);
        for b in 0..6 {
            let row = Tensor::matrix(1, 4, x.data()[b * 4..b * 4 + 4].to_vec()).unwrap();
            let single = eval(&p, Activation::Tanh, &row);
            for o in 0..3 {
                assert!((single.data()[o] - batch.data()[b * 3 + o]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (seed, act) in [(1, Activation::Tanh), (2, Activation::Relu), (3, Activation::Tanh)] {
            let mut p = init_layers(3, 2, act, &mut RngState::new(seed));
            // non-zero biases so their gradients are exercised away from init
            let mut rng = RngState::new(seed + 100);
            for b in [&mut p.b1, &mut p.b2, &mut p.b3] {
                b.data_mut().iter_mut().for_each(|v| *v = 0.1 * rng.normal());
            }
            let x = input(5, 3, seed + 7);
            let w = input(5, 2, seed + 8);
            let mut store = ParamStore::new();
            for (name, t) in p.into_named() {
                store.insert(name, t).unwrap();
            }
            let report = finite_diff_check(&mut store, 1e-6, DEFAULT_GRAD_FLOOR, |tape, store| {
                let vars: Vec<Var> = NAMES
                    .iter()
                    .map(|n| tape.param(store, store.id(n)?))
                    .collect::<Result<_>>()?;
                let xv = tape.constant(x.clone())?;
                let y = fnn_forward(tape, &FnnVars::from_slice(&vars)?, act, xv)?;
                let wv = tape.constant(w.clone())?;
                let prod = tape.mul(y, wv)?;
                tape.sum(prod)
            })
            .unwrap();
            assert!(report.passes(1e-5), "{act}: {report:?}");
        }
    }
}
