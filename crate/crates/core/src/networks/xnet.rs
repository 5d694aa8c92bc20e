use crate::autodiff::{CauchyPart, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::sampler::RngState;

use super::{normal_tensor, take, Architecture, NamedTensors, NetworkConfig};

/// Lower bound on `|e_k|` at initialization.
pub const E_MIN: f64 = 0.5;

/// Cauchy-kernel network: one shared pool of `L` complex poles, each output
/// coordinate reads the real part of `Σ_k (α_k + iβ_k) / (a_k·x + c_k + i e_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct XNetParams {
    /// `[L, d_in]`
    pub a: Tensor,
    /// `[L]`
    pub c: Tensor,
    /// `[L]`
    pub e: Tensor,
    /// `[d_out, L]`
    pub alpha: Tensor,
    /// `[d_out, L]`
    pub beta: Tensor,
}

impl XNetParams {
    pub fn basis(&self) -> usize {
        self.c.len()
    }

    pub fn param_count(&self) -> usize {
        self.a.len() + self.c.len() + self.e.len() + self.alpha.len() + self.beta.len()
    }

    pub fn into_named(self) -> NamedTensors {
        vec![
            ("a".into(), self.a),
            ("c".into(), self.c),
            ("e".into(), self.e),
            ("alpha".into(), self.alpha),
            ("beta".into(), self.beta),
        ]
    }

    pub fn from_named(named: &[(String, Tensor)]) -> Result<Self> {
        let p = Self {
            a: take(named, "a")?.clone(),
            c: take(named, "c")?.clone(),
            e: take(named, "e")?.clone(),
            alpha: take(named, "alpha")?.clone(),
            beta: take(named, "beta")?.clone(),
        };
        let l = p.c.len();
        let ok = p.a.rank() == 2
            && p.a.shape()[0] == l
            && p.e.shape() == [l]
            && p.alpha.rank() == 2
            && p.alpha.shape()[1] == l
            && p.beta.shape() == p.alpha.shape();
        if !ok {
            return Err(Error::ShapeMismatch {
                op: "xnet params",
                detail: format!(
                    "a {:?}, c {:?}, e {:?}, alpha {:?}, beta {:?}",
                    p.a.shape(),
                    p.c.shape(),
                    p.e.shape(),
                    p.alpha.shape(),
                    p.beta.shape()
                ),
            });
        }
        Ok(p)
    }

    /// Records the parameters as constants.
    pub fn constants(&self, tape: &mut Tape) -> Result<XNetVars> {
        Ok(XNetVars {
            a: tape.constant(self.a.clone())?,
            c: tape.constant(self.c.clone())?,
            e: tape.constant(self.e.clone())?,
            alpha: tape.constant(self.alpha.clone())?,
            beta: tape.constant(self.beta.clone())?,
        })
    }
}

/// Tape handles of the XNet parameters.
#[derive(Debug, Clone, Copy)]
pub struct XNetVars {
    pub a: Var,
    pub c: Var,
    pub e: Var,
    pub alpha: Var,
    pub beta: Var,
}

impl XNetVars {
    pub fn from_slice(params: &[Var]) -> Result<Self> {
        match params {
            &[a, c, e, alpha, beta] => Ok(Self { a, c, e, alpha, beta }),
            _ => Err(Error::ShapeMismatch {
                op: "xnet",
                detail: format!("expected 5 parameter handles, got {}", params.len()),
            }),
        }
    }
}

/// `a ~ N(0, 1/d_in)`, `c ~ U(-1, 1)`, `e ~ U(0.5, 1.5)`, `α, β ~ N(0, 1/L)`.
pub fn init_xnet(config: &NetworkConfig, d_in: usize, d_out: usize, rng: &mut RngState) -> Result<XNetParams> {
    let l = config.basis_for(d_out);
    if l == 0 {
        return Err(Error::Config("XNet needs at least one basis function".into()));
    }
    Ok(init_with_basis(l, d_in, d_out, rng))
}

fn init_with_basis(l: usize, d_in: usize, d_out: usize, rng: &mut RngState) -> XNetParams {
    let a = normal_tensor(&[l, d_in], (1.0 / d_in as f64).sqrt(), rng);
    let c = Tensor::vector((0..l).map(|_| rng.uniform(-1.0, 1.0)).collect());
    let e = Tensor::vector((0..l).map(|_| rng.uniform(E_MIN, E_MIN + 1.0)).collect());
    let w_std = (1.0 / l as f64).sqrt();
    let alpha = normal_tensor(&[d_out, l], w_std, rng);
    let beta = normal_tensor(&[d_out, l], w_std, rng);
    XNetParams { a, c, e, alpha, beta }
}

/// `[batch, d_in] → [batch, d_out]`:
/// `s = x·aᵀ + c`, `den = s² + e²`, output `α·(s/den) + β·(e/den)`.
pub fn xnet_forward(tape: &mut Tape, p: &XNetVars, x: Var) -> Result<Var> {
    let s = tape.record_affine(x, p.a, p.c)?;
    let real = tape.cauchy(s, p.e, CauchyPart::Real)?;
    let imag = tape.cauchy(s, p.e, CauchyPart::Imag)?;
    let out_re = tape.matmul_t(real, p.alpha)?;
    let out_im = tape.matmul_t(imag, p.beta)?;
    tape.add(out_re, out_im)
}

#[derive(Debug, Clone)]
pub struct XNet {
    d_in: usize,
    d_out: usize,
    basis: usize,
}

impl XNet {
    pub fn new(d_in: usize, d_out: usize, basis: usize) -> Result<Self> {
        if basis == 0 || d_in == 0 || d_out == 0 {
            return Err(Error::Config(format!(
                "XNet needs positive sizes, got d_in={d_in}, d_out={d_out}, L={basis}"
            )));
        }
        Ok(Self { d_in, d_out, basis })
    }

    pub fn basis(&self) -> usize {
        self.basis
    }
}

impl Architecture for XNet {
    fn name(&self) -> &'static str {
        "xnet"
    }

    fn input_dim(&self) -> usize {
        self.d_in
    }

    fn output_dim(&self) -> usize {
        self.d_out
    }

    fn param_count(&self) -> usize {
        self.basis * (self.d_in + 2) + 2 * self.d_out * self.basis
    }

    fn init(&self, rng: &mut RngState) -> NamedTensors {
        init_with_basis(self.basis, self.d_in, self.d_out, rng).into_named()
    }

    fn forward(&self, tape: &mut Tape, params: &[Var], x: Var) -> Result<Var> {
        xnet_forward(tape, &XNetVars::from_slice(params)?, x)
    }
}
