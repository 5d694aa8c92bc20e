//! Least-squares XNet fits of one-dimensional analytic functions, showing
//! how the error falls as the number of Cauchy kernels grows.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamId, ParamStore, Tape, Tensor};
use crate::error::{Error, Result};
use crate::networks::{init_xnet, xnet_forward, NetworkConfig, XNetParams, XNetVars};
use crate::sampler::RngState;
use crate::solver::{adam_step, AdamConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxTarget {
    /// `1 / (1 + x²)`, a single Cauchy kernel.
    Runge,
    Exp,
}

impl ApproxTarget {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            ApproxTarget::Runge => 1.0 / (1.0 + x * x),
            ApproxTarget::Exp => x.exp(),
        }
    }
}

impl FromStr for ApproxTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "runge" => Ok(Self::Runge),
            "exp" => Ok(Self::Exp),
            other => Err(Error::UnknownName {
                kind: "approximation target",
                name: other.into(),
                known: "runge, exp".into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub target: ApproxTarget,
    /// Kernel counts L, fitted in increasing order.
    pub basis: Vec<usize>,
    pub iterations: usize,
    /// Uniform fit points on [-1, 1].
    pub points: usize,
    /// Random restarts per L, besides the warm start from the previous L.
    pub restarts: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub seed: u64,
}

impl ApproxConfig {
    pub fn new(target: ApproxTarget, basis: Vec<usize>) -> Self {
        Self {
            target,
            basis,
            iterations: 20_000,
            points: 401,
            restarts: 3,
            lr_start: 1e-2,
            lr_end: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxRow {
    pub basis: usize,
    pub max_abs_error: f64,
    /// Root mean square error over the fit points.
    pub l2_error: f64,
}

struct Fit {
    params: XNetParams,
    loss: f64,
}

fn grid(points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.0];
    }
    (0..points)
        .map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64)
        .collect()
}

fn vars(tape: &mut Tape, store: &ParamStore, ids: &[ParamId]) -> Result<XNetVars> {
    let v = ids
        .iter()
        .map(|&id| tape.param(store, id))
        .collect::<Result<Vec<_>>>()?;
    XNetVars::from_slice(&v)
}

fn predict(params: &XNetParams, xs: &Tensor) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let v = params.constants(&mut tape)?;
    let x = tape.constant(xs.clone())?;
    let y = xnet_forward(&mut tape, &v, x)?;
    Ok(tape.value(y).data().to_vec())
}

/// Full-batch Adam on the mean squared error with a geometric learning-rate
/// decay; keeps the best parameters seen.
fn fit(start: XNetParams, xs: &Tensor, ys: &Tensor, cfg: &ApproxConfig) -> Result<Fit> {
    let mut store = ParamStore::new();
    let ids = start
        .clone()
        .into_named()
        .into_iter()
        .map(|(n, t)| store.insert(n, t))
        .collect::<Result<Vec<_>>>()?;
    let mut best = Fit {
        params: start,
        loss: f64::INFINITY,
    };
    let adam = AdamConfig::default();
    let decay = (cfg.lr_end / cfg.lr_start).powf(1.0 / cfg.iterations.max(1) as f64);
    let mut tape = Tape::new();
    for it in 0..=cfg.iterations {
        tape.clear();
        let v = vars(&mut tape, &store, &ids)?;
        let x = tape.constant(xs.clone())?;
        let y = match xnet_forward(&mut tape, &v, x) {
            Ok(y) => y,
            Err(Error::NonFinite { .. }) => break,
            Err(e) => return Err(e),
        };
        let target = tape.constant(ys.clone())?;
        let diff = tape.sub(y, target)?;
        let sq = tape.square(diff)?;
        let loss = tape.mean(sq)?;
        let l = tape.value(loss).data()[0];
        if l < best.loss {
            best.loss = l;
            best.params = XNetParams::from_named(
                &store
                    .iter()
                    .map(|(_, p)| (p.name.clone(), p.value.clone()))
                    .collect::<Vec<_>>(),
            )?;
        }
        if it == cfg.iterations {
            break;
        }
        tape.backward(loss, &mut store)?;
        adam_step(&mut store, cfg.lr_start * decay.powi(it as i32), &adam, it as u64 + 1);
    }
    Ok(best)
}

/// `prev` extended to `l` kernels; the new kernels start with zero residues
/// so the fitted function is unchanged.
fn widen(prev: &XNetParams, l: usize, rng: &mut RngState) -> Result<XNetParams> {
    let fresh = init_xnet(&NetworkConfig { basis: Some(l), ..NetworkConfig::default() }, 1, 1, rng)?;
    let k = prev.basis();
    let mut a = fresh.a.data().to_vec();
    let mut c = fresh.c.data().to_vec();
    let mut e = fresh.e.data().to_vec();
    let mut alpha = vec![0.0; l];
    let mut beta = vec![0.0; l];
    a[..k].copy_from_slice(prev.a.data());
    c[..k].copy_from_slice(prev.c.data());
    e[..k].copy_from_slice(prev.e.data());
    alpha[..k].copy_from_slice(prev.alpha.data());
    beta[..k].copy_from_slice(prev.beta.data());
    Ok(XNetParams {
        a: Tensor::new(vec![l, 1], a)?,
        c: Tensor::vector(c),
        e: Tensor::vector(e),
        alpha: Tensor::new(vec![1, l], alpha)?,
        beta: Tensor::new(vec![1, l], beta)?,
    })
}

/// Fits an XNet with each kernel count in `cfg.basis` and reports the
/// error of the best fit per count.
pub fn approx_benchmark(cfg: &ApproxConfig) -> Result<Vec<ApproxRow>> {
    if cfg.basis.is_empty() || cfg.basis.contains(&0) {
        return Err(Error::Config("kernel counts must be at least 1".into()));
    }
    if cfg.points == 0 || !(cfg.lr_start > 0.0 && cfg.lr_end > 0.0) {
        return Err(Error::Config("approximation needs points and positive learning rates".into()));
    }
    let xs_raw = grid(cfg.points);
    let xs = Tensor::matrix(cfg.points, 1, xs_raw.clone())?;
    let ys_raw: Vec<f64> = xs_raw.iter().map(|&x| cfg.target.eval(x)).collect();
    let ys = Tensor::matrix(cfg.points, 1, ys_raw.clone())?;
    let mut basis = cfg.basis.clone();
    basis.sort_unstable();

    let mut rng = RngState::new(cfg.seed);
    let mut prev: Option<Fit> = None;
    let mut rows = Vec::with_capacity(basis.len());
    for &l in &basis {
        let net = NetworkConfig {
            basis: Some(l),
            ..NetworkConfig::default()
        };
        let mut starts = Vec::with_capacity(cfg.restarts + 1);
        for _ in 0..cfg.restarts {
            starts.push(init_xnet(&net, 1, 1, &mut rng)?);
        }
        if let Some(p) = &prev {
            starts.push(widen(&p.params, l, &mut rng)?);
        }
        let mut best: Option<Fit> = None;
        for s in starts {
            let f = fit(s, &xs, &ys, cfg)?;
            if best.as_ref().is_none_or(|b| f.loss < b.loss) {
                best = Some(f);
            }
        }
        let best = best.ok_or_else(|| Error::Config("no restarts requested".into()))?;
        let pred = predict(&best.params, &xs)?;
        let (mut max_abs, mut ss) = (0.0f64, 0.0);
        for (p, y) in pred.iter().zip(&ys_raw) {
            max_abs = max_abs.max((p - y).abs());
            ss += (p - y).powi(2);
        }
        rows.push(ApproxRow {
            basis: l,
            max_abs_error: max_abs,
            l2_error: (ss / cfg.points as f64).sqrt(),
        });
        prev = Some(best);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kernels_is_an_error() {
        let cfg = ApproxConfig::new(ApproxTarget::Exp, vec![0, 4]);
        assert!(approx_benchmark(&cfg).is_err());
    }

    #[test]
    fn widening_preserves_the_function() {
        let mut rng = RngState::new(4);
        let p = init_xnet(&NetworkConfig { basis: Some(3), ..NetworkConfig::default() }, 1, 1, &mut rng).unwrap();
        let w = widen(&p, 7, &mut rng).unwrap();
        let xs = Tensor::matrix(11, 1, grid(11)).unwrap();
        for (a, b) in predict(&p, &xs).unwrap().iter().zip(predict(&w, &xs).unwrap()) {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }

    #[test]
    fn targets_parse() {
        assert_eq!("runge".parse::<ApproxTarget>().unwrap(), ApproxTarget::Runge);
        assert!("sin".parse::<ApproxTarget>().is_err());
        assert_eq!(ApproxTarget::Runge.eval(1.0), 0.5);
    }
}
