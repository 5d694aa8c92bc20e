//! Gradient networks for the Deep BSDE rollout.
//!
//! Architectures implement [`Architecture`] and are registered by name in an
//! [`ArchitectureRegistry`]; the solver only ever talks to the trait object.

mod archive;
mod fnn;
mod xnet;

use std::collections::BTreeMap;
use std::fmt::{self, Debug};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::sampler::RngState;

pub use archive::{read_archive, read_archive_from, write_archive, write_archive_to};
pub use fnn::{fnn_forward, init_fnn, FnnParams, FnnVars, TwoLayerNet};
pub use xnet::{init_xnet, xnet_forward, XNet, XNetParams, XNetVars, E_MIN};

/// Parameters as `(name, tensor)` pairs in the order `forward` expects them.
pub type NamedTensors = Vec<(String, Tensor)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    /// One sub-network per interior time step.
    Discrete,
    /// A single network fed with `(t/T, x)`.
    Continuous,
}

impl TimeMode {
    /// Network input width for a problem of dimension `d`.
    pub fn input_dim(self, d: usize) -> usize {
        match self {
            TimeMode::Discrete => d,
            TimeMode::Continuous => d + 1,
        }
    }
}

impl FromStr for TimeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(TimeMode::Discrete),
            "continuous" => Ok(TimeMode::Continuous),
            other => Err(Error::UnknownName {
                kind: "time mode",
                name: other.to_string(),
                known: "discrete, continuous".into(),
            }),
        }
    }
}

impl fmt::Display for TimeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeMode::Discrete => "discrete",
            TimeMode::Continuous => "continuous",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::UnknownName {
                kind: "activation",
                name: other.to_string(),
                known: "relu, tanh".into(),
            }),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Registry name, e.g. `"xnet"` or `"two-layer"`.
    pub architecture: String,
    pub time_mode: TimeMode,
    /// Number of Cauchy basis functions (XNet only); defaults to `d`.
    pub basis: Option<usize>,
    /// Hidden activation (two-layer net only).
    pub activation: Activation,
    pub init_seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            architecture: "xnet".into(),
            time_mode: TimeMode::Discrete,
            basis: None,
            activation: Activation::Relu,
            init_seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn basis_for(&self, d: usize) -> usize {
        self.basis.unwrap_or(d)
    }
}

/// A network mapping `[batch, input_dim]` to `[batch, output_dim]`.
pub trait Architecture: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    /// Closed-form number of scalar parameters.
    fn param_count(&self) -> usize;

    /// Freshly initialized parameters in forward order.
    fn init(&self, rng: &mut RngState) -> NamedTensors;

    /// Records the forward pass; `params` are tape handles in `init` order.
    fn forward(&self, tape: &mut Tape, params: &[Var], x: Var) -> Result<Var>;
}

pub type ArchitectureFactory = fn(&NetworkConfig, usize, usize) -> Result<Box<dyn Architecture>>;

/// Name → constructor map for network architectures.
#[derive(Clone)]
pub struct ArchitectureRegistry {
    entries: BTreeMap<&'static str, ArchitectureFactory>,
}

impl ArchitectureRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("xnet", |cfg, d_in, d_out| {
            Ok(Box::new(XNet::new(d_in, d_out, cfg.basis_for(d_out))?))
        });
        reg.register("two-layer", |cfg, d_in, d_out| {
            Ok(Box::new(TwoLayerNet::new(d_in, d_out, cfg.activation)?))
        });
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: ArchitectureFactory) {
        self.entries.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn build(&self, config: &NetworkConfig, d_in: usize, d_out: usize) -> Result<Box<dyn Architecture>> {
        let key = config.architecture.replace('_', "-");
        let factory = self.entries.get(key.as_str()).ok_or_else(|| Error::UnknownName {
            kind: "architecture",
            name: config.architecture.clone(),
            known: self.names().join(", "),
        })?;
        factory(config, d_in, d_out)
    }
}

impl Default for ArchitectureRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Builds the gradient network for a problem of dimension `d`.
pub fn build_for_dim(config: &NetworkConfig, d: usize) -> Result<Box<dyn Architecture>> {
    ArchitectureRegistry::builtin().build(config, config.time_mode.input_dim(d), d)
}

fn normal_tensor(shape: &[usize], std: f64, rng: &mut RngState) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| std * rng.normal()).collect();
    Tensor::new(shape.to_vec(), data).expect("shape")
}

fn take<'a>(named: &'a [(String, Tensor)], name: &str) -> Result<&'a Tensor> {
    named
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, t)| t)
        .ok_or_else(|| Error::UnknownParam(name.to_string()))
}
