use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("invalid axis {axis} for tensor of rank {rank}")]
    InvalidAxis { axis: usize, rank: usize },

    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("duplicate parameter name `{0}`")]
    DuplicateParam(String),

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite state in forward simulation at step {step}")]
    NonFiniteState { step: usize },

    #[error("non-finite value in rollout at iteration {iteration}, time step {step}")]
    NonFiniteLoss { iteration: usize, step: usize },

    #[error("run {run} (steps = {steps}) failed: {source}")]
    RunFailed {
        run: usize,
        steps: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("branching tree exceeded {cap} particles in sample {sample}")]
    ParticleCap { cap: usize, sample: u64 },

    #[error("unsupported problem for this oracle: {0}")]
    Unsupported(String),

    #[error("empty averaging window [{lo}, {hi}) for a trace of length {len}")]
    EmptyWindow { lo: usize, hi: usize, len: usize },

    #[error("relative error undefined for a zero reference")]
    ZeroReference,

    #[error("error order needs positive errors, got {coarse} and {fine}")]
    NonPositiveError { coarse: f64, fine: f64 },

    #[error("error order needs doubling step counts, got {coarse} -> {fine}")]
    NotDoubling { coarse: usize, fine: usize },

    #[error("archive format: {0}")]
    Archive(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
