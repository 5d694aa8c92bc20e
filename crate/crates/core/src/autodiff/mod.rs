//! Tape-based reverse-mode differentiation over dense `f64` tensors.
//!
//! Operations are recorded at batch granularity (one node per affine map
//! over the whole path batch) so a rollout of `N` steps produces a tape of
//! `O(N)` nodes regardless of batch size or dimension.

mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use gradcheck::{finite_diff_check, relative_deviation, GradCheckReport, ParamDeviation, DEFAULT_GRAD_FLOOR};
pub use params::{ParamId, ParamStore, Parameter};
pub use tape::{CauchyPart, Elementwise, ReduceKind, Tape, Var, EPS_DIV};
pub use tensor::Tensor;
