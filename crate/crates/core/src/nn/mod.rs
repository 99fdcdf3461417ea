//! Minimal reverse-mode autodiff and transformer building blocks.
//!
//! Every tensor is a row-major matrix. A batch of variable-length
//! sequences is packed row-wise with no padding; attention receives the
//! segment boundaries explicitly.

mod checkpoint;
mod layers;
mod optim;
mod params;
mod tape;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use checkpoint::{
    read_checkpoint, write_checkpoint, Checkpoint, CheckpointError, CheckpointHeader, TensorInfo,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use layers::{
    Activation, AttentionParams, DecoderLayerParams, EncoderLayerParams, FeedForwardParams, LayerNormParams,
    LinearParams,
};
pub use optim::{Adam, AdamConfig, AdamState, LrSchedule};
pub use params::{ParamId, ParamStore, Tensor};
pub use tape::{
    attention_forward, gelu, layer_norm_forward, softmax_rows, AttnLayout, NodeId, ParamGrads, Tape,
};

/// Floating point element type of the network (`f32` to train, `f64` for
/// gradient checks).
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub const LAYER_NORM_EPS: f64 = 1e-5;
