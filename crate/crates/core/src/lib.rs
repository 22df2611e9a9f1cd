//! Decision procedures, capacity bounds and simulation for finite arbitrarily
//! varying channels (AVCs) under adversarial jamming.
//!
//! An AVC is a family `{W_s}` of channels indexed by a state the jammer picks
//! per letter. This crate decides symmetrizability (can the jammer make input
//! letters indistinguishable?) and left-invertibility of the channel matrix,
//! constructs binary output quantizers that preserve non-symmetrizability,
//! brackets the maximum-error capacity under block-restricted jamming, and
//! simulates coded transmission against exhaustively enumerated or sampled
//! jammer strategies.

// Index-heavy matrix kernels read better with explicit loop indices.
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod channel;
pub mod channel_spec;
pub mod feasibility;
pub mod prob;
pub mod quantize;
pub mod sim;
pub mod symmetrizability;

mod error;

pub use channel::{Avc, Channel, ChannelMatrixView};
pub use error::{Error, Result};
pub use prob::{Dist, Factor, JointDist};
