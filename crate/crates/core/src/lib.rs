//! Motion summarization by rank pooling TV-L1 optical flow.
//!
//! A clip is turned into a stack of dense flow fields ([`tvl1`]), small
//! vectors are suppressed, and the stack is rank-pooled ([`rankpool`]) into a
//! single two-channel dynamic image ([`dynflow`]). [`synth`] produces labeled
//! test clips with known motion and lighting changes, and [`eval`] trains and
//! scores a small classifier on the pooled images. [`io`] and [`viz`] hold
//! the file formats and flow colour coding.

pub mod dynflow;
pub mod error;
pub mod eval;
pub mod image;
pub mod io;
pub mod rankpool;
pub mod synth;
pub mod tvl1;
pub mod viz;

pub use error::{Error, Result};
pub use image::{FlowField, GrayImage, Pyramid};
