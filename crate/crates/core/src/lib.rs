//! Tokenized BEV trajectory planning toolkit.
//!
//! The crate covers the full pipeline at desk scale:
//!
//! - [`grid_codec`]: signed-log non-uniform quantization of BEV waypoints
//!   into discrete action tokens, and back.
//! - [`codebook`]: one id space unifying a word-level text vocabulary, the
//!   action grid, and special tokens.
//! - [`soft_label`]: truncated Gaussian target distributions over cells and
//!   the soft-label cross-entropy loss.
//! - [`sequence_builder`]: supervised token sequences for generation,
//!   understanding, endpoint probing, and coarse-to-fine refinement.
//! - [`neural_core`]: a compact decoder-only attention network with exact
//!   analytic gradients, AdamW training, and checkpointing.
//! - [`c2f_decoder`]: autoregressive and two-pass coarse-to-fine decoding
//!   with forward-pass accounting and a latency benchmark.
//! - [`synth_world`]: a kinematic bicycle + PID synthetic driving world that
//!   generates instruction-conditioned training data.
//! - [`dreaming_eval`]: per-class instruction-following success scoring.
//! - [`experiment`]: seeded ablation plans comparing config variants.
//!
//! Start with the `examples/` directory: each example is a runnable tour of
//! one capability. The `bevplan` binary exposes the same functionality as
//! subcommands.

pub mod c2f_decoder;
pub mod cli;
pub mod codebook;
pub mod dreaming_eval;
pub mod error;
pub mod experiment;
pub mod grid_codec;
pub mod neural_core;
pub mod plot;
pub mod sequence_builder;
pub mod soft_label;
pub mod synth_world;
pub mod util;

pub use error::{Error, Result};
