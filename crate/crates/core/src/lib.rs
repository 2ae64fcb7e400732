//! Polar codes over binary erasure channels, and the machinery that turns a
//! Rayleigh fading link into such a channel.
//!
//! The crate is organised bottom-up:
//!
//! * [`polar`] constructs polar codes from Bhattacharyya parameters, encodes
//!   with the `G_2^{⊗n}` transform and decodes by successive cancellation
//!   over the ternary erasure alphabet.
//! * [`inner`] is the inner code chain: CRC framing, a punctured
//!   convolutional code, block interleaving and soft-decision Viterbi
//!   decoding. A block whose CRC fails after decoding becomes an erasure.
//! * [`channel`] holds the stochastic channels: a memoryless erasure channel
//!   and a flat Rayleigh fading BPSK link.
//! * [`experiments`] runs the Monte-Carlo studies: erasure probability of the
//!   degraded link, polar BLER, the largest polar rate meeting a target BLER,
//!   and the inner/outer rate trade-off ratio.
//! * [`config`] resolves the flat JSON run configuration used by the CLI.

pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod inner;
pub mod polar;
pub mod report;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
