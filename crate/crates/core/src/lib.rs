//! Guessing Random Additive Noise Decoding (GRAND) over higher-order QAM.
//!
//! Two soft-detection paths are provided side by side:
//!
//! * **binary ORBGRAND**: received symbols are demapped to per-bit LLRs with
//!   the Log-MAP demapper, bits are rank-ordered by `|LLR|` and patterns of
//!   bit flips are queried in order of a piecewise-linear weight model;
//! * **symbol ORBGRAND**: for every received symbol the `mu` nearest
//!   constellation points are kept, each alternative is scored by its
//!   exceedance distance (extra squared distance over the hard decision), and
//!   patterns of symbol substitutions are queried in the same weight order.
//!   No LLR is ever computed on this path.
//!
//! The [`sim`] module runs both on identical noise realizations and reports
//! BLER and query statistics.

pub mod codebook;
pub mod decoder;
mod error;
pub mod gf2;
pub mod modem;
pub mod patterns;
pub mod sim;

pub use error::{Error, Result};
