//! Lattice vector quantization with spatially adaptive A-law companding.
//!
//! The core crate is `no_std` (alloc only) and holds everything that does not
//! touch the filesystem: lattice geometry and nearest-point solvers, the
//! two-codebook diamond quantizer and its soft relaxation, A-law companding
//! with a per-location parameter field, an adaptive range coder, and a toy
//! block-transform image codec that ties the pieces together. File formats,
//! synthetic test corpora, and the CLI live in the companion `lvqkit` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod codec;
pub mod compand;
pub mod entropy;
pub mod error;
pub mod lattice;
mod math;
pub mod quant;
mod rng;

pub use error::{Error, Result};
