//! Spectrally adaptive common spatial patterns (SACSP).
//!
//! Learns pairs of spatial filters and per-filter spectral weights that
//! maximize the spectrally-weighted power of one class relative to the total
//! power, by alternating a closed-form spectral update with a generalized
//! eigenvector spatial update. CSP and CCACSP are provided as the fixed-weight
//! special cases, together with the preprocessing, shrinkage-LDA classifier,
//! synthetic-data generator and evaluation protocols around them.

pub mod linalg;
pub mod algorithms;
pub mod classify;
pub mod eval;
pub mod preprocess;
pub mod spectral;
pub mod synth;

pub use preprocess::{ClassId, Epoch, EpochSet};
