//! Lossless 2D triangular waveguide-mesh simulation with online dispersion
//! correction by allpass frequency warping.
//!
//! The crate is organized bottom-up:
//!
//! - [`lattice`]: construction of the square-ish triangular mesh with a
//!   clamped rim, integer junction handles, and ordered six-port adjacency.
//! - [`warp`]: the first-order allpass element, the warped unit delay built
//!   from it, and the induced frequency-warping map with its inverse.
//! - [`sim`]: time steppers for the four schemes (wave scattering and
//!   finite-difference forms, unwarped and warped), impulse excitation, and
//!   probe capture. Stepping is data-parallel when the `parallel` feature is
//!   enabled and bit-identical to the sequential fallback.
//! - [`analysis`]: dispersion curves, mode prediction for the clamped square,
//!   FFT spectra, peak picking, and mode matching.
//! - [`cost`]: exact rational per-junction operation counts and the derived
//!   comparison table, cross-checked against instrumented simulator steps.
//!
//! All floating-point paths are deterministic: fixed summation order, no
//! threading-dependent reductions, so repeated runs produce byte-identical
//! output.

pub mod analysis;
pub mod cost;
mod error;
mod kernel;
pub mod lattice;
pub mod sim;
pub mod warp;

pub use error::{Error, Result};
