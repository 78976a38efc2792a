//! Error type shared across the crate.

use crate::sim::Scheme;

/// Unified error type for lattice construction, simulation, and analysis.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A mesh must have at least two sections per side to contain any
    /// interior junction.
    #[error("mesh side must be at least 2 sections, got {0}")]
    SideTooSmall(usize),

    /// A junction id that does not exist in the lattice.
    #[error("junction id {0} out of range (lattice has {1} junctions)")]
    UnknownJunction(usize, usize),

    /// An operation that requires an interior junction was given a rim one.
    #[error("junction {0} lies on the clamped rim")]
    RimJunction(usize),

    /// Allpass coefficients must lie in (-1, 0] for a stable, non-inverting
    /// warp map.
    #[error("allpass coefficient must lie in (-1, 0], got {0}")]
    InvalidAlpha(f64),

    /// A warped scheme is missing its allpass coefficient, or an unwarped
    /// scheme was given one.
    #[error("scheme {scheme} {expectation} an allpass coefficient")]
    AlphaMismatch {
        scheme: Scheme,
        expectation: &'static str,
    },

    /// A step function was applied to a state built for a different update
    /// family.
    #[error("state holds a {actual} mesh but the step requires {required}")]
    SchemeMismatch {
        actual: Scheme,
        required: &'static str,
    },

    /// An input argument violated a documented range or shape requirement.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numeric evaluation left its supported domain (e.g. a frequency
    /// outside the mesh passband, or an arccos argument outside [-1, 1]).
    #[error("numerical domain violation: {0}")]
    NumericalDomain(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
