//! Crate-wide error type.

use thiserror::Error;

/// Errors shared by all modules of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two cone points or matrices of different ambient dimension were mixed.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An operation required an interior cone point.
    #[error("lattice point is not in the interior of the cone")]
    NotInterior,

    /// Two vectors over different one-particle spaces were combined.
    #[error("one-particle spaces do not match")]
    SpaceMismatch,

    /// An inner-product exponent left the range representable in f64.
    #[error("exponent magnitude {magnitude} exceeds the overflow guard of 300")]
    ExponentOverflow { magnitude: f64 },

    /// A map passed to second quantization failed the isometry check on the
    /// active arguments.
    #[error("map is not isometric on the supplied arguments")]
    NotIsometricOnSupport,

    /// A tensor-split partition did not cover the support of the vector.
    #[error("support cell is not assigned to exactly one summand")]
    BadPartition,

    /// A state entry referenced a cell outside the module.
    #[error("cell lies outside the module of the representation")]
    CellOutsideModule,

    /// The zero state was passed where a nonzero one is required.
    #[error("state is zero")]
    ZeroState,

    /// Generators failed the additive-cocycle conditions.
    #[error("generators violate the additive-cocycle conditions")]
    NotACocycle,

    /// A solver region failed its validity checks.
    #[error("solve region is invalid: {reason}")]
    BadRegion { reason: String },

    /// A compression window contained no cells.
    #[error("compression window is empty")]
    EmptyWindow,

    /// Two compressed representations live over cones of different dimension.
    #[error("ambient cone dimensions differ")]
    ConeMismatch,

    /// A least-squares sample does not span the ambient space.
    #[error("sample points do not span the ambient space")]
    DegenerateSample,

    /// A module descriptor other than the full orthant was supplied where the
    /// orthant is required.
    #[error("operation requires the full orthant module")]
    UnsupportedModule,

    /// A matrix expected to be unitary failed the check.
    #[error("matrix is not unitary")]
    NotUnitary,

    /// Invalid experiment configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Unknown experiment name in a configuration.
    #[error("unknown experiment: {0}")]
    UnknownExperiment(String),
}

pub type Result<T> = std::result::Result<T, Error>;
