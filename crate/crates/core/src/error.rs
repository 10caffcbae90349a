//! Domain errors shared across the library.
//!
//! Everything a caller can trigger with bad input is an [`Error`]; internal
//! invariant breaches panic instead (they indicate a bug, not a bad input).

use thiserror::Error;

/// Library-level error type.
#[derive(Debug, Error)]
pub enum Error {
    /// The surface has complexity 3g − 3 + m < 2; none of the graph
    /// constructions are defined there.
    #[error("exceptional surface: genus {genus}, punctures {punctures} (needs 3g-3+m >= 2)")]
    ExceptionalSurface { genus: u32, punctures: u32 },

    /// Corner counts that fail the edge-matching conditions, describe more
    /// than one component, or describe an inessential curve.
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    /// A step-measure that is not a finitely supported probability measure
    /// with positive rational weights.
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Malformed or unsupported serialized input (unknown triangulation tag,
    /// missing fields, wrong shapes).
    #[error("format error: {0}")]
    Format(String),

    /// A request that is well-formed but outside the supported domain
    /// (e.g. a curve pair required to fill that does not).
    #[error("unsupported request: {0}")]
    Unsupported(String),

    /// The operands live on different surfaces.
    #[error("surface mismatch: the curves live on different surfaces")]
    SurfaceMismatch,

    /// The operation needs two distinct (non-isotopic) curves.
    #[error("equal curves: the operation needs two non-isotopic curves")]
    EqualCurves,

    /// The operation needs a pair with at least one crossing.
    #[error("disjoint pair: the curves have geometric intersection zero")]
    DisjointPair,

    /// The operation needs a binding pair: every complementary region a disc
    /// or a once-punctured disc.
    #[error("the curve pair does not bind the surface")]
    NotBinding,

    /// The train track admits no strictly positive transverse measure.
    #[error("the train track is not recurrent")]
    NotRecurrent,

    /// Splitting requires a large branch (both half-branches incoming).
    #[error("the chosen branch is not large")]
    NotLargeBranch,

    /// The graph operation requires a connected graph.
    #[error("the graph is not connected")]
    DisconnectedGraph,

    /// The sample paths are too short for the requested diagnostic.
    #[error("sample paths too short: {0}")]
    TooShort(String),
}

/// Convenient result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
