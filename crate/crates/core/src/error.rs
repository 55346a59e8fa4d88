//! Crate-wide error type and network validation diagnostics.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row index {index} out of range for matrix with {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },

    #[error("label {0} not present in matrix")]
    LabelNotFound(String),

    #[error("unknown node {0}")]
    UnknownNode(String),

    #[error("layer index {index} out of range ({layers} layers)")]
    LayerOutOfRange { index: usize, layers: usize },

    #[error("SNR must exceed 1 for a non-trivial link (got {0})")]
    SnrOutOfRange(f64),

    #[error("invalid network:\n{}", list(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("instance too large for {what}: {actual} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("invalid path set: {0}")]
    InvalidPaths(String),

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("transfer matrix is singular")]
    SingularMatrix,

    #[error("message length {got} does not match scheme rate {expected}")]
    MessageLength { expected: usize, got: usize },
}

fn list(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// One structural defect found by [`crate::network::LayeredNetwork::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("network must have at least 2 layers (got {0})")]
    TooFewLayers(usize),

    #[error("duplicate super node id {0:?}")]
    DuplicateSupernode(String),

    #[error("super node {id:?} has layer {layer}, outside 0..{layers}")]
    SupernodeLayerOutOfRange {
        id: String,
        layer: usize,
        layers: usize,
    },

    #[error("layer 0 must hold exactly one super node (the source), found {0}")]
    SourceCount(usize),

    #[error("last layer must hold exactly one super node (the destination), found {0}")]
    DestinationCount(usize),

    #[error("source {0:?} must have no receiving levels")]
    SourceHasRx(String),

    #[error("destination {0:?} must have no transmitting levels")]
    DestinationHasTx(String),

    #[error("edge {edge} references unknown super node {id:?}")]
    UnknownSupernode { edge: String, id: String },

    #[error("edge {edge} endpoints have wrong kinds")]
    WrongKind { edge: String },

    #[error("edge {edge} references a level beyond the declared count")]
    DanglingLevel { edge: String },

    #[error("edge {edge} does not connect consecutive layers")]
    NonConsecutiveLayers { edge: String },

    #[error("duplicate edge {edge}")]
    DuplicateEdge { edge: String },
}
