//! Unicast capacity of layered linear deterministic relay networks.
//!
//! The deterministic model turns a wireless link into a binary matrix:
//! transmitted bits broadcast along every out-edge and bits colliding at one
//! receive level XOR together. The capacity between the single source and
//! destination is then the minimum, over all source/destination cuts, of the
//! GF(2) rank of the cut's adjacency matrix - a rank, not an edge count, so
//! classical augmenting-path solvers do not apply directly.
//!
//! This crate finds that capacity by growing a maximum set of linearly
//! independent source-destination paths, one per iteration, with a
//! depth-first search whose forward moves are guarded by rank checks
//! ([`mdfs`]). Exponential cut enumeration and brute-force path enumeration
//! live in [`oracle`] for cross-validation on small instances, and [`scheme`]
//! turns a maximum path set into a working one-bit relay transmission scheme
//! with full-rank transfer matrix, plus a bit-exact simulator for it.

pub mod error;
pub mod format;
pub mod gf2;
pub mod mdfs;
pub mod network;
pub mod oracle;
pub mod scheme;

pub use error::{Error, Result, Violation};
pub use gf2::Gf2Matrix;
pub use mdfs::{
    mdfs_iteration, unicast_capacity, unicast_capacity_with, IterationOutcome, IterationStats,
    PathSet, SolveOptions, SolveResult,
};
pub use network::{
    gen_random, levels_from_snr, point_to_point, Edge, LayeredNetwork, NodeId, NodeKind, SuperNode,
};
pub use oracle::{
    cut_rank, max_independent_paths_bruteforce, min_cut_capacity, verify_paths_independent, Cut,
};
pub use scheme::{decode, extract_scheme, simulate, transfer_matrix, TransmissionScheme};
