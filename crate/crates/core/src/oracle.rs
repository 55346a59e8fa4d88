//! Ground-truth oracles for cross-validating the solver on small instances.
//!
//! Everything here is intentionally exhaustive: cuts are enumerated by
//! bitmask over the intermediate super nodes and paths by full DFS, with no
//! pruning. Trustworthiness over speed.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::mdfs::PathSet;
use crate::network::{Edge, LayeredNetwork};

/// Default cap on intermediate super nodes for cut enumeration (2^n cuts).
pub const DEFAULT_CUT_BOUND: usize = 20;

/// Default cap on the number of distinct source-destination paths for the
/// brute-force independent-subset search (2^n subsets).
pub const DEFAULT_PATH_BOUND: usize = 14;

/// A source/destination partition: the source-side super nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    omega: BTreeSet<String>,
}

impl Cut {
    /// Build a cut from the source-side ids. The source must be inside, the
    /// destination outside, and every id known.
    pub fn new(net: &LayeredNetwork, omega: impl IntoIterator<Item = String>) -> Result<Cut> {
        let omega: BTreeSet<String> = omega.into_iter().collect();
        for id in &omega {
            if net.supernode(id).is_none() {
                return Err(Error::UnknownNode(id.clone()));
            }
        }
        let source = net.source().ok_or_else(|| {
            Error::InvalidNetwork(net.validate())
        })?;
        let dest = net.destination().ok_or_else(|| {
            Error::InvalidNetwork(net.validate())
        })?;
        if !omega.contains(&source.id) {
            return Err(Error::UnknownNode(format!(
                "cut must contain the source {:?}",
                source.id
            )));
        }
        if omega.contains(&dest.id) {
            return Err(Error::UnknownNode(format!(
                "cut must not contain the destination {:?}",
                dest.id
            )));
        }
        Ok(Cut { omega })
    }

    pub fn source_side(&self) -> &BTreeSet<String> {
        &self.omega
    }

    pub fn contains(&self, id: &str) -> bool {
        self.omega.contains(id)
    }
}

/// Rank of the cut's crossing-edge adjacency, summed per layer cut. The full
/// crossing matrix is block diagonal with one block per layer, so the sum
/// equals the rank of the whole.
pub fn cut_rank(net: &LayeredNetwork, cut: &Cut) -> Result<usize> {
    let mut total = 0;
    for l in 0..net.layers() - 1 {
        let crossing = crossing_edges(net, cut, l)?;
        if crossing.is_empty() {
            continue;
        }
        total += net.adjacency_of_edges(&crossing)?.rank();
    }
    Ok(total)
}

fn crossing_edges(net: &LayeredNetwork, cut: &Cut, layer: usize) -> Result<Vec<Edge>> {
    Ok(net
        .layer_cut_edges(layer)?
        .into_iter()
        .filter(|e| cut.contains(&e.from.supernode) && !cut.contains(&e.to.supernode))
        .collect())
}

/// Minimum cut value over all 2^(intermediate count) cuts, with one argmin.
pub fn min_cut_capacity(net: &LayeredNetwork) -> Result<(usize, Cut)> {
    min_cut_capacity_bounded(net, DEFAULT_CUT_BOUND)
}

pub fn min_cut_capacity_bounded(
    net: &LayeredNetwork,
    max_intermediates: usize,
) -> Result<(usize, Cut)> {
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidNetwork(violations));
    }
    let source = net.source().expect("validated").id.clone();
    let dest = net.destination().expect("validated").id.clone();
    let intermediates: Vec<&str> = net
        .supernodes()
        .iter()
        .map(|s| s.id.as_str())
        .filter(|id| *id != source && *id != dest)
        .collect();
    if intermediates.len() > max_intermediates {
        return Err(Error::TooLarge {
            what: "exhaustive cut enumeration (use the search solver instead)",
            actual: intermediates.len(),
            limit: max_intermediates,
        });
    }
    let mut best: Option<(usize, Cut)> = None;
    for mask in 0u64..1 << intermediates.len() {
        let omega = std::iter::once(source.clone()).chain(
            intermediates
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask >> i & 1 == 1)
                .map(|(_, id)| id.to_string()),
        );
        let cut = Cut::new(net, omega)?;
        let value = cut_rank(net, &cut)?;
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, cut));
        }
    }
    Ok(best.expect("at least the trivial cut exists"))
}

/// Are these paths linearly independent? True iff in every layer cut the k
/// path edges are endpoint-disjoint on both sides and their adjacency matrix
/// has rank k. Endpoint-disjointness is required first because duplicated
/// endpoints would collapse rows of the adjacency matrix and make the rank
/// test meaningless.
pub fn verify_paths_independent(net: &LayeredNetwork, paths: &PathSet) -> Result<bool> {
    let k = paths.len();
    if k == 0 {
        return Ok(true);
    }
    let lookup = net.edge_lookup();
    for path in &paths.paths {
        for e in path {
            let key = (
                e.from.supernode.as_str(),
                e.from.level,
                e.to.supernode.as_str(),
                e.to.level,
            );
            if !lookup.contains(&key) {
                return Err(Error::InvalidPaths(format!("edge {e} not in network")));
            }
        }
    }
    let cuts = net.layers() - 1;
    // structural shape: one edge per layer cut, consecutive edges joined at a
    // super node
    for path in &paths.paths {
        if path.len() != cuts {
            return Ok(false);
        }
        for (i, e) in path.iter().enumerate() {
            let from_layer = net.supernode(&e.from.supernode).map(|s| s.layer);
            if from_layer != Some(i) {
                return Ok(false);
            }
            if i > 0 && path[i - 1].to.supernode != e.from.supernode {
                return Ok(false);
            }
        }
    }
    for l in 0..cuts {
        let cut_edges: Vec<Edge> = paths.paths.iter().map(|p| p[l].clone()).collect();
        let tx: BTreeSet<_> = cut_edges.iter().map(|e| &e.from).collect();
        let rx: BTreeSet<_> = cut_edges.iter().map(|e| &e.to).collect();
        if tx.len() != k || rx.len() != k {
            return Ok(false);
        }
        if net.adjacency_of_edges(&cut_edges)?.rank() != k {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Maximum independent subset size over *all* enumerated source-destination
/// paths, checked subset by subset. Independent second oracle; exponential
/// twice over, so only for tiny instances.
pub fn max_independent_paths_bruteforce(net: &LayeredNetwork) -> Result<usize> {
    max_independent_paths_bruteforce_bounded(net, DEFAULT_PATH_BOUND)
}

pub fn max_independent_paths_bruteforce_bounded(
    net: &LayeredNetwork,
    max_paths: usize,
) -> Result<usize> {
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidNetwork(violations));
    }
    let all = enumerate_sd_paths(net, max_paths)?;
    let mut best = 0;
    for mask in 0u64..1 << all.len() {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let subset = PathSet {
            paths: all
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| p.clone())
                .collect(),
        };
        if verify_paths_independent(net, &subset)? {
            best = size;
        }
    }
    Ok(best)
}

/// Every source-destination path, in lexicographic edge order, failing once
/// more than `max_paths` exist.
fn enumerate_sd_paths(net: &LayeredNetwork, max_paths: usize) -> Result<Vec<Vec<Edge>>> {
    let source = net.source().expect("validated").id.clone();
    let cuts = net.layers() - 1;
    let mut done = Vec::new();
    // stack of (path so far, super node to leave from)
    let mut stack = vec![(Vec::new(), source)];
    while let Some((path, at)) = stack.pop() {
        if path.len() == cuts {
            done.push(path);
            if done.len() > max_paths {
                return Err(Error::TooLarge {
                    what: "exhaustive path enumeration",
                    actual: done.len(),
                    limit: max_paths,
                });
            }
            continue;
        }
        let out: Vec<&Edge> = net
            .edges()
            .iter()
            .filter(|e| e.from.supernode == at)
            .collect();
        // reversed push keeps lexicographic order on pop
        for e in out.into_iter().rev() {
            let mut next = path.clone();
            next.push(e.clone());
            stack.push((next, e.to.supernode.clone()));
        }
    }
    Ok(done)
}
