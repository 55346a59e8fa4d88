//! Capacity solver: iterative augmentation of linearly independent
//! source-destination paths.
//!
//! The solver runs in iterations. With k independent paths committed, a
//! modified depth-first search over super nodes tries to produce k+1. Unlike
//! plain DFS, a forward step must keep the used edges of every layer cut
//! linearly independent, so three kinds of moves exist:
//!
//! * **extend** - follow a fresh edge (x, y) forward when adding it keeps the
//!   cut's used-edge matrix at full rank. The rank test reduces to an O(k)
//!   parity check against the span of x (see below).
//! * **rewire** - swap used edges along an alternating chain inside one layer
//!   cut, which frees some currently-used transmit node `x'` without changing
//!   the cut's rank. `x'` becomes explorable again and inherits its span from
//!   the chain's origin, so no fresh solve is needed.
//! * **release** - step backwards over a used path edge (x, y), removing it
//!   from the cut and re-opening x for exploration.
//!
//! The *span* of an unused transmit node x is the unique subset of used
//! transmit nodes in its layer whose rows (restricted to used receive nodes)
//! XOR to x's row; it exists and is unique because the used sub-matrix has
//! full rank. Rewire targets are exactly the span members, reachable along
//! alternating chains in the cut's matching graph.
//!
//! Within one iteration, super nodes and signal levels are never re-explored
//! unless a rewire/release move explicitly re-opens them; failed branches
//! restore the used-edge sets and the path structure exactly but keep the
//! exploration labels, which is what bounds the search. When an iteration
//! fails, the explored super nodes form a source-side cut whose rank equals
//! the number of paths found - that cut is returned as a certificate.
//!
//! Candidate nodes and edges are always visited in ascending (super node,
//! level) order, so solves are deterministic and reproducible.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf2::Gf2Matrix;
use crate::network::{Edge, LayeredNetwork};

/// An ordered set of source-destination paths, each a sequence of edges, one
/// per layer cut.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathSet {
    pub paths: Vec<Vec<Edge>>,
}

impl PathSet {
    pub fn empty() -> Self {
        PathSet::default()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Re-check every fast rank decision, span reuse, state invariant and
    /// backtrack restore against straightforward recomputation, counting any
    /// disagreement in the iteration stats. Slow; meant for cross-validation
    /// runs and fuzzing.
    pub shadow_checks: bool,
}

/// Instrumentation for one solver iteration.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IterationStats {
    /// 1-based iteration number; iteration k searches for the k-th path.
    pub iteration: usize,
    pub found: bool,
    /// Transmit-node explorations in the initial (never re-opened) state.
    pub initial_explored: usize,
    /// Explorations of nodes re-opened as rewire targets.
    pub rewired_explored: usize,
    /// Explorations of nodes re-opened by a release move.
    pub released_explored: usize,
    /// Total transmit-node explorations.
    pub explorations: usize,
    /// Fast rank checks performed while scanning extend candidates.
    pub rank_checks: usize,
    /// Disagreements between fast checks / span reuse and recomputation
    /// (shadow mode only; must stay 0).
    pub shadow_mismatches: usize,
    /// Violations of the used-edge rank and path-shape invariants
    /// (shadow mode only; must stay 0).
    pub invariant_violations: usize,
    /// Backtracks that failed to restore the path structure byte-for-byte
    /// (shadow mode only; must stay 0).
    pub restore_mismatches: usize,
}

impl IterationStats {
    /// Hard complexity bounds for one iteration: exceeding them means the
    /// search visited more states than it ever legitimately can.
    pub fn within_bounds(&self, tx_nodes: usize) -> bool {
        self.initial_explored <= tx_nodes
            && self.released_explored <= tx_nodes
            && self.rewired_explored <= 2 * self.iteration * tx_nodes
    }

    pub fn clean(&self) -> bool {
        self.shadow_mismatches == 0
            && self.invariant_violations == 0
            && self.restore_mismatches == 0
    }
}

/// Result of one search iteration on top of a committed path set.
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub found: bool,
    /// On success, the enlarged path set; on failure, the input set unchanged.
    pub paths: PathSet,
    pub stats: IterationStats,
}

/// Full solve result.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub capacity: usize,
    pub paths: PathSet,
    /// Stats for every iteration including the final failing one.
    pub iterations: Vec<IterationStats>,
    /// Number of transmit nodes with at least one outgoing edge.
    pub tx_node_count: usize,
    /// Source side of a minimum cut: the super nodes explored by the failing
    /// iteration. Its cut rank equals `capacity`.
    pub min_cut: BTreeSet<String>,
}

pub fn unicast_capacity(net: &LayeredNetwork) -> Result<SolveResult> {
    unicast_capacity_with(net, &SolveOptions::default())
}

pub fn unicast_capacity_with(net: &LayeredNetwork, opts: &SolveOptions) -> Result<SolveResult> {
    let idx = NetIndex::build(net)?;
    let mut committed: Vec<Vec<IEdge>> = Vec::new();
    let mut iterations = Vec::new();
    loop {
        let mut state = SearchState::new(&idx, &committed, opts.shadow_checks);
        let found = state.search();
        state.stats.found = found;
        iterations.push(state.stats.clone());
        if found {
            committed = state.paths;
        } else {
            let min_cut = idx
                .supers
                .iter()
                .enumerate()
                .filter(|&(i, _)| state.super_explored[i])
                .map(|(_, s)| s.id.clone())
                .collect();
            return Ok(SolveResult {
                capacity: committed.len(),
                paths: idx.to_public_paths(&committed),
                iterations,
                tx_node_count: idx.vx_count,
                min_cut,
            });
        }
    }
}

/// Run a single augmentation iteration on top of `prev`.
///
/// `prev` must be a set of linearly independent source-destination paths
/// (for example the output of an earlier iteration); otherwise an
/// [`Error::InvalidPaths`] is returned.
pub fn mdfs_iteration(
    net: &LayeredNetwork,
    prev: &PathSet,
    opts: &SolveOptions,
) -> Result<IterationOutcome> {
    let idx = NetIndex::build(net)?;
    let committed = idx.from_public_paths(prev)?;
    let mut state = SearchState::new(&idx, &committed, opts.shadow_checks);
    let found = state.search();
    state.stats.found = found;
    let paths = if found {
        idx.to_public_paths(&state.paths)
    } else {
        prev.clone()
    };
    Ok(IterationOutcome {
        found,
        paths,
        stats: state.stats,
    })
}

// ---------------------------------------------------------------------------
// Indexed network representation
// ---------------------------------------------------------------------------

/// Edge between dense node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct IEdge {
    tx: u32,
    rx: u32,
}

struct SuperInfo {
    id: String,
    layer: usize,
    tx_start: u32,
    tx_len: u32,
    rx_start: u32,
    rx_len: u32,
}

/// Dense-index view of a validated network. Transmit and receive levels get
/// consecutive ids in (layer, super node id, level) order, so each layer's
/// nodes form a contiguous range.
pub(crate) struct NetIndex {
    layers: usize,
    supers: Vec<SuperInfo>,
    super_by_id: HashMap<String, usize>,
    source: usize,
    dest: usize,
    /// (super index, layer) per transmit node.
    tx_info: Vec<(u32, u32)>,
    rx_info: Vec<(u32, u32)>,
    /// Outgoing receive-node ids per transmit node, ascending.
    out_edges: Vec<Vec<u32>>,
    edge_set: HashSet<(u32, u32)>,
    tx_layer_range: Vec<(u32, u32)>,
    rx_layer_range: Vec<(u32, u32)>,
    /// Transmit nodes with at least one outgoing edge.
    vx_count: usize,
}

impl NetIndex {
    pub(crate) fn build(net: &LayeredNetwork) -> Result<Self> {
        let violations = net.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations));
        }
        let layers = net.layers();
        let mut supers = Vec::new();
        let mut super_by_id = HashMap::new();
        let mut tx_info = Vec::new();
        let mut rx_info = Vec::new();
        let mut tx_layer_range = vec![(0u32, 0u32); layers];
        let mut rx_layer_range = vec![(0u32, 0u32); layers];
        let mut layer_cursor = 0usize;
        // supernodes() is already ordered by (layer, id)
        for s in net.supernodes() {
            while layer_cursor <= s.layer {
                tx_layer_range[layer_cursor] = (tx_info.len() as u32, tx_info.len() as u32);
                rx_layer_range[layer_cursor] = (rx_info.len() as u32, rx_info.len() as u32);
                layer_cursor += 1;
            }
            let idx = supers.len();
            super_by_id.insert(s.id.clone(), idx);
            let tx_start = tx_info.len() as u32;
            let rx_start = rx_info.len() as u32;
            for _ in 0..s.tx_levels {
                tx_info.push((idx as u32, s.layer as u32));
            }
            for _ in 0..s.rx_levels {
                rx_info.push((idx as u32, s.layer as u32));
            }
            supers.push(SuperInfo {
                id: s.id.clone(),
                layer: s.layer,
                tx_start,
                tx_len: s.tx_levels as u32,
                rx_start,
                rx_len: s.rx_levels as u32,
            });
            tx_layer_range[s.layer].1 = tx_info.len() as u32;
            rx_layer_range[s.layer].1 = rx_info.len() as u32;
        }
        while layer_cursor < layers {
            tx_layer_range[layer_cursor] = (tx_info.len() as u32, tx_info.len() as u32);
            rx_layer_range[layer_cursor] = (rx_info.len() as u32, rx_info.len() as u32);
            layer_cursor += 1;
        }
        let source = net.source().and_then(|s| super_by_id.get(&s.id)).copied();
        let dest = net
            .destination()
            .and_then(|s| super_by_id.get(&s.id))
            .copied();
        let (Some(source), Some(dest)) = (source, dest) else {
            unreachable!("validated network has unique source and destination");
        };
        let mut out_edges = vec![Vec::new(); tx_info.len()];
        let mut edge_set = HashSet::new();
        let mut index = NetIndex {
            layers,
            supers,
            super_by_id,
            source,
            dest,
            tx_info,
            rx_info,
            out_edges: Vec::new(),
            edge_set: HashSet::new(),
            tx_layer_range,
            rx_layer_range,
            vx_count: 0,
        };
        for e in net.edges() {
            let ie = index
                .resolve_edge(e)
                .unwrap_or_else(|| unreachable!("validated edge resolves"));
            out_edges[ie.tx as usize].push(ie.rx);
            edge_set.insert((ie.tx, ie.rx));
        }
        for list in &mut out_edges {
            list.sort_unstable();
        }
        index.vx_count = out_edges.iter().filter(|l| !l.is_empty()).count();
        index.out_edges = out_edges;
        index.edge_set = edge_set;
        Ok(index)
    }

    fn tx_layer(&self, x: u32) -> usize {
        self.tx_info[x as usize].1 as usize
    }

    fn tx_super(&self, x: u32) -> usize {
        self.tx_info[x as usize].0 as usize
    }

    fn rx_super(&self, y: u32) -> usize {
        self.rx_info[y as usize].0 as usize
    }

    fn tx_level(&self, x: u32) -> usize {
        (x - self.supers[self.tx_super(x)].tx_start) as usize
    }

    fn rx_level(&self, y: u32) -> usize {
        (y - self.supers[self.rx_super(y)].rx_start) as usize
    }

    /// Map a public edge to dense indices; `None` if it is not in the network.
    fn resolve_edge(&self, e: &Edge) -> Option<IEdge> {
        let from = &self.supers[*self.super_by_id.get(&e.from.supernode)?];
        let to = &self.supers[*self.super_by_id.get(&e.to.supernode)?];
        if e.from.level >= from.tx_len as usize || e.to.level >= to.rx_len as usize {
            return None;
        }
        Some(IEdge {
            tx: from.tx_start + e.from.level as u32,
            rx: to.rx_start + e.to.level as u32,
        })
    }

    fn to_public_edge(&self, e: IEdge) -> Edge {
        Edge::new(
            self.supers[self.tx_super(e.tx)].id.clone(),
            self.tx_level(e.tx),
            self.supers[self.rx_super(e.rx)].id.clone(),
            self.rx_level(e.rx),
        )
    }

    fn to_public_paths(&self, paths: &[Vec<IEdge>]) -> PathSet {
        PathSet {
            paths: paths
                .iter()
                .map(|p| p.iter().map(|&e| self.to_public_edge(e)).collect())
                .collect(),
        }
    }

    fn from_public_paths(&self, set: &PathSet) -> Result<Vec<Vec<IEdge>>> {
        let mut out = Vec::with_capacity(set.paths.len());
        for path in &set.paths {
            if path.len() != self.layers - 1 {
                return Err(Error::InvalidPaths(format!(
                    "path has {} edges, expected {}",
                    path.len(),
                    self.layers - 1
                )));
            }
            let mut ipath = Vec::with_capacity(path.len());
            for (i, e) in path.iter().enumerate() {
                let ie = self.resolve_edge(e).filter(|ie| {
                    self.edge_set.contains(&(ie.tx, ie.rx))
                });
                let Some(ie) = ie else {
                    return Err(Error::InvalidPaths(format!("edge {e} not in network")));
                };
                if self.tx_layer(ie.tx) != i {
                    return Err(Error::InvalidPaths(format!(
                        "edge {e} does not cross layer cut {i}"
                    )));
                }
                if i > 0 {
                    let prev: IEdge = ipath[i - 1];
                    if self.rx_super(prev.rx) != self.tx_super(ie.tx) {
                        return Err(Error::InvalidPaths(format!(
                            "consecutive edges do not meet at one super node ({e})"
                        )));
                    }
                }
                ipath.push(ie);
            }
            out.push(ipath);
        }
        // linear independence per layer cut, the invariant every iteration
        // relies on
        let k = out.len();
        for l in 0..self.layers - 1 {
            let mut txs: Vec<u32> = out.iter().map(|p| p[l].tx).collect();
            let mut rxs: Vec<u32> = out.iter().map(|p| p[l].rx).collect();
            txs.sort_unstable();
            rxs.sort_unstable();
            txs.dedup();
            rxs.dedup();
            if txs.len() != k || rxs.len() != k {
                return Err(Error::InvalidPaths(format!(
                    "paths share an endpoint in layer cut {l}"
                )));
            }
            if self.used_matrix(&txs, &rxs).rank() != k {
                return Err(Error::InvalidPaths(format!(
                    "path edges of layer cut {l} are linearly dependent"
                )));
            }
        }
        Ok(out)
    }

    fn used_matrix(&self, txs: &[u32], rxs: &[u32]) -> Gf2Matrix {
        let mut m = Gf2Matrix::zero(txs.len(), rxs.len());
        for (i, &t) in txs.iter().enumerate() {
            for (j, &y) in rxs.iter().enumerate() {
                if self.edge_set.contains(&(t, y)) {
                    m.set(i, j, true);
                }
            }
        }
        m
    }
}

// ---------------------------------------------------------------------------
// Search state and moves
// ---------------------------------------------------------------------------

/// How a transmit node may be explored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mark {
    /// Not yet re-opened; may start extend and rewire moves.
    Initial,
    /// Re-opened as a rewire target; may only start extend moves, with the
    /// span inherited from the rewire origin.
    Rewired,
    /// Re-opened by a release move; same powers as `Initial`.
    Released,
}

#[derive(Debug, Clone, Copy)]
struct ChainLink {
    /// Unused network edge to take over.
    fwd: IEdge,
    /// Used edge (same receive node) to displace.
    used: IEdge,
}

type Chain = Vec<ChainLink>;

enum Move {
    Extend { x: u32, y: u32 },
    Rewire { target: u32, chain: Chain, target_span: Vec<u32> },
    Release { x: u32, y: u32 },
}

enum UndoKind {
    Extend { x: u32, y: u32 },
    Rewire { chain: Chain },
    Release { x: u32, y: u32 },
}

struct Undo {
    kind: UndoKind,
    /// Path slots overwritten by the move, with their previous contents.
    touched: Vec<(usize, Vec<IEdge>)>,
    /// Shadow mode: full pre-move snapshot to verify exact restoration.
    pre_paths: Option<Vec<Vec<IEdge>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pass {
    Rewired,
    Released,
    Initial,
    Receiving,
    Done,
}

/// Exploration progress within one super node visit.
struct Frame {
    node: usize,
    pass: Pass,
    cursor: u32,
    active: Option<ActiveTx>,
}

impl Frame {
    fn new(node: usize) -> Self {
        Frame {
            node,
            pass: Pass::Rewired,
            cursor: 0,
            active: None,
        }
    }
}

/// The transmit node currently being drained of moves.
struct ActiveTx {
    x: u32,
    span: Vec<u32>,
    edge_cursor: usize,
    /// Alternating chains to each span member, computed on first use.
    chains: Option<Vec<Option<Chain>>>,
    chain_cursor: usize,
    allow_rewire: bool,
}

pub(crate) struct SearchState<'a> {
    idx: &'a NetIndex,
    /// Committed path count; this run searches for path k+1.
    k: usize,
    shadow: bool,
    /// Receive nodes used by the committed paths; only these admit release
    /// moves.
    committed_rx: Vec<bool>,
    /// k complete paths plus the in-progress partial path (always last).
    paths: Vec<Vec<IEdge>>,
    used_rx_of_tx: Vec<Option<u32>>,
    used_tx_of_rx: Vec<Option<u32>>,
    /// Used-edge count per layer cut.
    eu_len: Vec<usize>,
    super_explored: Vec<bool>,
    tx_explored: Vec<bool>,
    rx_explored: Vec<bool>,
    tx_mark: Vec<Mark>,
    /// Inherited spans for rewire targets, valid while the node is open.
    span_cache: Vec<Option<Vec<u32>>>,
    stats: IterationStats,
}

impl<'a> SearchState<'a> {
    pub(crate) fn new(idx: &'a NetIndex, committed: &[Vec<IEdge>], shadow: bool) -> Self {
        let k = committed.len();
        let mut paths: Vec<Vec<IEdge>> = committed.to_vec();
        paths.push(Vec::new());
        let mut state = SearchState {
            idx,
            k,
            shadow,
            committed_rx: vec![false; idx.rx_info.len()],
            paths,
            used_rx_of_tx: vec![None; idx.tx_info.len()],
            used_tx_of_rx: vec![None; idx.rx_info.len()],
            eu_len: vec![0; idx.layers.saturating_sub(1)],
            super_explored: vec![false; idx.supers.len()],
            tx_explored: vec![false; idx.tx_info.len()],
            rx_explored: vec![false; idx.rx_info.len()],
            tx_mark: vec![Mark::Initial; idx.tx_info.len()],
            span_cache: vec![None; idx.tx_info.len()],
            stats: IterationStats {
                iteration: k + 1,
                ..IterationStats::default()
            },
        };
        for path in committed {
            for (l, e) in path.iter().enumerate() {
                state.used_rx_of_tx[e.tx as usize] = Some(e.rx);
                state.used_tx_of_rx[e.rx as usize] = Some(e.tx);
                state.committed_rx[e.rx as usize] = true;
                state.eu_len[l] += 1;
            }
        }
        if shadow {
            state.verify_invariants();
        }
        state
    }

    /// Run the search for one additional path starting from the source.
    /// On success the path structure holds k+1 complete paths; on failure it
    /// is restored to exactly the committed state.
    pub(crate) fn search(&mut self) -> bool {
        let mut frames = vec![Frame::new(self.idx.source)];
        self.super_explored[self.idx.source] = true;
        let mut journal: Vec<Undo> = Vec::new();
        loop {
            let Some(frame) = frames.last_mut() else {
                debug_assert!(journal.is_empty());
                return false;
            };
            match self.next_move(frame) {
                Some(mv) => {
                    let next_super = match &mv {
                        Move::Extend { y, .. } => self.idx.rx_super(*y),
                        Move::Rewire { target, .. } => self.idx.tx_super(*target),
                        Move::Release { x, .. } => self.idx.tx_super(*x),
                    };
                    let reaches_dest =
                        matches!(mv, Move::Extend { .. }) && next_super == self.idx.dest;
                    let undo = self.apply_move(mv);
                    if reaches_dest {
                        return true;
                    }
                    journal.push(undo);
                    self.super_explored[next_super] = true;
                    frames.push(Frame::new(next_super));
                }
                None => {
                    frames.pop();
                    if let Some(undo) = journal.pop() {
                        self.undo_move(undo);
                    }
                }
            }
        }
    }

    fn next_move(&mut self, f: &mut Frame) -> Option<Move> {
        loop {
            if f.active.is_some() {
                if let Some(mv) = self.drain_active(f) {
                    return Some(mv);
                }
                continue;
            }
            match f.pass {
                Pass::Rewired | Pass::Released | Pass::Initial => {
                    let mark = match f.pass {
                        Pass::Rewired => Mark::Rewired,
                        Pass::Released => Mark::Released,
                        _ => Mark::Initial,
                    };
                    if let Some(x) = self.next_admissible_tx(f.node, &mut f.cursor, mark) {
                        self.explore_tx(f, x, mark);
                    } else {
                        f.pass = match f.pass {
                            Pass::Rewired => Pass::Released,
                            Pass::Released => Pass::Initial,
                            _ => Pass::Receiving,
                        };
                        f.cursor = 0;
                    }
                }
                Pass::Receiving => {
                    let info = &self.idx.supers[f.node];
                    if info.layer == 0 {
                        f.pass = Pass::Done;
                        continue;
                    }
                    let (rx_start, rx_len) = (info.rx_start, info.rx_len);
                    while f.cursor < rx_len {
                        let y = rx_start + f.cursor;
                        f.cursor += 1;
                        if !self.committed_rx[y as usize] || self.rx_explored[y as usize] {
                            continue;
                        }
                        let Some(x) = self.used_tx_of_rx[y as usize] else {
                            continue;
                        };
                        // Deleting a used edge removes a row and a column
                        // from the cut's full-rank matrix, which can cost two
                        // ranks, not one: the leftover edges would be
                        // dependent and every span computed beyond this point
                        // ill-founded. Only release when the remainder stays
                        // at full rank; the node keeps its label so the
                        // candidate can be retried under a different matching.
                        if !self.release_keeps_rank(x, y) {
                            continue;
                        }
                        return Some(Move::Release { x, y });
                    }
                    f.pass = Pass::Done;
                }
                Pass::Done => return None,
            }
        }
    }

    /// Next unexplored, unused transmit level of the super node with the
    /// wanted mark. Isolated levels never participate.
    fn next_admissible_tx(&self, node: usize, cursor: &mut u32, mark: Mark) -> Option<u32> {
        let info = &self.idx.supers[node];
        while *cursor < info.tx_len {
            let x = info.tx_start + *cursor;
            *cursor += 1;
            if self.idx.out_edges[x as usize].is_empty()
                || self.used_rx_of_tx[x as usize].is_some()
                || self.tx_explored[x as usize]
                || self.tx_mark[x as usize] != mark
            {
                continue;
            }
            return Some(x);
        }
        None
    }

    fn explore_tx(&mut self, f: &mut Frame, x: u32, mark: Mark) {
        self.tx_explored[x as usize] = true;
        self.stats.explorations += 1;
        let span = match mark {
            Mark::Rewired => {
                self.stats.rewired_explored += 1;
                let cached = self.span_cache[x as usize]
                    .clone()
                    .expect("rewire target carries an inherited span");
                if self.shadow && self.span_of(x).as_ref() != Some(&cached) {
                    self.stats.shadow_mismatches += 1;
                }
                cached
            }
            other => {
                if other == Mark::Released {
                    self.stats.released_explored += 1;
                } else {
                    self.stats.initial_explored += 1;
                }
                self.span_of(x).unwrap_or_else(|| {
                    // unreachable while the full-rank invariant holds
                    self.stats.invariant_violations += 1;
                    Vec::new()
                })
            }
        };
        f.active = Some(ActiveTx {
            x,
            span,
            edge_cursor: 0,
            chains: None,
            chain_cursor: 0,
            allow_rewire: mark != Mark::Rewired,
        });
    }

    /// Produce the next move from the currently explored transmit node, or
    /// close it out.
    fn drain_active(&mut self, f: &mut Frame) -> Option<Move> {
        let a = f.active.as_mut().expect("active node");
        let x = a.x;
        while a.edge_cursor < self.idx.out_edges[x as usize].len() {
            let y = self.idx.out_edges[x as usize][a.edge_cursor];
            a.edge_cursor += 1;
            if self.used_tx_of_rx[y as usize].is_some() {
                continue;
            }
            if self.super_explored[self.idx.rx_super(y)] {
                continue;
            }
            if self.fast_extend_check(x, &a.span, y) {
                return Some(Move::Extend { x, y });
            }
        }
        if a.allow_rewire {
            if a.chains.is_none() {
                let chains = self.find_ind_paths(x, &a.span);
                a.chains = Some(chains);
            }
            while a.chain_cursor < a.span.len() {
                let i = a.chain_cursor;
                a.chain_cursor += 1;
                let target = a.span[i];
                if let Some(chain) = a.chains.as_mut().expect("chains computed")[i].take() {
                    // the freed node's span is the origin's span with the
                    // origin swapped in for the target
                    let mut target_span: Vec<u32> =
                        a.span.iter().copied().filter(|&s| s != target).collect();
                    target_span.push(x);
                    target_span.sort_unstable();
                    return Some(Move::Rewire {
                        target,
                        chain,
                        target_span,
                    });
                }
            }
        }
        f.active = None;
        None
    }

    // -- rank machinery ----------------------------------------------------

    fn used_tx_in_layer(&self, layer: usize) -> Vec<u32> {
        let (start, end) = self.idx.tx_layer_range[layer];
        (start..end)
            .filter(|&x| self.used_rx_of_tx[x as usize].is_some())
            .collect()
    }

    fn used_rx_in_layer(&self, layer: usize) -> Vec<u32> {
        let (start, end) = self.idx.rx_layer_range[layer];
        (start..end)
            .filter(|&y| self.used_tx_of_rx[y as usize].is_some())
            .collect()
    }

    /// The unique subset of used transmit nodes in x's layer whose rows,
    /// restricted to the used receive nodes, XOR to x's row. `None` only if
    /// the full-rank invariant is broken.
    fn span_of(&self, x: u32) -> Option<Vec<u32>> {
        let l = self.idx.tx_layer(x);
        let vxu = self.used_tx_in_layer(l);
        let vyu = self.used_rx_in_layer(l + 1);
        debug_assert_eq!(vxu.len(), vyu.len());
        let m = self.idx.used_matrix(&vxu, &vyu);
        let target: Vec<bool> = vyu
            .iter()
            .map(|&y| self.idx.edge_set.contains(&(x, y)))
            .collect();
        m.solve_row_membership(&target)
            .expect("target length matches used receive nodes")
            .map(|sel| sel.into_iter().map(|i| vxu[i]).collect())
    }

    /// O(k) test that appending edge (x, y) keeps the used edges of x's layer
    /// cut at full rank: x's entry at y must differ from the XOR of its span
    /// members' entries at y. Equivalent to recomputing the bordered rank,
    /// which shadow mode verifies call by call.
    fn fast_extend_check(&mut self, x: u32, span: &[u32], y: u32) -> bool {
        self.stats.rank_checks += 1;
        let direct = self.idx.edge_set.contains(&(x, y));
        let span_parity = span
            .iter()
            .filter(|&&s| self.idx.edge_set.contains(&(s, y)))
            .count()
            % 2
            == 1;
        let fast = direct != span_parity;
        if self.shadow {
            let full = self.rank_extend_check(x, y);
            if full != fast {
                self.stats.shadow_mismatches += 1;
            }
        }
        fast
    }

    /// Reference implementation of the extend admissibility test: bordered
    /// matrix rank recomputation.
    fn rank_extend_check(&self, x: u32, y: u32) -> bool {
        let l = self.idx.tx_layer(x);
        let mut txs = self.used_tx_in_layer(l);
        let mut rxs = self.used_rx_in_layer(l + 1);
        txs.push(x);
        rxs.push(y);
        self.idx.used_matrix(&txs, &rxs).rank() == txs.len()
    }

    /// Admissibility of a release: the used edges of the cut minus (x, y)
    /// must still have full rank.
    fn release_keeps_rank(&self, x: u32, y: u32) -> bool {
        let cut = self.idx.tx_layer(x);
        let txs: Vec<u32> = self
            .used_tx_in_layer(cut)
            .into_iter()
            .filter(|&t| t != x)
            .collect();
        let rxs: Vec<u32> = self
            .used_rx_in_layer(cut + 1)
            .into_iter()
            .filter(|&r| r != y)
            .collect();
        self.idx.used_matrix(&txs, &rxs).rank() == txs.len()
    }

    /// Alternating chains from x to each span member: forward along an unused
    /// edge into a used receive node, backward along the matching, and so on.
    /// Every span member is reachable while the rank invariant holds.
    fn find_ind_paths(&mut self, x: u32, span: &[u32]) -> Vec<Option<Chain>> {
        let mut prev_fwd: HashMap<u32, u32> = HashMap::new(); // rx -> fwd tx
        let mut entry_rx: HashMap<u32, u32> = HashMap::new(); // tx -> rx entered through
        let mut queue = VecDeque::from([x]);
        while let Some(t) = queue.pop_front() {
            for &y in &self.idx.out_edges[t as usize] {
                if self.used_tx_of_rx[y as usize].is_none() {
                    continue;
                }
                if self.used_rx_of_tx[t as usize] == Some(y) {
                    continue;
                }
                if prev_fwd.contains_key(&y) {
                    continue;
                }
                prev_fwd.insert(y, t);
                let matched = self.used_tx_of_rx[y as usize].expect("matched receive node");
                debug_assert_ne!(matched, x);
                if let std::collections::hash_map::Entry::Vacant(slot) = entry_rx.entry(matched) {
                    slot.insert(y);
                    queue.push_back(matched);
                }
            }
        }
        let mut out = Vec::with_capacity(span.len());
        for &target in span {
            let mut links = Vec::new();
            let mut cur = target;
            let chain = loop {
                let Some(&y) = entry_rx.get(&cur) else {
                    self.stats.invariant_violations += 1;
                    break None;
                };
                let fwd_tx = prev_fwd[&y];
                links.push(ChainLink {
                    fwd: IEdge { tx: fwd_tx, rx: y },
                    used: IEdge { tx: cur, rx: y },
                });
                if fwd_tx == x {
                    links.reverse();
                    break Some(links);
                }
                cur = fwd_tx;
            };
            out.push(chain);
        }
        out
    }

    // -- move application and undo ------------------------------------------

    /// Which complete (or partial) path currently owns the used edge at the
    /// given layer cut.
    fn owner_of(&self, cut: usize, e: IEdge) -> usize {
        self.paths
            .iter()
            .position(|p| p.len() > cut && p[cut] == e)
            .expect("used edge belongs to a path")
    }

    fn apply_move(&mut self, mv: Move) -> Undo {
        let pre_paths = self.shadow.then(|| self.paths.clone());
        let partial = self.k;
        let (kind, touched) = match mv {
            Move::Extend { x, y } => {
                let l = self.idx.tx_layer(x);
                let touched = vec![(partial, self.paths[partial].clone())];
                self.paths[partial].push(IEdge { tx: x, rx: y });
                self.used_rx_of_tx[x as usize] = Some(y);
                self.used_tx_of_rx[y as usize] = Some(x);
                self.eu_len[l] += 1;
                (UndoKind::Extend { x, y }, touched)
            }
            Move::Rewire {
                target,
                chain,
                target_span,
            } => {
                let l = self.idx.tx_layer(chain[0].fwd.tx);
                let owners: Vec<usize> =
                    chain.iter().map(|link| self.owner_of(l, link.used)).collect();
                let mut touched: Vec<(usize, Vec<IEdge>)> = owners
                    .iter()
                    .map(|&s| (s, self.paths[s].clone()))
                    .collect();
                touched.push((partial, self.paths[partial].clone()));
                let old: Vec<Vec<IEdge>> =
                    owners.iter().map(|&s| self.paths[s].clone()).collect();
                // close the partial path through the first chain edge, shift
                // every displaced path one link down the chain, and reopen the
                // target's path prefix as the new partial
                let mut first = self.paths[partial].clone();
                first.push(chain[0].fwd);
                first.extend_from_slice(&old[0][l + 1..]);
                self.paths[owners[0]] = first;
                for j in 1..chain.len() {
                    let mut p = old[j - 1][..l].to_vec();
                    p.push(chain[j].fwd);
                    p.extend_from_slice(&old[j][l + 1..]);
                    self.paths[owners[j]] = p;
                }
                self.paths[partial] = old[chain.len() - 1][..l].to_vec();
                for link in &chain {
                    self.used_rx_of_tx[link.used.tx as usize] = None;
                    self.used_rx_of_tx[link.fwd.tx as usize] = Some(link.fwd.rx);
                    self.used_tx_of_rx[link.fwd.rx as usize] = Some(link.fwd.tx);
                }
                self.tx_explored[target as usize] = false;
                self.tx_mark[target as usize] = Mark::Rewired;
                self.span_cache[target as usize] = Some(target_span);
                (UndoKind::Rewire { chain }, touched)
            }
            Move::Release { x, y } => {
                let cut = self.idx.tx_layer(x);
                let owner = self.owner_of(cut, IEdge { tx: x, rx: y });
                let mut touched = vec![(owner, self.paths[owner].clone())];
                if owner == partial {
                    // the released edge is the partial path's own last step
                    self.paths[partial].pop();
                } else {
                    touched.push((partial, self.paths[partial].clone()));
                    let old_owner = self.paths[owner].clone();
                    let mut merged = self.paths[partial].clone();
                    merged.extend_from_slice(&old_owner[cut + 1..]);
                    self.paths[owner] = merged;
                    self.paths[partial] = old_owner[..cut].to_vec();
                }
                self.used_rx_of_tx[x as usize] = None;
                self.used_tx_of_rx[y as usize] = None;
                self.eu_len[cut] -= 1;
                self.rx_explored[y as usize] = true;
                self.tx_explored[x as usize] = false;
                self.tx_mark[x as usize] = Mark::Released;
                (UndoKind::Release { x, y }, touched)
            }
        };
        if self.shadow {
            self.verify_invariants();
        }
        Undo {
            kind,
            touched,
            pre_paths,
        }
    }

    fn undo_move(&mut self, undo: Undo) {
        match undo.kind {
            UndoKind::Extend { x, y } => {
                let l = self.idx.tx_layer(x);
                self.used_rx_of_tx[x as usize] = None;
                self.used_tx_of_rx[y as usize] = None;
                self.eu_len[l] -= 1;
            }
            UndoKind::Rewire { chain } => {
                for link in chain.iter().rev() {
                    self.used_rx_of_tx[link.fwd.tx as usize] = None;
                    self.used_rx_of_tx[link.used.tx as usize] = Some(link.used.rx);
                    self.used_tx_of_rx[link.used.rx as usize] = Some(link.used.tx);
                }
            }
            UndoKind::Release { x, y } => {
                let cut = self.idx.tx_layer(x);
                self.used_rx_of_tx[x as usize] = Some(y);
                self.used_tx_of_rx[y as usize] = Some(x);
                self.eu_len[cut] += 1;
            }
        }
        for (slot, old) in undo.touched {
            self.paths[slot] = old;
        }
        if let Some(pre) = undo.pre_paths {
            if self.paths != pre {
                self.stats.restore_mismatches += 1;
            }
        }
        if self.shadow {
            self.verify_invariants();
        }
    }

    /// Shadow-mode structural audit: per-cut used-edge counts and ranks, and
    /// full consistency between the path structure and the matching arrays.
    fn verify_invariants(&mut self) {
        let mut ok = true;
        let partial_len = self.paths[self.k].len();
        for l in 0..self.idx.layers - 1 {
            let vxu = self.used_tx_in_layer(l);
            let vyu = self.used_rx_in_layer(l + 1);
            let count = self.eu_len[l];
            if vxu.len() != count || vyu.len() != count {
                eprintln!("AUDIT cut {l}: node counts {}x{} vs eu_len {count}", vxu.len(), vyu.len());
                ok = false;
            }
            if count != self.k + usize::from(l < partial_len) {
                eprintln!("AUDIT cut {l}: count {count} vs k={} partial_len={partial_len}", self.k);
                ok = false;
            }
            if self.idx.used_matrix(&vxu, &vyu).rank() != count {
                eprintln!("AUDIT cut {l}: rank {} < count {count}", self.idx.used_matrix(&vxu, &vyu).rank());
                ok = false;
            }
        }
        let mut edge_total = 0;
        for (slot, path) in self.paths.iter().enumerate() {
            if slot < self.k && path.len() != self.idx.layers - 1 {
                eprintln!("AUDIT slot {slot}: complete path has {} edges", path.len());
                ok = false;
            }
            for (i, e) in path.iter().enumerate() {
                if self.idx.tx_layer(e.tx) != i
                    || !self.idx.edge_set.contains(&(e.tx, e.rx))
                    || self.used_rx_of_tx[e.tx as usize] != Some(e.rx)
                    || self.used_tx_of_rx[e.rx as usize] != Some(e.tx)
                {
                    eprintln!("AUDIT slot {slot} edge {i}: tx {} rx {} inconsistent", e.tx, e.rx);
                    ok = false;
                }
                if i > 0 && self.idx.rx_super(path[i - 1].rx) != self.idx.tx_super(e.tx) {
                    eprintln!("AUDIT slot {slot} edge {i}: super mismatch");
                    ok = false;
                }
            }
            edge_total += path.len();
        }
        if edge_total != self.eu_len.iter().sum::<usize>() {
            eprintln!("AUDIT: edge total {edge_total} vs eu sum {}", self.eu_len.iter().sum::<usize>());
            ok = false;
        }
        if !ok {
            self.stats.invariant_violations += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{gen_random, point_to_point, SuperNode};
    use crate::oracle;

    fn net(supers: Vec<(&str, usize, usize, usize)>, edges: Vec<(&str, usize, &str, usize)>) -> LayeredNetwork {
        let layers = supers.iter().map(|s| s.1).max().unwrap() + 1;
        LayeredNetwork::new(
            layers,
            supers
                .into_iter()
                .map(|(id, layer, tx, rx)| SuperNode {
                    id: id.into(),
                    layer,
                    tx_levels: tx,
                    rx_levels: rx,
                })
                .collect(),
            edges
                .into_iter()
                .map(|(a, i, b, j)| Edge::new(a, i, b, j))
                .collect(),
        )
    }

    fn paths(net_paths: Vec<Vec<(&str, usize, &str, usize)>>) -> PathSet {
        PathSet {
            paths: net_paths
                .into_iter()
                .map(|p| p.into_iter().map(|(a, i, b, j)| Edge::new(a, i, b, j)).collect())
                .collect(),
        }
    }

    /// Two committed identity paths plus a third source level.
    fn two_used_state() -> (LayeredNetwork, PathSet) {
        let n = net(
            vec![("S", 0, 3, 0), ("D", 1, 0, 2)],
            vec![
                ("S", 0, "D", 0),
                ("S", 1, "D", 1),
                ("S", 2, "D", 0),
                ("S", 2, "D", 1),
            ],
        );
        let p = paths(vec![
            vec![("S", 0, "D", 0)],
            vec![("S", 1, "D", 1)],
        ]);
        (n, p)
    }

    #[test]
    fn span_is_empty_in_first_iteration() {
        let n = point_to_point(3, 3);
        let idx = NetIndex::build(&n).unwrap();
        let state = SearchState::new(&idx, &[], false);
        assert_eq!(state.span_of(0), Some(vec![]));
    }

    #[test]
    fn span_on_identity_basis_selects_single_row() {
        // used rows form the identity; the probe row equals the first basis row
        let n = net(
            vec![("S", 0, 3, 0), ("D", 1, 0, 2)],
            vec![("S", 0, "D", 0), ("S", 1, "D", 1), ("S", 2, "D", 0)],
        );
        let p = paths(vec![vec![("S", 0, "D", 0)], vec![("S", 1, "D", 1)]]);
        let idx = NetIndex::build(&n).unwrap();
        let committed = idx.from_public_paths(&p).unwrap();
        let state = SearchState::new(&idx, &committed, false);
        assert_eq!(state.span_of(2), Some(vec![0]));
    }

    #[test]
    fn span_covering_both_used_rows() {
        let (n, p) = two_used_state();
        let idx = NetIndex::build(&n).unwrap();
        let committed = idx.from_public_paths(&p).unwrap();
        let state = SearchState::new(&idx, &committed, false);
        // probe row [1,1] = [1,0] + [0,1]
        assert_eq!(state.span_of(2), Some(vec![0, 1]));
    }

    #[test]
    fn alternating_chain_single_hop() {
        let n = net(
            vec![("S", 0, 2, 0), ("D", 1, 0, 1)],
            vec![("S", 0, "D", 0), ("S", 1, "D", 0)],
        );
        let p = paths(vec![vec![("S", 0, "D", 0)]]);
        let idx = NetIndex::build(&n).unwrap();
        let committed = idx.from_public_paths(&p).unwrap();
        let mut state = SearchState::new(&idx, &committed, false);
        let span = state.span_of(1).unwrap();
        assert_eq!(span, vec![0]);
        let chains = state.find_ind_paths(1, &span);
        let chain = chains[0].as_ref().unwrap();
        assert_eq!(chain.len(), 1);
        assert_eq!(chain[0].fwd, IEdge { tx: 1, rx: 0 });
        assert_eq!(chain[0].used, IEdge { tx: 0, rx: 0 });
        assert_eq!(state.stats.invariant_violations, 0);
    }

    #[test]
    fn alternating_chain_two_hops() {
        // probe tx2 reaches tx1 only through tx0: tx2 -> rx0 => tx0 -> rx1 => tx1
        let n = net(
            vec![("S", 0, 3, 0), ("D", 1, 0, 2)],
            vec![
                ("S", 0, "D", 0),
                ("S", 0, "D", 1),
                ("S", 1, "D", 1),
                ("S", 2, "D", 0),
            ],
        );
        let p = paths(vec![vec![("S", 0, "D", 0)], vec![("S", 1, "D", 1)]]);
        let idx = NetIndex::build(&n).unwrap();
        let committed = idx.from_public_paths(&p).unwrap();
        let mut state = SearchState::new(&idx, &committed, false);
        let span = state.span_of(2).unwrap();
        assert_eq!(span, vec![0, 1]);
        let chains = state.find_ind_paths(2, &span);
        let to_tx0 = chains[0].as_ref().unwrap();
        assert_eq!(to_tx0.len(), 1);
        let to_tx1 = chains[1].as_ref().unwrap();
        assert_eq!(to_tx1.len(), 2);
        // alternation: forward edges are unused network edges, displaced ones
        // are the current matching
        for link in to_tx1 {
            assert!(idx.edge_set.contains(&(link.fwd.tx, link.fwd.rx)));
            assert_eq!(state.used_tx_of_rx[link.used.rx as usize], Some(link.used.tx));
            assert_eq!(link.fwd.rx, link.used.rx);
        }
        assert_eq!(to_tx1[0].fwd, IEdge { tx: 2, rx: 0 });
        assert_eq!(to_tx1[0].used, IEdge { tx: 0, rx: 0 });
        assert_eq!(to_tx1[1].fwd, IEdge { tx: 0, rx: 1 });
        assert_eq!(to_tx1[1].used, IEdge { tx: 1, rx: 1 });
    }

    #[test]
    fn fast_check_first_iteration_is_edge_presence() {
        let n = point_to_point(2, 1);
        let idx = NetIndex::build(&n).unwrap();
        let mut state = SearchState::new(&idx, &[], true);
        assert!(state.fast_extend_check(0, &[], 0));
        assert!(!state.fast_extend_check(1, &[], 0));
        assert_eq!(state.stats.shadow_mismatches, 0);
        assert_eq!(state.stats.rank_checks, 2);
    }

    #[test]
    fn fast_check_false_without_connecting_edges() {
        let (n, p) = two_used_state();
        let idx = NetIndex::build(&n).unwrap();
        let committed = idx.from_public_paths(&p).unwrap();
        let mut state = SearchState::new(&idx, &committed, true);
        // span of tx2 is {tx0, tx1}; rx0 sees tx2 once and tx0 once -> parity
        // cancels, so the bordered matrix stays rank 2
        let span = state.span_of(2).unwrap();
        assert!(!state.fast_extend_check(2, &span, 0));
        assert_eq!(state.stats.shadow_mismatches, 0);
    }

    #[test]
    fn iteration_on_single_edge_network() {
        let n = point_to_point(1, 1);
        let opts = SolveOptions { shadow_checks: true };
        let first = mdfs_iteration(&n, &PathSet::empty(), &opts).unwrap();
        assert!(first.found);
        assert_eq!(first.paths.len(), 1);
        assert!(first.stats.clean());
        let second = mdfs_iteration(&n, &first.paths, &opts).unwrap();
        assert!(!second.found);
        assert_eq!(second.paths, first.paths);
        assert!(second.stats.clean());
    }

    #[test]
    fn iterations_on_point_to_point_link() {
        let n = point_to_point(5, 4);
        let opts = SolveOptions { shadow_checks: true };
        let mut committed = PathSet::empty();
        for round in 1..=4 {
            let out = mdfs_iteration(&n, &committed, &opts).unwrap();
            assert!(out.found, "iteration {round} should find a path");
            assert_eq!(out.paths.len(), round);
            committed = out.paths;
        }
        let fifth = mdfs_iteration(&n, &committed, &opts).unwrap();
        assert!(!fifth.found);
        assert_eq!(fifth.paths, committed);
    }

    #[test]
    fn capacity_of_edgeless_network_is_zero() {
        let n = gen_random(3, 2, 2, 0.0, 9);
        let r = unicast_capacity(&n).unwrap();
        assert_eq!(r.capacity, 0);
        assert!(r.paths.is_empty());
        assert_eq!(r.iterations.len(), 1);
    }

    #[test]
    fn capacity_of_point_to_point_link() {
        let r = unicast_capacity(&point_to_point(5, 4)).unwrap();
        assert_eq!(r.capacity, 4);
        assert_eq!(r.paths.len(), 4);
        assert_eq!(r.iterations.len(), 5);
    }

    #[test]
    fn capacity_of_identity_chain() {
        let n = net(
            vec![("S", 0, 2, 0), ("M", 1, 2, 2), ("D", 2, 0, 2)],
            vec![
                ("S", 0, "M", 0),
                ("S", 1, "M", 1),
                ("M", 0, "D", 0),
                ("M", 1, "D", 1),
            ],
        );
        let r = unicast_capacity(&n).unwrap();
        assert_eq!(r.capacity, 2);
    }

    #[test]
    fn rejects_invalid_network() {
        let n = net(vec![("S", 0, 1, 1), ("D", 1, 0, 1)], vec![]);
        assert!(matches!(
            unicast_capacity(&n),
            Err(Error::InvalidNetwork(_))
        ));
    }

    #[test]
    fn rejects_dependent_seed_paths() {
        // both paths reuse the same transmit level
        let n = net(
            vec![("S", 0, 2, 0), ("D", 1, 0, 2)],
            vec![("S", 0, "D", 0), ("S", 0, "D", 1), ("S", 1, "D", 1)],
        );
        let bad = paths(vec![vec![("S", 0, "D", 0)], vec![("S", 0, "D", 1)]]);
        assert!(matches!(
            mdfs_iteration(&n, &bad, &SolveOptions::default()),
            Err(Error::InvalidPaths(_))
        ));
    }

    #[test]
    fn shadow_solve_stays_clean_on_random_instances() {
        let opts = SolveOptions { shadow_checks: true };
        for seed in 0..60 {
            let n = gen_random(2 + (seed as usize % 4), 2, 3, 0.5, seed);
            let r = unicast_capacity_with(&n, &opts).unwrap();
            for st in &r.iterations {
                assert!(st.clean(), "seed {seed}: {st:?}");
                assert!(st.within_bounds(r.tx_node_count), "seed {seed}: {st:?}");
            }
            assert!(oracle::verify_paths_independent(&n, &r.paths).unwrap());
            assert_eq!(r.iterations.len(), r.capacity + 1);
        }
    }

    #[test]
    fn failing_iteration_cut_certifies_capacity() {
        for seed in 0..40 {
            let n = gen_random(4, 2, 2, 0.45, seed + 1000);
            let r = unicast_capacity(&n).unwrap();
            let cut = oracle::Cut::new(&n, r.min_cut.iter().cloned()).unwrap();
            assert_eq!(oracle::cut_rank(&n, &cut).unwrap(), r.capacity, "seed {seed}");
        }
    }
}
