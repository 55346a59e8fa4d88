//! Layered binary relay networks: node and edge types, structural
//! validation, adjacency-matrix extraction, and instance generators.
//!
//! A network is a DAG of super nodes arranged in layers. Each super node
//! exposes numbered transmitting and receiving signal levels; an edge carries
//! one bit from a transmitting level to a receiving level in the next layer.
//! Broadcast duplicates a transmitted bit onto every out-edge and interference
//! XORs the bits arriving at one receiving level, which is why cut capacities
//! are matrix ranks rather than edge counts.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, Violation};
use crate::gf2::Gf2Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Transmitting,
    Receiving,
}

/// One signal level of a super node. Node identity is the full triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub supernode: String,
    pub kind: NodeKind,
    pub level: usize,
}

impl NodeId {
    pub fn tx(supernode: impl Into<String>, level: usize) -> Self {
        NodeId {
            supernode: supernode.into(),
            kind: NodeKind::Transmitting,
            level,
        }
    }

    pub fn rx(supernode: impl Into<String>, level: usize) -> Self {
        NodeId {
            supernode: supernode.into(),
            kind: NodeKind::Receiving,
            level,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            NodeKind::Transmitting => "tx",
            NodeKind::Receiving => "rx",
        };
        write!(f, "{}:{}{}", self.supernode, kind, self.level)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SuperNode {
    pub id: String,
    pub layer: usize,
    pub tx_levels: usize,
    pub rx_levels: usize,
}

/// Directed edge from a transmitting level to a receiving level one layer on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
}

impl Edge {
    pub fn new(
        from_super: impl Into<String>,
        from_level: usize,
        to_super: impl Into<String>,
        to_level: usize,
    ) -> Self {
        Edge {
            from: NodeId::tx(from_super, from_level),
            to: NodeId::rx(to_super, to_level),
        }
    }

    fn sort_key(&self) -> (&str, usize, &str, usize) {
        (
            &self.from.supernode,
            self.from.level,
            &self.to.supernode,
            self.to.level,
        )
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{}] -> {}[{}]",
            self.from.supernode, self.from.level, self.to.supernode, self.to.level
        )
    }
}

/// A layered network. Construction normalizes the order of super nodes
/// (by layer, then id) and edges (lexicographically), so structurally equal
/// networks compare equal and serialize to identical bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredNetwork {
    layers: usize,
    supernodes: Vec<SuperNode>,
    edges: Vec<Edge>,
}

impl LayeredNetwork {
    pub fn new(layers: usize, mut supernodes: Vec<SuperNode>, mut edges: Vec<Edge>) -> Self {
        supernodes.sort_by(|a, b| (a.layer, &a.id).cmp(&(b.layer, &b.id)));
        edges.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        LayeredNetwork {
            layers,
            supernodes,
            edges,
        }
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn supernodes(&self) -> &[SuperNode] {
        &self.supernodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn supernode(&self, id: &str) -> Option<&SuperNode> {
        self.supernodes.iter().find(|s| s.id == id)
    }

    /// The unique layer-0 super node, when there is exactly one.
    pub fn source(&self) -> Option<&SuperNode> {
        self.unique_in_layer(0)
    }

    /// The unique last-layer super node, when there is exactly one.
    pub fn destination(&self) -> Option<&SuperNode> {
        if self.layers == 0 {
            return None;
        }
        self.unique_in_layer(self.layers - 1)
    }

    fn unique_in_layer(&self, layer: usize) -> Option<&SuperNode> {
        let mut found = None;
        for s in &self.supernodes {
            if s.layer == layer {
                if found.is_some() {
                    return None;
                }
                found = Some(s);
            }
        }
        found
    }

    /// Does this exact node exist (super node known, level within range)?
    pub fn has_node(&self, node: &NodeId) -> bool {
        self.supernode(&node.supernode).is_some_and(|s| match node.kind {
            NodeKind::Transmitting => node.level < s.tx_levels,
            NodeKind::Receiving => node.level < s.rx_levels,
        })
    }

    pub(crate) fn edge_lookup(&self) -> HashSet<(&str, usize, &str, usize)> {
        self.edges.iter().map(|e| e.sort_key()).collect()
    }

    /// Check every structural invariant and return all violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.layers < 2 {
            out.push(Violation::TooFewLayers(self.layers));
        }
        for (i, s) in self.supernodes.iter().enumerate() {
            if self.supernodes[..i].iter().any(|t| t.id == s.id) {
                out.push(Violation::DuplicateSupernode(s.id.clone()));
            }
            if s.layer >= self.layers {
                out.push(Violation::SupernodeLayerOutOfRange {
                    id: s.id.clone(),
                    layer: s.layer,
                    layers: self.layers,
                });
            }
        }
        if self.layers >= 2 {
            let first: Vec<_> = self.supernodes.iter().filter(|s| s.layer == 0).collect();
            if first.len() != 1 {
                out.push(Violation::SourceCount(first.len()));
            } else if first[0].rx_levels != 0 {
                out.push(Violation::SourceHasRx(first[0].id.clone()));
            }
            let last: Vec<_> = self
                .supernodes
                .iter()
                .filter(|s| s.layer == self.layers - 1)
                .collect();
            if last.len() != 1 {
                out.push(Violation::DestinationCount(last.len()));
            } else if last[0].tx_levels != 0 {
                out.push(Violation::DestinationHasTx(last[0].id.clone()));
            }
        }
        let mut seen = HashSet::new();
        for e in &self.edges {
            let rendered = e.to_string();
            if e.from.kind != NodeKind::Transmitting || e.to.kind != NodeKind::Receiving {
                out.push(Violation::WrongKind { edge: rendered });
                continue;
            }
            let from = self.supernode(&e.from.supernode);
            let to = self.supernode(&e.to.supernode);
            if from.is_none() {
                out.push(Violation::UnknownSupernode {
                    edge: rendered.clone(),
                    id: e.from.supernode.clone(),
                });
            }
            if to.is_none() {
                out.push(Violation::UnknownSupernode {
                    edge: rendered.clone(),
                    id: e.to.supernode.clone(),
                });
            }
            let (Some(from), Some(to)) = (from, to) else {
                continue;
            };
            if e.from.level >= from.tx_levels || e.to.level >= to.rx_levels {
                out.push(Violation::DanglingLevel {
                    edge: rendered.clone(),
                });
            }
            if to.layer != from.layer + 1 {
                out.push(Violation::NonConsecutiveLayers {
                    edge: rendered.clone(),
                });
            }
            if !seen.insert(e.sort_key()) {
                out.push(Violation::DuplicateEdge { edge: rendered });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Labeled adjacency matrix for ordered node sets: entry (i, j) is 1
    /// exactly when the edge (tx[i], rx[j]) exists.
    pub fn adjacency(&self, tx: &[NodeId], rx: &[NodeId]) -> Result<Gf2Matrix<NodeId>> {
        for n in tx {
            if n.kind != NodeKind::Transmitting || !self.has_node(n) {
                return Err(Error::UnknownNode(n.to_string()));
            }
        }
        for n in rx {
            if n.kind != NodeKind::Receiving || !self.has_node(n) {
                return Err(Error::UnknownNode(n.to_string()));
            }
        }
        let lookup = self.edge_lookup();
        let mut m = Gf2Matrix::with_labels(tx.to_vec(), rx.to_vec());
        for (i, x) in tx.iter().enumerate() {
            for (j, y) in rx.iter().enumerate() {
                if lookup.contains(&(x.supernode.as_str(), x.level, y.supernode.as_str(), y.level)) {
                    m.set(i, j, true);
                }
            }
        }
        Ok(m)
    }

    /// Adjacency matrix for an edge set: rows are the distinct transmitting
    /// endpoints, columns the distinct receiving endpoints (both sorted), and
    /// entries cover every network edge between them, not just the given ones.
    pub fn adjacency_of_edges(&self, edges: &[Edge]) -> Result<Gf2Matrix<NodeId>> {
        let mut tx: Vec<NodeId> = edges.iter().map(|e| e.from.clone()).collect();
        let mut rx: Vec<NodeId> = edges.iter().map(|e| e.to.clone()).collect();
        tx.sort();
        tx.dedup();
        rx.sort();
        rx.dedup();
        self.adjacency(&tx, &rx)
    }

    /// All edges whose transmitting endpoint lies in layer `i`.
    pub fn layer_cut_edges(&self, i: usize) -> Result<Vec<Edge>> {
        if self.layers < 2 || i > self.layers - 2 {
            return Err(Error::LayerOutOfRange {
                index: i,
                layers: self.layers,
            });
        }
        Ok(self
            .edges
            .iter()
            .filter(|e| {
                self.supernode(&e.from.supernode)
                    .is_some_and(|s| s.layer == i)
            })
            .cloned()
            .collect())
    }
}

/// Number of usable bit levels of a point-to-point link with the given SNR:
/// `ceil(log2(snr) / 2)`.
pub fn levels_from_snr(snr: f64) -> Result<usize> {
    if !(snr > 1.0) {
        return Err(Error::SnrOutOfRange(snr));
    }
    Ok((0.5 * snr.log2()).ceil() as usize)
}

/// Two-super-node network for a single point-to-point link: `levels` signal
/// levels on each side, with tx level i wired to rx level i for i < gain.
pub fn point_to_point(levels: usize, gain: usize) -> LayeredNetwork {
    let supernodes = vec![
        SuperNode {
            id: "S".into(),
            layer: 0,
            tx_levels: levels,
            rx_levels: 0,
        },
        SuperNode {
            id: "D".into(),
            layer: 1,
            tx_levels: 0,
            rx_levels: levels,
        },
    ];
    let edges = (0..gain.min(levels))
        .map(|i| Edge::new("S", i, "D", i))
        .collect();
    LayeredNetwork::new(2, supernodes, edges)
}

/// Seeded random instance generator.
///
/// Every intermediate layer gets 1..=`max_supernodes_per_layer` relays with
/// 1..=`max_levels` levels per side; each possible inter-layer edge appears
/// independently with probability `edge_density`. Output is always valid, and
/// a fixed seed reproduces the instance bit for bit. Disconnected instances
/// are legal - capacity 0 is an ordinary outcome.
pub fn gen_random(
    layers: usize,
    max_supernodes_per_layer: usize,
    max_levels: usize,
    edge_density: f64,
    seed: u64,
) -> LayeredNetwork {
    assert!(layers >= 2, "need at least source and destination layers");
    assert!(max_supernodes_per_layer >= 1);
    assert!(max_levels >= 1);
    assert!(
        (0.0..=1.0).contains(&edge_density),
        "edge_density must be a probability"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut supernodes = vec![SuperNode {
        id: "S".into(),
        layer: 0,
        tx_levels: rng.gen_range(1..=max_levels),
        rx_levels: 0,
    }];
    for layer in 1..layers - 1 {
        let count = rng.gen_range(1..=max_supernodes_per_layer);
        for j in 0..count {
            supernodes.push(SuperNode {
                id: format!("R{layer}_{j}"),
                layer,
                tx_levels: rng.gen_range(1..=max_levels),
                rx_levels: rng.gen_range(1..=max_levels),
            });
        }
    }
    supernodes.push(SuperNode {
        id: "D".into(),
        layer: layers - 1,
        tx_levels: 0,
        rx_levels: rng.gen_range(1..=max_levels),
    });
    let mut edges = Vec::new();
    for layer in 0..layers - 1 {
        for from in supernodes.iter().filter(|s| s.layer == layer) {
            for to in supernodes.iter().filter(|s| s.layer == layer + 1) {
                for fx in 0..from.tx_levels {
                    for ty in 0..to.rx_levels {
                        if rng.gen_bool(edge_density) {
                            edges.push(Edge::new(from.id.clone(), fx, to.id.clone(), ty));
                        }
                    }
                }
            }
        }
    }
    LayeredNetwork::new(layers, supernodes, edges)
}
