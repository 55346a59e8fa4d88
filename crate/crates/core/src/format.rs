//! JSON file format for networks.
//!
//! ```json
//! {
//!   "layers": 2,
//!   "supernodes": [{"id": "S", "layer": 0, "tx": 3, "rx": 0}, ...],
//!   "edges": [{"from": ["S", 0], "to": ["D", 1]}, ...]
//! }
//! ```
//!
//! `from` always names a transmitting level and `to` a receiving level.
//! Serialization writes super nodes ordered by (layer, id) and edges in
//! lexicographic order, so output is byte-stable for structurally equal
//! networks.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Edge, LayeredNetwork, SuperNode};

#[derive(Serialize, Deserialize)]
pub(crate) struct NetworkDoc {
    pub layers: usize,
    pub supernodes: Vec<SupernodeDoc>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct SupernodeDoc {
    pub id: String,
    pub layer: usize,
    pub tx: usize,
    pub rx: usize,
}

#[derive(Serialize, Deserialize, Clone)]
pub(crate) struct EdgeDoc {
    pub from: (String, usize),
    pub to: (String, usize),
}

impl From<&Edge> for EdgeDoc {
    fn from(e: &Edge) -> Self {
        EdgeDoc {
            from: (e.from.supernode.clone(), e.from.level),
            to: (e.to.supernode.clone(), e.to.level),
        }
    }
}

impl From<&EdgeDoc> for Edge {
    fn from(d: &EdgeDoc) -> Self {
        Edge::new(d.from.0.clone(), d.from.1, d.to.0.clone(), d.to.1)
    }
}

impl NetworkDoc {
    pub(crate) fn from_network(net: &LayeredNetwork) -> Self {
        NetworkDoc {
            layers: net.layers(),
            supernodes: net
                .supernodes()
                .iter()
                .map(|s| SupernodeDoc {
                    id: s.id.clone(),
                    layer: s.layer,
                    tx: s.tx_levels,
                    rx: s.rx_levels,
                })
                .collect(),
            edges: net.edges().iter().map(EdgeDoc::from).collect(),
        }
    }

    pub(crate) fn into_network(self) -> Result<LayeredNetwork> {
        let known: HashSet<&str> = self.supernodes.iter().map(|s| s.id.as_str()).collect();
        for e in &self.edges {
            for id in [&e.from.0, &e.to.0] {
                if !known.contains(id.as_str()) {
                    return Err(Error::UnknownNode(id.clone()));
                }
            }
        }
        let supernodes = self
            .supernodes
            .into_iter()
            .map(|s| SuperNode {
                id: s.id,
                layer: s.layer,
                tx_levels: s.tx,
                rx_levels: s.rx,
            })
            .collect();
        let edges = self.edges.iter().map(Edge::from).collect();
        Ok(LayeredNetwork::new(self.layers, supernodes, edges))
    }
}

impl LayeredNetwork {
    /// Parse the JSON document form. Syntax errors carry line/column from the
    /// JSON parser; an edge naming an unknown super node is rejected here,
    /// while structural invariants are left to [`LayeredNetwork::validate`].
    pub fn parse(text: &str) -> Result<Self> {
        let doc: NetworkDoc = serde_json::from_str(text)?;
        doc.into_network()
    }

    /// Byte-stable JSON serialization; `parse` of the output reproduces the
    /// network exactly.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&NetworkDoc::from_network(self))
            .expect("network serialization cannot fail");
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::gen_random;

    #[test]
    fn parse_minimal_document() {
        let text = r#"{
            "layers": 2,
            "supernodes": [
                {"id": "S", "layer": 0, "tx": 1, "rx": 0},
                {"id": "D", "layer": 1, "tx": 0, "rx": 1}
            ],
            "edges": [{"from": ["S", 0], "to": ["D", 0]}]
        }"#;
        let net = LayeredNetwork::parse(text).unwrap();
        assert_eq!(net.supernodes().len(), 2);
        assert_eq!(net.edges().len(), 1);
        assert!(net.is_valid());
    }

    #[test]
    fn parse_rejects_unknown_reference() {
        let text = r#"{
            "layers": 2,
            "supernodes": [
                {"id": "S", "layer": 0, "tx": 1, "rx": 0},
                {"id": "D", "layer": 1, "tx": 0, "rx": 1}
            ],
            "edges": [{"from": ["Q", 0], "to": ["D", 0]}]
        }"#;
        match LayeredNetwork::parse(text) {
            Err(Error::UnknownNode(id)) => assert_eq!(id, "Q"),
            other => panic!("expected unknown-node error, got {other:?}"),
        }
    }

    #[test]
    fn parse_reports_syntax_position() {
        let err = LayeredNetwork::parse("{\"layers\": 2,").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "wanted position info, got: {msg}");
    }

    #[test]
    fn round_trip_is_identity() {
        for seed in 0..20 {
            let net = gen_random(4, 3, 3, 0.4, seed);
            let text = net.to_json();
            let back = LayeredNetwork::parse(&text).unwrap();
            assert_eq!(back, net);
            assert_eq!(back.to_json(), text);
        }
    }
}
