//! Rate-K transmission schemes built from a maximum independent path set.
//!
//! Each relay forwards the bit received on a used level to a used transmit
//! level through a one-one map; unused received bits are discarded and unused
//! transmit levels send 0. With the path-following bijection every path acts
//! as a literal bit pipe, while interference between pipes is resolved by the
//! linear independence of the used edges: the end-to-end transfer matrix is a
//! product of full-rank K x K blocks and therefore invertible, which is what
//! certifies rate K.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{EdgeDoc, NetworkDoc};
use crate::gf2::Gf2Matrix;
use crate::mdfs::PathSet;
use crate::network::{Edge, LayeredNetwork, NodeId};
use crate::oracle;

/// A one-bit linear relay scheme of rate `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionScheme {
    /// Bits per network use.
    pub k: usize,
    /// Used edges per layer cut, in path order: `inter_layer[l][p]` is the
    /// edge path p takes across cut l.
    pub inter_layer: Vec<Vec<Edge>>,
    /// Per relay super node, the (receive level, transmit level) pairs of its
    /// forwarding bijection, sorted by receive level.
    pub relay_maps: BTreeMap<String, Vec<(usize, usize)>>,
}

impl TransmissionScheme {
    /// The paths as edge sequences (the pivot of `inter_layer`).
    pub fn paths(&self) -> PathSet {
        let mut paths = vec![Vec::new(); self.k];
        for cut in &self.inter_layer {
            for (p, e) in cut.iter().enumerate() {
                paths[p].push(e.clone());
            }
        }
        PathSet { paths }
    }
}

/// Build the scheme induced by an independent path set: each relay routes
/// every path's receive level to the same path's transmit level.
pub fn extract_scheme(net: &LayeredNetwork, paths: &PathSet) -> Result<TransmissionScheme> {
    if !oracle::verify_paths_independent(net, paths)? {
        return Err(Error::InvalidPaths(
            "scheme extraction needs linearly independent paths".into(),
        ));
    }
    let k = paths.len();
    let cuts = net.layers() - 1;
    let mut inter_layer = vec![Vec::with_capacity(k); cuts];
    let mut relay_maps: BTreeMap<String, Vec<(usize, usize)>> = BTreeMap::new();
    for path in &paths.paths {
        for (l, e) in path.iter().enumerate() {
            inter_layer[l].push(e.clone());
            if l > 0 {
                relay_maps
                    .entry(e.from.supernode.clone())
                    .or_default()
                    .push((path[l - 1].to.level, e.from.level));
            }
        }
    }
    for pairs in relay_maps.values_mut() {
        pairs.sort_unstable();
    }
    Ok(TransmissionScheme {
        k,
        inter_layer,
        relay_maps,
    })
}

/// End-to-end transfer matrix: alternating product of the per-cut adjacency
/// blocks (restricted to used nodes, path order) and the relay permutation
/// blocks. Rows are the source's used transmit levels, columns the
/// destination's used receive levels.
pub fn transfer_matrix(net: &LayeredNetwork, s: &TransmissionScheme) -> Result<Gf2Matrix<NodeId>> {
    if s.k == 0 {
        return Ok(Gf2Matrix::with_labels(Vec::new(), Vec::new()));
    }
    let cuts = net.layers() - 1;
    let mut product: Option<Gf2Matrix<NodeId>> = None;
    for l in 0..cuts {
        let tx: Vec<NodeId> = s.inter_layer[l].iter().map(|e| e.from.clone()).collect();
        let rx: Vec<NodeId> = s.inter_layer[l].iter().map(|e| e.to.clone()).collect();
        let block = net.adjacency(&tx, &rx)?;
        product = Some(match product {
            None => block,
            Some(acc) => {
                // relay permutation joining cut l-1's receive side to cut l's
                // transmit side
                let prev_rx: Vec<NodeId> =
                    s.inter_layer[l - 1].iter().map(|e| e.to.clone()).collect();
                let mut relay = Gf2Matrix::with_labels(prev_rx.clone(), tx.clone());
                for (i, y) in prev_rx.iter().enumerate() {
                    for (j, x) in tx.iter().enumerate() {
                        if y.supernode != x.supernode {
                            continue;
                        }
                        let mapped = s
                            .relay_maps
                            .get(&y.supernode)
                            .is_some_and(|pairs| pairs.contains(&(y.level, x.level)));
                        if mapped {
                            relay.set(i, j, true);
                        }
                    }
                }
                acc.mul(&relay)?.mul(&block)?
            }
        });
    }
    Ok(product.expect("at least one layer cut"))
}

/// Bit-exact network simulation of one use: broadcast every transmitted bit
/// along all out-edges, XOR arrivals per receive level, forward through the
/// relay maps, and read the destination's used levels in path order.
pub fn simulate(net: &LayeredNetwork, s: &TransmissionScheme, message: &[bool]) -> Result<Vec<bool>> {
    if message.len() != s.k {
        return Err(Error::MessageLength {
            expected: s.k,
            got: message.len(),
        });
    }
    let mut tx_bits: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    let mut rx_bits: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    for sn in net.supernodes() {
        tx_bits.insert(&sn.id, vec![false; sn.tx_levels]);
        rx_bits.insert(&sn.id, vec![false; sn.rx_levels]);
    }
    if s.k > 0 {
        for (p, &bit) in message.iter().enumerate() {
            let level = s.inter_layer[0][p].from.level;
            tx_bits
                .get_mut(s.inter_layer[0][p].from.supernode.as_str())
                .ok_or_else(|| Error::UnknownNode(s.inter_layer[0][p].from.to_string()))?[level] =
                bit;
        }
    }
    let layer_of: BTreeMap<&str, usize> = net
        .supernodes()
        .iter()
        .map(|sn| (sn.id.as_str(), sn.layer))
        .collect();
    for l in 0..net.layers() - 1 {
        for e in net.edges() {
            if layer_of[e.from.supernode.as_str()] != l {
                continue;
            }
            let bit = tx_bits[e.from.supernode.as_str()][e.from.level];
            rx_bits.get_mut(e.to.supernode.as_str()).expect("validated")[e.to.level] ^= bit;
        }
        if l + 1 == net.layers() - 1 {
            break;
        }
        // relays forward their mapped bits; everything else stays 0
        for sn in net.supernodes() {
            if sn.layer != l + 1 {
                continue;
            }
            let received = rx_bits[sn.id.as_str()].clone();
            let out = tx_bits.get_mut(sn.id.as_str()).expect("validated");
            out.iter_mut().for_each(|b| *b = false);
            if let Some(pairs) = s.relay_maps.get(&sn.id) {
                for &(rx_level, tx_level) in pairs {
                    out[tx_level] = received[rx_level];
                }
            }
        }
    }
    let mut out = Vec::with_capacity(s.k);
    if s.k > 0 {
        let last = &s.inter_layer[net.layers() - 2];
        for e in last {
            out.push(rx_bits[e.to.supernode.as_str()][e.to.level]);
        }
    }
    Ok(out)
}

/// Invert the transfer matrix: find the message whose rows XOR to the
/// received word. Requires full rank.
pub fn decode(received: &[bool], tm: &Gf2Matrix<NodeId>) -> Result<Vec<bool>> {
    let k = tm.rows();
    if tm.cols() != k || tm.rank() != k {
        return Err(Error::SingularMatrix);
    }
    if received.len() != k {
        return Err(Error::MessageLength {
            expected: k,
            got: received.len(),
        });
    }
    let rows = tm
        .solve_row_membership(received)?
        .ok_or(Error::SingularMatrix)?;
    let mut message = vec![false; k];
    for r in rows {
        message[r] = true;
    }
    Ok(message)
}

// ---------------------------------------------------------------------------
// File format: the network document plus `k`, `paths` and `relay_maps`
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SchemeDoc {
    #[serde(flatten)]
    network: NetworkDoc,
    k: usize,
    paths: Vec<Vec<EdgeDoc>>,
    relay_maps: BTreeMap<String, Vec<(usize, usize)>>,
}

impl TransmissionScheme {
    /// Byte-stable JSON envelope bundling the network and the scheme.
    pub fn to_json(&self, net: &LayeredNetwork) -> String {
        let doc = SchemeDoc {
            network: NetworkDoc::from_network(net),
            k: self.k,
            paths: self
                .paths()
                .paths
                .iter()
                .map(|p| p.iter().map(EdgeDoc::from).collect())
                .collect(),
            relay_maps: self.relay_maps.clone(),
        };
        let mut out =
            serde_json::to_string_pretty(&doc).expect("scheme serialization cannot fail");
        out.push('\n');
        out
    }

    /// Parse and fully validate a scheme file.
    pub fn parse(text: &str) -> Result<(LayeredNetwork, TransmissionScheme)> {
        let doc: SchemeDoc = serde_json::from_str(text)?;
        let net = doc.network.into_network()?;
        let violations = net.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations));
        }
        if doc.paths.len() != doc.k {
            return Err(Error::InvalidScheme(format!(
                "k is {} but {} paths are listed",
                doc.k,
                doc.paths.len()
            )));
        }
        let cuts = net.layers() - 1;
        let mut inter_layer = vec![Vec::with_capacity(doc.k); cuts];
        for path in &doc.paths {
            if path.len() != cuts {
                return Err(Error::InvalidScheme(format!(
                    "every path needs {cuts} edges, found one with {}",
                    path.len()
                )));
            }
            for (l, e) in path.iter().enumerate() {
                inter_layer[l].push(Edge::from(e));
            }
        }
        let scheme = TransmissionScheme {
            k: doc.k,
            inter_layer,
            relay_maps: doc.relay_maps,
        };
        validate_scheme(&net, &scheme)?;
        Ok((net, scheme))
    }
}

/// Structural scheme validation: independent paths and exact per-relay
/// bijections between the used receive and transmit levels.
fn validate_scheme(net: &LayeredNetwork, s: &TransmissionScheme) -> Result<()> {
    let paths = s.paths();
    if !oracle::verify_paths_independent(net, &paths)? {
        return Err(Error::InvalidScheme(
            "paths are not linearly independent".into(),
        ));
    }
    // used levels per relay according to the paths
    let mut used_rx: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut used_tx: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for path in &paths.paths {
        for (l, e) in path.iter().enumerate() {
            if l > 0 {
                used_tx.entry(e.from.supernode.as_str()).or_default().push(e.from.level);
            }
            if l + 1 < path.len() {
                used_rx.entry(e.to.supernode.as_str()).or_default().push(e.to.level);
            }
        }
    }
    let empty = Vec::new();
    for sn in net.supernodes() {
        if sn.layer == 0 || sn.layer == net.layers() - 1 {
            if s.relay_maps.contains_key(&sn.id) {
                return Err(Error::InvalidScheme(format!(
                    "relay map given for non-relay super node {:?}",
                    sn.id
                )));
            }
            continue;
        }
        let pairs = s.relay_maps.get(&sn.id).unwrap_or(&empty);
        let mut rx_domain: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let mut tx_image: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        rx_domain.sort_unstable();
        tx_image.sort_unstable();
        if rx_domain.windows(2).any(|w| w[0] == w[1]) || tx_image.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidScheme(format!(
                "relay map of {:?} is not one-one",
                sn.id
            )));
        }
        if pairs
            .iter()
            .any(|&(r, t)| r >= sn.rx_levels || t >= sn.tx_levels)
        {
            return Err(Error::InvalidScheme(format!(
                "relay map of {:?} references unknown levels",
                sn.id
            )));
        }
        let mut want_rx = used_rx.get(sn.id.as_str()).cloned().unwrap_or_default();
        let mut want_tx = used_tx.get(sn.id.as_str()).cloned().unwrap_or_default();
        want_rx.sort_unstable();
        want_tx.sort_unstable();
        if rx_domain != want_rx || tx_image != want_tx {
            return Err(Error::InvalidScheme(format!(
                "relay map of {:?} does not cover exactly the used levels",
                sn.id
            )));
        }
    }
    for key in s.relay_maps.keys() {
        if net.supernode(key).is_none() {
            return Err(Error::InvalidScheme(format!(
                "relay map for unknown super node {key:?}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdfs::unicast_capacity;
    use crate::network::{gen_random, point_to_point, SuperNode};
    use rand::{Rng, SeedableRng};

    fn identity_chain(n: usize) -> LayeredNetwork {
        let supernodes = vec![
            SuperNode { id: "S".into(), layer: 0, tx_levels: n, rx_levels: 0 },
            SuperNode { id: "M".into(), layer: 1, tx_levels: n, rx_levels: n },
            SuperNode { id: "D".into(), layer: 2, tx_levels: 0, rx_levels: n },
        ];
        let mut edges = Vec::new();
        for i in 0..n {
            edges.push(Edge::new("S", i, "M", i));
            edges.push(Edge::new("M", i, "D", i));
        }
        LayeredNetwork::new(3, supernodes, edges)
    }

    fn solve_scheme(net: &LayeredNetwork) -> TransmissionScheme {
        let r = unicast_capacity(net).unwrap();
        extract_scheme(net, &r.paths).unwrap()
    }

    #[test]
    fn empty_path_set_gives_rate_zero() {
        let net = point_to_point(2, 2);
        let s = extract_scheme(&net, &PathSet::empty()).unwrap();
        assert_eq!(s.k, 0);
        let tm = transfer_matrix(&net, &s).unwrap();
        assert_eq!((tm.rows(), tm.cols()), (0, 0));
        assert_eq!(simulate(&net, &s, &[]).unwrap(), Vec::<bool>::new());
        assert_eq!(decode(&[], &tm).unwrap(), Vec::<bool>::new());
    }

    #[test]
    fn single_path_through_one_relay() {
        let net = identity_chain(2);
        let paths = PathSet {
            paths: vec![vec![Edge::new("S", 1, "M", 1), Edge::new("M", 1, "D", 1)]],
        };
        let s = extract_scheme(&net, &paths).unwrap();
        assert_eq!(s.k, 1);
        assert_eq!(s.relay_maps["M"], vec![(1, 1)]);
    }

    #[test]
    fn point_to_point_link_gives_disjoint_pipes() {
        let net = point_to_point(5, 4);
        let s = solve_scheme(&net);
        assert_eq!(s.k, 4);
        assert!(s.relay_maps.is_empty());
        assert_eq!(s.inter_layer.len(), 1);
        assert_eq!(s.inter_layer[0].len(), 4);
        let tm = transfer_matrix(&net, &s).unwrap();
        assert_eq!(tm.rank(), 4);
    }

    #[test]
    fn rejects_dependent_paths() {
        let net = point_to_point(2, 2);
        let dup = PathSet {
            paths: vec![vec![Edge::new("S", 0, "D", 0)], vec![Edge::new("S", 0, "D", 0)]],
        };
        assert!(matches!(
            extract_scheme(&net, &dup),
            Err(Error::InvalidPaths(_))
        ));
    }

    #[test]
    fn transfer_matrix_of_identity_chain_is_identity() {
        let net = identity_chain(3);
        let s = solve_scheme(&net);
        assert_eq!(s.k, 3);
        let tm = transfer_matrix(&net, &s).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(tm.get(i, j), i == j);
            }
        }
    }

    #[test]
    fn simulation_passes_identity_chain_through() {
        let net = identity_chain(3);
        let s = solve_scheme(&net);
        let msg = [true, false, true];
        assert_eq!(simulate(&net, &s, &msg).unwrap(), msg.to_vec());
    }

    #[test]
    fn zero_message_gives_zero_output() {
        let net = gen_random(4, 2, 3, 0.6, 21);
        let s = solve_scheme(&net);
        let out = simulate(&net, &s, &vec![false; s.k]).unwrap();
        assert!(out.iter().all(|&b| !b));
    }

    /// Hand-computed interference: received = (m0, m0 ^ m1).
    #[test]
    fn broadcast_interference_is_xored() {
        let net = LayeredNetwork::new(
            2,
            vec![
                SuperNode { id: "S".into(), layer: 0, tx_levels: 2, rx_levels: 0 },
                SuperNode { id: "D".into(), layer: 1, tx_levels: 0, rx_levels: 2 },
            ],
            vec![
                Edge::new("S", 0, "D", 0),
                Edge::new("S", 0, "D", 1),
                Edge::new("S", 1, "D", 1),
            ],
        );
        let s = solve_scheme(&net);
        assert_eq!(s.k, 2);
        assert_eq!(simulate(&net, &s, &[true, true]).unwrap(), vec![true, false]);
        assert_eq!(simulate(&net, &s, &[false, true]).unwrap(), vec![false, true]);
        let tm = transfer_matrix(&net, &s).unwrap();
        assert_eq!(decode(&[true, false], &tm).unwrap(), vec![true, true]);
    }

    #[test]
    fn simulation_matches_transfer_matrix_product() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for seed in 0..25 {
            let net = gen_random(2 + seed as usize % 4, 2, 3, 0.55, seed);
            let s = solve_scheme(&net);
            let tm = transfer_matrix(&net, &s).unwrap();
            for _ in 0..20 {
                let msg: Vec<bool> = (0..s.k).map(|_| rng.gen()).collect();
                let simulated = simulate(&net, &s, &msg).unwrap();
                let rows: Vec<usize> =
                    msg.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
                let product = tm.row_sum(&rows).unwrap();
                assert_eq!(simulated, product, "seed {seed}");
            }
        }
    }

    #[test]
    fn simulation_is_linear() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let net = gen_random(4, 3, 3, 0.5, 33);
        let s = solve_scheme(&net);
        for _ in 0..30 {
            let a: Vec<bool> = (0..s.k).map(|_| rng.gen()).collect();
            let b: Vec<bool> = (0..s.k).map(|_| rng.gen()).collect();
            let xor: Vec<bool> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let sim_a = simulate(&net, &s, &a).unwrap();
            let sim_b = simulate(&net, &s, &b).unwrap();
            let sim_xor = simulate(&net, &s, &xor).unwrap();
            let combined: Vec<bool> = sim_a.iter().zip(&sim_b).map(|(x, y)| x ^ y).collect();
            assert_eq!(sim_xor, combined);
        }
    }

    #[test]
    fn decode_inverts_simulate_exhaustively() {
        let net = identity_chain(3);
        let s = solve_scheme(&net);
        let tm = transfer_matrix(&net, &s).unwrap();
        for word in 0u32..1 << s.k {
            let msg: Vec<bool> = (0..s.k).map(|i| word >> i & 1 == 1).collect();
            let received = simulate(&net, &s, &msg).unwrap();
            assert_eq!(decode(&received, &tm).unwrap(), msg);
        }
    }

    #[test]
    fn message_length_is_checked() {
        let net = point_to_point(3, 2);
        let s = solve_scheme(&net);
        assert!(matches!(
            simulate(&net, &s, &[true]),
            Err(Error::MessageLength { .. })
        ));
    }

    #[test]
    fn scheme_file_round_trip() {
        let net = gen_random(4, 2, 3, 0.5, 77);
        let s = solve_scheme(&net);
        let text = s.to_json(&net);
        let (net2, s2) = TransmissionScheme::parse(&text).unwrap();
        assert_eq!(net2, net);
        assert_eq!(s2, s);
        assert_eq!(s2.to_json(&net2), text);
    }

    #[test]
    fn scheme_parse_rejects_broken_relay_map() {
        let net = identity_chain(2);
        let mut s = solve_scheme(&net);
        s.relay_maps.get_mut("M").unwrap()[0].1 = 1; // two receive levels onto one transmit level
        s.relay_maps.get_mut("M").unwrap()[1].1 = 1;
        let text = s.to_json(&net);
        assert!(matches!(
            TransmissionScheme::parse(&text),
            Err(Error::InvalidScheme(_))
        ));
    }
}
