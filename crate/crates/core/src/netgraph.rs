//! Static network topology: random geometric graphs on the unit square,
//! connectivity, edge-disjoint path discovery and the per-window feasible
//! subgraph.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::CapacityState;
use crate::error::{invalid, Error, Result};
use crate::seeds;

/// Default cap on the number of edge-disjoint paths per source-destination pair.
pub const DEFAULT_MAX_PATHS: usize = 16;

const LENGTH_TOLERANCE: f64 = 1e-12;

pub type NodeId = usize;
pub type EdgeId = usize;

/// Undirected geometric network with nodes placed in `[0, 1]^2`.
///
/// Edge `e` joins `edges[e].0 < edges[e].1` and has Euclidean length
/// `lengths[e]`, never larger than the connection radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDoc", into = "NetworkDoc")]
pub struct Network {
    positions: Vec<[f64; 2]>,
    edges: Vec<(NodeId, NodeId)>,
    lengths: Vec<f64>,
    radius: f64,
    /// Per node, `(neighbor, edge)` sorted by neighbor id.
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
}

/// On-disk form: `{"nodes": [[x, y], ...], "edges": [[i, j], ...], "radius": r}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct NetworkDoc {
    nodes: Vec<[f64; 2]>,
    edges: Vec<[NodeId; 2]>,
    radius: f64,
}

impl TryFrom<NetworkDoc> for Network {
    type Error = Error;

    fn try_from(doc: NetworkDoc) -> Result<Self> {
        let edges = doc.edges.into_iter().map(|[a, b]| (a, b)).collect();
        Network::from_parts(doc.nodes, edges, doc.radius)
    }
}

impl From<Network> for NetworkDoc {
    fn from(net: Network) -> Self {
        NetworkDoc {
            nodes: net.positions,
            edges: net.edges.into_iter().map(|(a, b)| [a, b]).collect(),
            radius: net.radius,
        }
    }
}

fn euclidean(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Network {
    /// Builds a network from explicit positions and edges.
    ///
    /// Edges are stored with the smaller endpoint first; their order is kept.
    pub fn from_parts(
        positions: Vec<[f64; 2]>,
        edges: Vec<(NodeId, NodeId)>,
        radius: f64,
    ) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid("radius", format!("{radius} must be positive")));
        }
        let n = positions.len();
        if positions
            .iter()
            .flatten()
            .any(|c| !c.is_finite())
        {
            return Err(invalid("nodes", "non-finite coordinate"));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut canonical = Vec::with_capacity(edges.len());
        let mut lengths = Vec::with_capacity(edges.len());
        for (id, &(a, b)) in edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(invalid("edges", format!("edge {id} references a missing node")));
            }
            if a == b {
                return Err(invalid("edges", format!("edge {id} is a self-loop on node {a}")));
            }
            let (a, b) = (a.min(b), a.max(b));
            let length = euclidean(positions[a], positions[b]);
            if length > radius + LENGTH_TOLERANCE {
                return Err(invalid(
                    "edges",
                    format!("edge {id} has length {length} above radius {radius}"),
                ));
            }
            adjacency[a].push((b, id));
            adjacency[b].push((a, id));
            canonical.push((a, b));
            lengths.push(length);
        }
        for (node, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(invalid("edges", format!("duplicate edge at node {node}")));
            }
        }
        Ok(Self {
            positions,
            edges: canonical,
            lengths,
            radius,
            adjacency,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn position(&self, node: NodeId) -> [f64; 2] {
        self.positions[node]
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> (NodeId, NodeId) {
        self.edges[id]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn length(&self, id: EdgeId) -> f64 {
        self.lengths[id]
    }

    /// `(neighbor, edge)` pairs of `node` in ascending neighbor order.
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adjacency[node]
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        let list = self.adjacency.get(a)?;
        list.binary_search_by_key(&b, |&(nb, _)| nb)
            .ok()
            .map(|k| list[k].1)
    }

    /// Euclidean distance between two nodes.
    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        euclidean(self.positions[a], self.positions[b])
    }

    pub fn mean_degree(&self) -> f64 {
        if self.positions.is_empty() {
            return 0.0;
        }
        2.0 * self.edges.len() as f64 / self.positions.len() as f64
    }

    fn check_node(&self, name: &'static str, node: NodeId) -> Result<()> {
        if node < self.n_nodes() {
            Ok(())
        } else {
            Err(invalid(
                name,
                format!("node {node} out of range for {} nodes", self.n_nodes()),
            ))
        }
    }
}

/// Samples `n_nodes` uniform points in the unit square and joins every pair
/// at distance at most `radius`.
///
/// A radius marginally above the unit-square diameter is clamped to it.
pub fn generate_rgg(n_nodes: usize, radius: f64, seed: u64) -> Result<Network> {
    if n_nodes < 2 {
        return Err(invalid("n_nodes", format!("{n_nodes} must be at least 2")));
    }
    let diameter = std::f64::consts::SQRT_2;
    if !(radius > 0.0) || radius > diameter + 1e-9 {
        return Err(invalid("radius", format!("{radius} is not in (0, sqrt 2]")));
    }
    let radius = radius.min(diameter);
    let mut rng = seeds::rng(seed);
    let positions: Vec<[f64; 2]> = (0..n_nodes)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let mut edges = Vec::new();
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            if euclidean(positions[i], positions[j]) <= radius {
                edges.push((i, j));
            }
        }
    }
    Network::from_parts(positions, edges, radius)
}

/// Whether one connected component spans every node.
pub fn is_connected(net: &Network) -> bool {
    let n = net.n_nodes();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for &(v, _) in net.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == n
}

/// A simple path through a [`Network`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    nodes: Vec<NodeId>,
    edges: Vec<EdgeId>,
    length: f64,
}

impl Path {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn hops(&self) -> usize {
        self.edges.len()
    }

    /// Total Euclidean length of the path.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Re-expresses edge ids through `map`, e.g. from a subgraph to its parent.
    pub(crate) fn remap_edges(&mut self, map: &[EdgeId]) {
        for e in &mut self.edges {
            *e = map[*e];
        }
    }
}

/// Edge-disjoint paths between one source and destination, shortest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub source: NodeId,
    pub destination: NodeId,
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn hop_counts(&self) -> Vec<usize> {
        self.paths.iter().map(Path::hops).collect()
    }
}

/// Greedy successive shortest paths: breadth-first search on the residual
/// graph, remove the edges of the path found, repeat.
///
/// Neighbors are explored in ascending id order. The result is sorted by hop
/// count, then total length, then node sequence. The greedy procedure can
/// return fewer paths than a max-flow decomposition would.
pub fn edge_disjoint_paths(
    net: &Network,
    src: NodeId,
    dst: NodeId,
    max_paths: usize,
) -> Result<PathSet> {
    net.check_node("src", src)?;
    net.check_node("dst", dst)?;
    if src == dst {
        return Err(invalid("dst", "source and destination coincide"));
    }
    if max_paths == 0 {
        return Err(invalid("max_paths", "must be at least 1"));
    }

    let n = net.n_nodes();
    let mut removed = vec![false; net.n_edges()];
    let mut parent: Vec<Option<(NodeId, EdgeId)>> = vec![None; n];
    let mut stamp = vec![0u32; n];
    let mut round = 0u32;
    let mut queue = VecDeque::new();
    let mut paths = Vec::new();

    while paths.len() < max_paths {
        round += 1;
        queue.clear();
        queue.push_back(src);
        stamp[src] = round;
        let mut found = false;
        'bfs: while let Some(u) = queue.pop_front() {
            for &(v, e) in net.neighbors(u) {
                if removed[e] || stamp[v] == round {
                    continue;
                }
                stamp[v] = round;
                parent[v] = Some((u, e));
                if v == dst {
                    found = true;
                    break 'bfs;
                }
                queue.push_back(v);
            }
        }
        if !found {
            break;
        }

        let mut nodes = vec![dst];
        let mut edges = Vec::new();
        let mut cursor = dst;
        while cursor != src {
            let (prev, e) = parent[cursor].expect("bfs tree reaches the source");
            edges.push(e);
            nodes.push(prev);
            cursor = prev;
        }
        nodes.reverse();
        edges.reverse();
        for &e in &edges {
            removed[e] = true;
        }
        let length = edges.iter().map(|&e| net.length(e)).sum();
        paths.push(Path {
            nodes,
            edges,
            length,
        });
    }

    paths.sort_by(|a, b| {
        a.hops()
            .cmp(&b.hops())
            .then(a.length.total_cmp(&b.length))
            .then_with(|| a.nodes.cmp(&b.nodes))
    });
    Ok(PathSet {
        source: src,
        destination: dst,
        paths,
    })
}

/// Parent ids of the edges that carry at least one pair, in parent order.
///
/// Edge `k` of [`feasible_subgraph`] is edge `feasible_edge_ids(..)[k]` of `net`.
pub fn feasible_edge_ids(net: &Network, caps: &CapacityState) -> Result<Vec<EdgeId>> {
    if caps.len() != net.n_edges() {
        return Err(Error::IndexMismatch {
            what: "capacity state",
            expected: net.n_edges(),
            found: caps.len(),
        });
    }
    Ok((0..net.n_edges()).filter(|&e| caps.get(e) >= 1).collect())
}

/// The network restricted to edges whose current capacity is at least one.
pub fn feasible_subgraph(net: &Network, caps: &CapacityState) -> Result<Network> {
    let kept = feasible_edge_ids(net, caps)?;
    Ok(restrict(net, &kept))
}

pub(crate) fn restrict(net: &Network, kept: &[EdgeId]) -> Network {
    let n = net.n_nodes();
    let mut adjacency = vec![Vec::new(); n];
    let mut edges = Vec::with_capacity(kept.len());
    let mut lengths = Vec::with_capacity(kept.len());
    for (new_id, &old) in kept.iter().enumerate() {
        let (a, b) = net.edges[old];
        adjacency[a].push((b, new_id));
        adjacency[b].push((a, new_id));
        edges.push((a, b));
        lengths.push(net.lengths[old]);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    Network {
        positions: net.positions.clone(),
        edges,
        lengths,
        radius: net.radius,
        adjacency,
    }
}
