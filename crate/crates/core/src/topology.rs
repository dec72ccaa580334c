//! Overlay topologies grown by the m-nearest design rule, failure injection,
//! and the text dump format.
//!
//! Every arriving node links to the `m` present nodes closest to it in the
//! scheme metric (ties by smaller node id); the first `m` arrivals link to
//! everything that exists. Removed nodes leave a tombstone so ids stay stable.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addressing::{
    address_of, Address, AddressingError, RankTable, Scheme, SchemeConfig, Zone, ZoneId,
};
use crate::geometry::{GeoPoint, HyperbolicPoint, PreparedPoint, EARTH_RADIUS_KM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error(transparent)]
    Addressing(#[from] AddressingError),
    #[error("node {0} does not exist")]
    NoSuchNode(NodeId),
    #[error("link {0}-{1} does not exist")]
    NoSuchLink(NodeId, NodeId),
    #[error("{scheme} topology cannot hold this address")]
    MismatchedAddress { scheme: Scheme },
    #[error("link removal fraction {0} outside [0, 1)")]
    InvalidFraction(f64),
    #[error("invalid topology: {0}")]
    Invalid(String),
    #[error("topology dump, line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("topology dump: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub zone_id: ZoneId,
    pub address: Address,
    prepared: PreparedPoint,
}

impl Node {
    fn new(id: NodeId, zone_id: ZoneId, address: Address) -> Self {
        let prepared = match address {
            Address::Geo(p) => PreparedPoint::geo(p),
            Address::Hyper(h) => PreparedPoint::hyper(h),
        };
        Self {
            id,
            zone_id,
            address,
            prepared,
        }
    }

    pub fn location(&self) -> GeoPoint {
        self.address.angular()
    }
}

/// Scheme distance between two prepared points; bitwise equal to
/// [`Address::distance`].
pub(crate) fn metric(scheme: Scheme, a: &PreparedPoint, b: &PreparedPoint) -> f64 {
    match scheme {
        Scheme::Geo => EARTH_RADIUS_KM * a.central_angle(b),
        Scheme::Gh | Scheme::Rgh => a.hyperbolic_distance(b),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FailureScenario {
    Original,
    OneNode(NodeId),
    OneLink(NodeId, NodeId),
    RandomLinks { fraction: f64, seed: u64 },
}

impl fmt::Display for FailureScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureScenario::Original => write!(f, "original"),
            FailureScenario::OneNode(n) => write!(f, "node-{n}"),
            FailureScenario::OneLink(a, b) => write!(f, "link-{a}-{b}"),
            FailureScenario::RandomLinks { fraction, seed } => {
                write!(f, "random-links-{fraction}-seed-{seed}")
            }
        }
    }
}

/// Undirected overlay graph. Node ids are arrival indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    scheme: Scheme,
    nodes: Vec<Option<Node>>,
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl Topology {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            nodes: Vec::new(),
            adjacency: Vec::new(),
            edge_count: 0,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Number of id slots, tombstones included.
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_some()).count()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.0).and_then(Option::as_ref)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.node(id).is_some()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().flatten()
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes().map(|n| n.id).collect()
    }

    /// Sorted neighbor list; empty for absent ids.
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        self.adjacency.get(id.0).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.neighbors(id).len()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, adj)| {
            adj.iter()
                .filter(move |j| j.0 > i)
                .map(move |&j| (NodeId(i), j))
        })
    }

    pub(crate) fn prepared(&self, id: NodeId) -> &PreparedPoint {
        &self.nodes[id.0].as_ref().expect("present node").prepared
    }

    /// Scheme-metric distance between two present nodes.
    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        metric(self.scheme, self.prepared(a), self.prepared(b))
    }

    fn check_address(&self, address: &Address) -> Result<(), TopologyError> {
        match (self.scheme, address) {
            (Scheme::Geo, Address::Geo(_)) => Ok(()),
            (Scheme::Gh | Scheme::Rgh, Address::Hyper(_)) => Ok(()),
            _ => Err(TopologyError::MismatchedAddress {
                scheme: self.scheme,
            }),
        }
    }

    /// Adds an arriving node and links it to its `m` nearest present nodes.
    pub fn add_node(
        &mut self,
        zone_id: ZoneId,
        address: Address,
        m: usize,
    ) -> Result<NodeId, TopologyError> {
        self.check_address(&address)?;
        let id = NodeId(self.nodes.len());
        let node = Node::new(id, zone_id, address);
        let targets = if self.nodes.is_empty() {
            Vec::new()
        } else {
            nearest_to_prepared(self, &node.prepared, m)
        };
        self.nodes.push(Some(node));
        self.adjacency.push(Vec::new());
        for target in targets {
            self.insert_edge(id, target);
        }
        Ok(id)
    }

    fn insert_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        if a == b {
            return false;
        }
        match self.adjacency[a.0].binary_search(&b) {
            Ok(_) => false,
            Err(pos) => {
                self.adjacency[a.0].insert(pos, b);
                let pos = self.adjacency[b.0].binary_search(&a).unwrap_err();
                self.adjacency[b.0].insert(pos, a);
                self.edge_count += 1;
                true
            }
        }
    }

    fn remove_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        let Ok(pos) = self.adjacency[a.0].binary_search(&b) else {
            return false;
        };
        self.adjacency[a.0].remove(pos);
        let pos = self.adjacency[b.0]
            .binary_search(&a)
            .expect("adjacency is symmetric");
        self.adjacency[b.0].remove(pos);
        self.edge_count -= 1;
        true
    }

    fn remove_node(&mut self, id: NodeId) {
        let neighbors = std::mem::take(&mut self.adjacency[id.0]);
        for n in &neighbors {
            let pos = self.adjacency[n.0].binary_search(&id).expect("symmetric");
            self.adjacency[n.0].remove(pos);
        }
        self.edge_count -= neighbors.len();
        self.nodes[id.0] = None;
    }

    /// Builds a topology from explicit parts. Node ids index the slot list;
    /// `None` slots are tombstones.
    pub fn from_parts(
        scheme: Scheme,
        nodes: Vec<Option<(ZoneId, Address)>>,
        edges: &[(NodeId, NodeId)],
    ) -> Result<Self, TopologyError> {
        let mut topology = Topology::new(scheme);
        for (i, slot) in nodes.into_iter().enumerate() {
            let node = match slot {
                Some((zone, address)) => {
                    topology.check_address(&address)?;
                    Some(Node::new(NodeId(i), zone, address))
                }
                None => None,
            };
            topology.nodes.push(node);
            topology.adjacency.push(Vec::new());
        }
        for &(a, b) in edges {
            for n in [a, b] {
                if !topology.contains(n) {
                    return Err(TopologyError::NoSuchNode(n));
                }
            }
            if a == b {
                return Err(TopologyError::Invalid(format!("self-loop at {a}")));
            }
            if !topology.insert_edge(a, b) {
                return Err(TopologyError::Invalid(format!("duplicate link {a}-{b}")));
            }
        }
        Ok(topology)
    }

    /// Checks symmetry, sortedness, absence of self-loops and parallel
    /// edges, and that tombstones carry no links.
    pub fn validate(&self) -> Result<(), TopologyError> {
        let invalid = |msg: String| Err(TopologyError::Invalid(msg));
        if self.adjacency.len() != self.nodes.len() {
            return invalid("adjacency and node slots differ in length".into());
        }
        let mut half_edges = 0;
        for (i, adj) in self.adjacency.iter().enumerate() {
            let id = NodeId(i);
            if self.nodes[i].is_none() && !adj.is_empty() {
                return invalid(format!("removed node {id} still has links"));
            }
            if let Some(node) = &self.nodes[i] {
                if node.id != id {
                    return invalid(format!("node in slot {i} carries id {}", node.id));
                }
            }
            for w in adj.windows(2) {
                if w[0] >= w[1] {
                    return invalid(format!("neighbors of {id} unsorted or repeated"));
                }
            }
            for &j in adj {
                if j == id {
                    return invalid(format!("self-loop at {id}"));
                }
                if !self.contains(j) {
                    return invalid(format!("{id} links to missing node {j}"));
                }
                if self.adjacency[j.0].binary_search(&id).is_err() {
                    return invalid(format!("link {id}-{j} is one-directional"));
                }
            }
            half_edges += adj.len();
        }
        if half_edges != 2 * self.edge_count {
            return invalid("edge counter out of sync".into());
        }
        Ok(())
    }

    /// Writes the dump format: a `scheme` line, a node block of
    /// `id zone_id r theta phi` lines (r is `-` under GEO), then an edge
    /// block of `i j` lines. Floats use shortest round-trip formatting.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "scheme {}", self.scheme)?;
        writeln!(out, "nodes {} {}", self.capacity(), self.node_count())?;
        for node in self.nodes() {
            let p = node.location();
            let r = match node.address {
                Address::Geo(_) => "-".to_owned(),
                Address::Hyper(h) => format!("{:?}", h.r()),
            };
            writeln!(
                out,
                "{} {} {} {:?} {:?}",
                node.id,
                node.zone_id,
                r,
                p.theta(),
                p.phi()
            )?;
        }
        writeln!(out, "edges {}", self.edge_count)?;
        for (a, b) in self.edges() {
            writeln!(out, "{a} {b}")?;
        }
        Ok(())
    }

    pub fn to_dump(&self) -> String {
        let mut buf = Vec::new();
        self.write_dump(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("dump is utf-8")
    }

    pub fn read_dump<R: BufRead>(input: R) -> Result<Self, TopologyError> {
        let mut lines = input.lines().enumerate().map(|(i, l)| {
            l.map(|l| (i + 1, l))
                .map_err(|e| TopologyError::Io(e.to_string()))
        });
        let mut next = |what: &str| -> Result<(usize, String), TopologyError> {
            lines.next().unwrap_or_else(|| {
                Err(TopologyError::Parse {
                    line: 0,
                    message: format!("unexpected end of input, expected {what}"),
                })
            })
        };
        let parse_err = |line: usize, message: String| TopologyError::Parse { line, message };

        let (line, header) = next("scheme line")?;
        let scheme: Scheme = header
            .strip_prefix("scheme ")
            .ok_or_else(|| parse_err(line, "expected `scheme <GEO|GH|RGH>`".into()))?
            .trim()
            .parse()
            .map_err(|e| parse_err(line, e))?;

        let (line, header) = next("nodes line")?;
        let counts: Vec<usize> = header
            .strip_prefix("nodes ")
            .ok_or_else(|| parse_err(line, "expected `nodes <slots> <present>`".into()))?
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_err(line, e.to_string()))?;
        let [slots, present] = counts[..] else {
            return Err(parse_err(line, "expected `nodes <slots> <present>`".into()));
        };

        let mut nodes: Vec<Option<(ZoneId, Address)>> = vec![None; slots];
        for _ in 0..present {
            let (line, text) = next("node line")?;
            let fields: Vec<&str> = text.split_whitespace().collect();
            let [id, zone, r, theta, phi] = fields[..] else {
                return Err(parse_err(line, "expected `id zone_id r theta phi`".into()));
            };
            let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(line, e.to_string()));
            let id: usize = id.parse().map_err(|_| parse_err(line, format!("bad node id {id}")))?;
            if id >= slots || nodes[id].is_some() {
                return Err(parse_err(line, format!("node id {id} out of range or repeated")));
            }
            let angular = GeoPoint::new(num(theta)?, num(phi)?)
                .ok_or_else(|| parse_err(line, "angular coordinates out of range".into()))?;
            let address = match scheme {
                Scheme::Geo => Address::Geo(angular),
                Scheme::Gh | Scheme::Rgh => Address::Hyper(
                    HyperbolicPoint::new(num(r)?, angular)
                        .ok_or_else(|| parse_err(line, "radius must be >= 0".into()))?,
                ),
            };
            nodes[id] = Some((ZoneId::from(zone), address));
        }

        let (line, header) = next("edges line")?;
        let edge_total: usize = header
            .strip_prefix("edges ")
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| parse_err(line, "expected `edges <count>`".into()))?;
        let mut edges = Vec::with_capacity(edge_total);
        for _ in 0..edge_total {
            let (line, text) = next("edge line")?;
            let ids: Vec<usize> = text
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e: std::num::ParseIntError| parse_err(line, e.to_string()))?;
            let [a, b] = ids[..] else {
                return Err(parse_err(line, "expected `i j`".into()));
            };
            edges.push((NodeId(a), NodeId(b)));
        }
        Topology::from_parts(scheme, nodes, &edges)
    }
}

#[derive(PartialEq)]
struct Candidate {
    distance: f64,
    id: NodeId,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn nearest_to_prepared(t: &Topology, target: &PreparedPoint, m: usize) -> Vec<NodeId> {
    if m == 0 {
        return Vec::new();
    }
    // max-heap holding the m best candidates seen so far
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(m + 1);
    for node in t.nodes() {
        let candidate = Candidate {
            distance: metric(t.scheme, &node.prepared, target),
            id: node.id,
        };
        if heap.len() < m {
            heap.push(candidate);
        } else if candidate < *heap.peek().expect("heap is full") {
            heap.pop();
            heap.push(candidate);
        }
    }
    heap.into_sorted_vec().into_iter().map(|c| c.id).collect()
}

/// The `min(m, present)` present nodes nearest to `target`, ordered by
/// ascending distance, ties by smaller id.
///
/// # Panics
/// When `target` carries a different address tag than the topology.
pub fn nearest_existing(t: &Topology, target: &Address, m: usize) -> Vec<NodeId> {
    t.check_address(target)
        .expect("target address must match the topology scheme");
    let prepared = match target {
        Address::Geo(p) => PreparedPoint::geo(*p),
        Address::Hyper(h) => PreparedPoint::hyper(*h),
    };
    nearest_to_prepared(t, &prepared, m)
}

/// Grows a topology from scratch, one arrival at a time.
pub fn grow<'a>(
    arrivals: impl IntoIterator<Item = &'a Zone>,
    config: &SchemeConfig,
    ranks: Option<&RankTable>,
) -> Result<Topology, TopologyError> {
    let mut topology = Topology::new(config.scheme);
    for zone in arrivals {
        let address = address_of(zone, ranks, config.scheme)?;
        topology.add_node(zone.zone_id.clone(), address, config.m)?;
    }
    Ok(topology)
}

/// Returns a damaged copy of `t`; the input is never modified.
pub fn apply_failure(t: &Topology, failure: &FailureScenario) -> Result<Topology, TopologyError> {
    let mut damaged = t.clone();
    match *failure {
        FailureScenario::Original => {}
        FailureScenario::OneNode(id) => {
            if !t.contains(id) {
                return Err(TopologyError::NoSuchNode(id));
            }
            damaged.remove_node(id);
        }
        FailureScenario::OneLink(a, b) => {
            if !t.contains(a) || !t.contains(b) || !damaged.remove_edge(a, b) {
                return Err(TopologyError::NoSuchLink(a, b));
            }
        }
        FailureScenario::RandomLinks { fraction, seed } => {
            if !(0.0..1.0).contains(&fraction) {
                return Err(TopologyError::InvalidFraction(fraction));
            }
            let edges: Vec<(NodeId, NodeId)> = t.edges().collect();
            let remove = links_to_remove(fraction, edges.len());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut chosen: Vec<usize> =
                rand::seq::index::sample(&mut rng, edges.len(), remove).into_vec();
            chosen.sort_unstable();
            for i in chosen {
                let (a, b) = edges[i];
                damaged.remove_edge(a, b);
            }
        }
    }
    Ok(damaged)
}

/// ⌊fraction · edges⌋, robust to products such as 0.29 · 100 landing a hair
/// below the integer.
pub fn links_to_remove(fraction: f64, edges: usize) -> usize {
    let exact = fraction * edges as f64;
    ((exact + 1e-9 * exact.max(1.0)).floor() as usize).min(edges)
}

/// Every single-node and single-link failure, nodes first, ascending ids.
pub fn enumerate_single_failures(t: &Topology) -> Vec<FailureScenario> {
    t.nodes()
        .map(|n| FailureScenario::OneNode(n.id))
        .chain(t.edges().map(|(a, b)| FailureScenario::OneLink(a, b)))
        .collect()
}

/// Degrees of the present nodes, ascending id order.
pub fn degree_sequence(t: &Topology) -> Vec<usize> {
    t.nodes().map(|n| t.degree(n.id)).collect()
}

/// Least-squares slope of ln P(K ≥ k) against ln k, taken over the distinct
/// observed degrees k in `[k_min, k_max]`. `None` with fewer than two such
/// degrees.
pub fn degree_ccdf_slope(degrees: &[usize], k_min: usize, k_max: usize) -> Option<f64> {
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable();
    let total = sorted.len() as f64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let k = sorted[i];
        if k >= k_min.max(1) && k <= k_max {
            points.push(((k as f64).ln(), ((sorted.len() - i) as f64 / total).ln()));
        }
        while i < sorted.len() && sorted[i] == k {
            i += 1;
        }
    }
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    Some(sxy / sxx)
}
