//! Greedy geometric routing and the shortest-delay baseline.
//!
//! A greedy walk always forwards to the neighbor closest to the destination
//! address (ties: the destination itself, then the smaller id) and fails as
//! soon as that neighbor was already visited.
//!
//! Path delays are summed from the destination back towards the source, the
//! same order in which a shortest-path search rooted at the destination
//! accumulates them. A greedy path that coincides with the shortest-delay
//! path therefore has exactly the same delay, bit for bit.

use std::cell::RefCell;
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::EarthConstants;
use crate::topology::{metric, NodeId, Topology};

#[derive(Debug, Error, PartialEq)]
pub enum RoutingError {
    #[error("node {0} does not exist")]
    NoSuchNode(NodeId),
    #[error("source and destination are both {0}")]
    SameEndpoints(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    LocalMinimum,
    /// No overlay path exists between the endpoints.
    Disconnected,
    /// Walk length exceeded the node count. Unreachable under the visited-set
    /// rule; seeing it means a defect.
    HopLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Failure(FailureReason),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteResult {
    pub outcome: Outcome,
    /// Visited nodes in order, source first.
    pub path: Vec<NodeId>,
    /// Summed link delay along the path; `Some` only on success.
    pub delay_ms: Option<f64>,
}

impl RouteResult {
    pub fn is_success(&self) -> bool {
        self.outcome == Outcome::Success
    }

    pub fn hops(&self) -> usize {
        self.path.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingOptions {
    /// Forward only to a neighbor strictly closer to the destination than the
    /// current node; otherwise declare a local minimum.
    pub strict_progress: bool,
    pub constants: EarthConstants,
}

impl Default for RoutingOptions {
    fn default() -> Self {
        Self {
            strict_progress: false,
            constants: EarthConstants::STANDARD,
        }
    }
}

/// Per-snapshot routing state: the topology plus precomputed link delays.
pub struct RoutingContext<'a> {
    topology: &'a Topology,
    options: RoutingOptions,
    /// Delays aligned with `topology.neighbors(i)`.
    link_delays: Vec<Vec<f64>>,
}

impl<'a> RoutingContext<'a> {
    pub fn new(topology: &'a Topology, options: RoutingOptions) -> Self {
        let link_delays = (0..topology.capacity())
            .map(|i| {
                let id = NodeId(i);
                topology
                    .neighbors(id)
                    .iter()
                    .map(|&j| pair_delay(topology, &options.constants, id, j))
                    .collect()
            })
            .collect();
        Self {
            topology,
            options,
            link_delays,
        }
    }

    pub fn topology(&self) -> &'a Topology {
        self.topology
    }

    pub fn options(&self) -> &RoutingOptions {
        &self.options
    }

    fn check(&self, id: NodeId) -> Result<(), RoutingError> {
        if self.topology.contains(id) {
            Ok(())
        } else {
            Err(RoutingError::NoSuchNode(id))
        }
    }

    /// Delay of the existing link `a`–`b`.
    pub fn link_delay(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let neighbors = self.topology.neighbors(a);
        neighbors
            .binary_search(&b)
            .ok()
            .map(|pos| self.link_delays[a.0][pos])
    }

    /// Delay of a hypothetical direct link between two present nodes.
    pub fn underlay_delay(&self, src: NodeId, dst: NodeId) -> Result<f64, RoutingError> {
        self.check(src)?;
        self.check(dst)?;
        Ok(pair_delay(self.topology, &self.options.constants, src, dst))
    }

    /// Routing state for every source towards one destination.
    pub fn toward(&self, dst: NodeId) -> Result<DestinationView<'_, 'a>, RoutingError> {
        self.check(dst)?;
        Ok(DestinationView::new(self, dst))
    }

    pub fn greedy_route(&self, src: NodeId, dst: NodeId) -> Result<RouteResult, RoutingError> {
        self.check(src)?;
        self.toward(dst)?.route(src)
    }

    /// `None` when no path exists.
    pub fn shortest_delay_path(&self, src: NodeId, dst: NodeId) -> Result<Option<f64>, RoutingError> {
        self.check(src)?;
        Ok(self.toward(dst)?.shortest_delay(src))
    }
}

/// Dijkstra rooted at the destination, advanced only as far as queries need.
/// Pausing does not change the settling order, so every distance equals the
/// one a full run would produce.
struct Search {
    dist: Vec<f64>,
    settled: Vec<bool>,
    heap: BinaryHeap<Reverse<HeapEntry>>,
}

impl Search {
    fn new(capacity: usize, root: NodeId) -> Self {
        let mut dist = vec![f64::INFINITY; capacity];
        dist[root.0] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(HeapEntry(0.0, root)));
        Self {
            dist,
            settled: vec![false; capacity],
            heap,
        }
    }

    /// Final distance of `target`; infinite when unreachable.
    fn settle(&mut self, ctx: &RoutingContext<'_>, target: NodeId) -> f64 {
        if self.settled[target.0] {
            return self.dist[target.0];
        }
        while let Some(Reverse(HeapEntry(d, u))) = self.heap.pop() {
            if self.settled[u.0] || d > self.dist[u.0] {
                continue;
            }
            self.settled[u.0] = true;
            for (&v, &w) in ctx.topology.neighbors(u).iter().zip(&ctx.link_delays[u.0]) {
                let candidate = d + w;
                if candidate < self.dist[v.0] {
                    self.dist[v.0] = candidate;
                    self.heap.push(Reverse(HeapEntry(candidate, v)));
                }
            }
            if u == target {
                return d;
            }
        }
        f64::INFINITY
    }
}

fn pair_delay(t: &Topology, constants: &EarthConstants, a: NodeId, b: NodeId) -> f64 {
    // central angle on the prepared points is bitwise equal to
    // geometry::central_angle on the nodes' geolocations
    constants.delay_for_angle(t.prepared(a).central_angle(t.prepared(b)))
}

#[derive(PartialEq)]
struct HeapEntry(f64, NodeId);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const UNSET: usize = usize::MAX;
const NO_HOP: usize = usize::MAX - 1;

/// Greedy forwarding decisions and shortest delays towards one destination.
///
/// The greedy next hop of a node depends only on the node and the
/// destination, so it is computed once per node and shared by every source.
pub struct DestinationView<'c, 'a> {
    ctx: &'c RoutingContext<'a>,
    dst: NodeId,
    next_hop: RefCell<Vec<usize>>,
    search: RefCell<Option<Search>>,
}

impl<'c, 'a> DestinationView<'c, 'a> {
    fn new(ctx: &'c RoutingContext<'a>, dst: NodeId) -> Self {
        Self {
            ctx,
            dst,
            next_hop: RefCell::new(vec![UNSET; ctx.topology.capacity()]),
            search: RefCell::new(None),
        }
    }

    pub fn destination(&self) -> NodeId {
        self.dst
    }

    fn compute_next_hop(&self, node: NodeId) -> Option<NodeId> {
        let t = self.ctx.topology;
        let target = t.prepared(self.dst);
        let scheme = t.scheme();
        let key = |v: NodeId| (metric(scheme, t.prepared(v), target), v != self.dst, v);
        let best = t
            .neighbors(node)
            .iter()
            .map(|&v| key(v))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)))?;
        if self.ctx.options.strict_progress
            && best.0 >= metric(scheme, t.prepared(node), target)
        {
            return None;
        }
        Some(best.2)
    }

    /// Greedy next hop from `node`, or `None` at a dead end.
    pub fn next_hop(&self, node: NodeId) -> Option<NodeId> {
        let cached = self.next_hop.borrow()[node.0];
        let hop = match cached {
            UNSET => {
                let hop = self.compute_next_hop(node);
                self.next_hop.borrow_mut()[node.0] = hop.map_or(NO_HOP, |h| h.0);
                hop
            }
            NO_HOP => None,
            id => Some(NodeId(id)),
        };
        hop
    }

    pub fn route(&self, src: NodeId) -> Result<RouteResult, RoutingError> {
        self.ctx.check(src)?;
        if src == self.dst {
            return Err(RoutingError::SameEndpoints(src));
        }
        let hop_limit = self.ctx.topology.node_count();
        let mut path = vec![src];
        let mut current = src;
        let outcome = loop {
            if current == self.dst {
                break Outcome::Success;
            }
            if path.len() > hop_limit {
                break Outcome::Failure(FailureReason::HopLimit);
            }
            let Some(next) = self.next_hop(current) else {
                break Outcome::Failure(FailureReason::LocalMinimum);
            };
            // paths are short, so a linear scan beats a hash set here
            if path.contains(&next) {
                break Outcome::Failure(FailureReason::LocalMinimum);
            }
            path.push(next);
            current = next;
        };
        let delay_ms = (outcome == Outcome::Success).then(|| self.path_delay(&path));
        Ok(RouteResult {
            outcome,
            path,
            delay_ms,
        })
    }

    fn path_delay(&self, path: &[NodeId]) -> f64 {
        path.windows(2).rev().fold(0.0, |acc, hop| {
            acc + self
                .ctx
                .link_delay(hop[1], hop[0])
                .expect("consecutive path nodes are adjacent")
        })
    }

    /// Minimum summed link delay from `src` to the destination.
    pub fn shortest_delay(&self, src: NodeId) -> Option<f64> {
        if !self.ctx.topology.contains(src) {
            return None;
        }
        let mut search = self.search.borrow_mut();
        let search = search
            .get_or_insert_with(|| Search::new(self.ctx.topology.capacity(), self.dst));
        let d = search.settle(self.ctx, src);
        d.is_finite().then_some(d)
    }
}

/// One greedy walk on a fresh context with default options.
pub fn greedy_route(t: &Topology, src: NodeId, dst: NodeId) -> Result<RouteResult, RoutingError> {
    RoutingContext::new(t, RoutingOptions::default()).greedy_route(src, dst)
}

/// Minimum summed link delay between two nodes, `None` when disconnected.
pub fn shortest_delay_path(t: &Topology, src: NodeId, dst: NodeId) -> Result<Option<f64>, RoutingError> {
    RoutingContext::new(t, RoutingOptions::default()).shortest_delay_path(src, dst)
}

/// Delay of a hypothetical direct link between two nodes' geolocations.
pub fn underlay_delay(t: &Topology, src: NodeId, dst: NodeId) -> Result<f64, RoutingError> {
    for id in [src, dst] {
        if !t.contains(id) {
            return Err(RoutingError::NoSuchNode(id));
        }
    }
    Ok(pair_delay(t, &EarthConstants::STANDARD, src, dst))
}
