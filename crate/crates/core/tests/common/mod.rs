//! Shared oracles, fixtures and invariant checks for the integration tests.
#![allow(dead_code)]

pub mod invariants;

use std::f64::consts::PI;
use std::sync::OnceLock;

use geohyper::addressing::{Address, Scheme, Zone, ZoneId};
use geohyper::geometry::{GeoPoint, HyperbolicPoint};
use geohyper::harness::config::{ArrivalPolicyConfig, ExperimentConfig, ZoneSource};
use geohyper::harness::experiment::{load_inputs, plan_scheme, Inputs};
use geohyper::harness::{Placement, SyntheticZoneSpec};
use geohyper::topology::{NodeId, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_geo(rng: &mut ChaCha8Rng) -> GeoPoint {
    let cos_theta: f64 = rng.random_range(-1.0..=1.0);
    GeoPoint::new(cos_theta.acos(), rng.random_range(0.0..2.0 * PI)).unwrap()
}

pub fn random_hyper(rng: &mut ChaCha8Rng, max_r: f64) -> HyperbolicPoint {
    HyperbolicPoint::new(rng.random_range(0.0..max_r), random_geo(rng)).unwrap()
}

pub fn zone_at(id: &str, location: GeoPoint, score: f64) -> Zone {
    Zone {
        zone_id: ZoneId(id.to_owned()),
        name: id.to_owned(),
        location,
        score,
        region_id: None,
    }
}

/// GEO topology over the given points and edges.
pub fn geo_topology(points: &[GeoPoint], edges: &[(usize, usize)]) -> Topology {
    let nodes = points
        .iter()
        .enumerate()
        .map(|(i, &p)| Some((ZoneId(format!("n{i}")), Address::Geo(p))))
        .collect();
    let edges: Vec<_> = edges.iter().map(|&(a, b)| (NodeId(a), NodeId(b))).collect();
    Topology::from_parts(Scheme::Geo, nodes, &edges).unwrap()
}

/// Reference k-nearest selection: full sort of every present node by the
/// plain address distance, ties by id.
pub fn linear_scan_nearest(t: &Topology, target: &Address, m: usize) -> Vec<NodeId> {
    let mut all: Vec<(f64, NodeId)> = t
        .nodes()
        .map(|n| (n.address.distance(target), n.id))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(m).map(|(_, id)| id).collect()
}

/// A small unlabeled graph: node count and adjacency bitmasks.
#[derive(Debug, Clone)]
pub struct SmallGraph {
    pub n: usize,
    pub adj: [u8; 8],
}

impl SmallGraph {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.adj[i] & (1 << j) != 0 {
                    edges.push((i, j));
                }
            }
        }
        edges
    }
}

/// Every connected graph on 1 to 8 nodes, one per isomorphism class.
pub fn connected_graphs() -> &'static [SmallGraph] {
    static GRAPHS: OnceLock<Vec<SmallGraph>> = OnceLock::new();
    GRAPHS.get_or_init(|| {
        include_str!("../data/connected_graphs.txt")
            .lines()
            .map(|line| {
                let (n, mask) = line.split_once(' ').unwrap();
                let n: usize = n.parse().unwrap();
                let mask = u32::from_str_radix(mask, 16).unwrap();
                let mut adj = [0u8; 8];
                let mut bit = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        if mask & (1 << bit) != 0 {
                            adj[i] |= 1 << j;
                            adj[j] |= 1 << i;
                        }
                        bit += 1;
                    }
                }
                SmallGraph { n, adj }
            })
            .collect()
    })
}

/// Minimum over every simple path from `src` of the summed weights, per
/// target, with the minimizing path. Exhaustive depth-first enumeration.
pub fn brute_force_paths(g: &SmallGraph, w: &[[f64; 8]; 8], src: usize) -> Vec<(f64, Vec<usize>)> {
    fn walk(
        g: &SmallGraph,
        w: &[[f64; 8]; 8],
        path: &mut Vec<usize>,
        visited: u8,
        length: f64,
        best: &mut Vec<(f64, Vec<usize>)>,
    ) {
        let u = *path.last().unwrap();
        for v in 0..g.n {
            if g.adj[u] & (1 << v) == 0 || visited & (1 << v) != 0 {
                continue;
            }
            let d = length + w[u][v];
            path.push(v);
            if d < best[v].0 {
                best[v] = (d, path.clone());
            }
            walk(g, w, path, visited | (1 << v), d, best);
            path.pop();
        }
    }
    let mut best = vec![(f64::INFINITY, Vec::new()); g.n];
    best[src] = (0.0, vec![src]);
    walk(g, w, &mut vec![src], 1 << src, 0.0, &mut best);
    best
}

/// Zone law used by the scaled experiments: Zipf scores over 10⁴ zones,
/// clustered placement standing in for the uneven geography of real cities.
pub const WORLD_ZONES: usize = 10_000;
pub const WORLD_PLACEMENT: Placement = Placement::Clustered {
    clusters: 200,
    spread_deg: 5.0,
};
pub const WORLD_SEED: u64 = 2017;

/// Main growth order: one node per zone in decreasing score order.
pub fn world_config() -> ExperimentConfig {
    let spec = SyntheticZoneSpec::new(WORLD_ZONES, WORLD_PLACEMENT, WORLD_SEED);
    ExperimentConfig::new(ZoneSource::Synthetic(spec), WORLD_SEED)
}

/// Score-proportional random arrivals after the RGH hubs.
pub fn world_randomized_config() -> ExperimentConfig {
    let mut config = world_config();
    config.arrival_policy = ArrivalPolicyConfig::RandomizedProportional {
        seed: None,
        hubs_first: true,
    };
    config
}

pub fn world_inputs() -> &'static Inputs {
    static INPUTS: OnceLock<Inputs> = OnceLock::new();
    INPUTS.get_or_init(|| load_inputs(&world_config()).unwrap())
}

/// Scheme network of the world grown to `n` nodes in the main order.
pub fn world_network(scheme: Scheme, n: usize) -> &'static Topology {
    cached_network(scheme, n, false)
}

/// RGH network grown to `n` nodes with randomized arrivals.
pub fn world_randomized_rgh(n: usize) -> &'static Topology {
    cached_network(Scheme::Rgh, n, true)
}

type NetworkCache = std::sync::Mutex<Vec<((Scheme, usize, bool), &'static Topology)>>;

fn cached_network(scheme: Scheme, n: usize, randomized: bool) -> &'static Topology {
    static CACHE: OnceLock<NetworkCache> = OnceLock::new();
    let key = (scheme, n, randomized);
    let mut entries = CACHE.get_or_init(Default::default).lock().unwrap();
    if let Some(&(_, t)) = entries.iter().find(|(k, _)| *k == key) {
        return t;
    }
    let config = match randomized {
        true => world_randomized_config(),
        false => world_config(),
    };
    let plan = plan_scheme(world_inputs(), &config, scheme, n).unwrap();
    let t: &'static Topology = Box::leak(Box::new(plan.grow(n).unwrap()));
    entries.push((key, t));
    t
}
