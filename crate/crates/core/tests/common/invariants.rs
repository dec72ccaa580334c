//! Invariant checks. Each returns `Err` with a description of the first
//! violation. Seeded checks draw their inputs from the seed, so proptest can
//! drive them and the acceptance run can replay fixed seeds.
// `!(a <= b)` is deliberate: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::collections::HashSet;

use geohyper::addressing::{
    partition_regions, radial_coordinate, rank_zones_gh, rank_zones_rgh, Address, RegionId,
    RegionMap, Scheme, SchemeConfig, ZoneTable,
};
use geohyper::geometry::{
    central_angle, great_circle_km, hyperbolic_distance, link_delay_ms, HyperbolicPoint,
};
use geohyper::harness::config::{PairModeConfig, ScenarioSpec};
use geohyper::harness::experiment::{plan_scheme, resolve_checkpoints};
use geohyper::harness::report::write_csv;
use geohyper::harness::run_experiment;
use geohyper::metrics::{evaluate, pair_ensemble, PairMode};
use geohyper::routing::{FailureReason, Outcome, RoutingContext, RoutingOptions};
use geohyper::topology::{
    apply_failure, degree_ccdf_slope, degree_sequence, enumerate_single_failures, grow,
    nearest_existing, FailureScenario, NodeId, Topology,
};
use rand::Rng;

use super::*;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// geometry

pub fn metric_axioms(seed: u64) -> Check {
    let mut rng = rng(seed);
    for _ in 0..200 {
        let (a, b, c) = (random_geo(&mut rng), random_geo(&mut rng), random_geo(&mut rng));
        let ab = central_angle(a, b);
        ensure!(ab == central_angle(b, a), "central angle asymmetric at {a:?} {b:?}");
        ensure!(central_angle(a, a) == 0.0, "central angle to self nonzero at {a:?}");
        let detour = central_angle(a, c) + central_angle(c, b);
        ensure!(ab <= detour + 1e-9, "triangle inequality fails: {ab} > {detour}");
        let (h, k) = (random_hyper(&mut rng, 12.0), random_hyper(&mut rng, 12.0));
        let hk = hyperbolic_distance(h, k);
        let kh = hyperbolic_distance(k, h);
        ensure!((hk - kh).abs() <= 1e-12 * hk.abs(), "hyperbolic distance asymmetric");
        ensure!(hyperbolic_distance(h, h) == 0.0, "hyperbolic distance to self nonzero");
    }
    Ok(())
}

pub fn hyperbolic_monotone_in_angle(seed: u64) -> Check {
    let mut rng = rng(seed);
    for _ in 0..20 {
        let ra = rng.random_range(0.01..12.0);
        let rb = rng.random_range(0.01..12.0);
        let mut previous = -1.0;
        for step in 0..=200 {
            let angle = std::f64::consts::PI * step as f64 / 200.0;
            let a = HyperbolicPoint::new(ra, GeoPoint::new(0.0, 0.0).unwrap()).unwrap();
            let b = HyperbolicPoint::new(rb, GeoPoint::new(angle, 0.0).unwrap()).unwrap();
            let d = hyperbolic_distance(a, b);
            ensure!(d > previous, "not increasing at angle {angle} for r = {ra}, {rb}");
            previous = d;
        }
    }
    Ok(())
}

pub fn delay_is_affine(seed: u64) -> Check {
    let mut rng = rng(seed);
    for _ in 0..200 {
        let (a, b) = (random_geo(&mut rng), random_geo(&mut rng));
        let delay = link_delay_ms(a, b);
        let expected = (great_circle_km(a, b) + 1165.0) / 49.0;
        ensure!(delay > 0.0, "non-positive delay");
        ensure!(
            (delay - expected).abs() <= 1e-12 * expected,
            "delay {delay} is not (km + 1165)/49 = {expected}"
        );
    }
    Ok(())
}

// addressing

fn random_table(rng: &mut ChaCha8Rng, count: usize) -> ZoneTable {
    let zones = (0..count)
        .map(|i| {
            let score = rng.random_range(1.0..1e6_f64).floor();
            zone_at(&format!("z{i:04}"), random_geo(rng), score)
        })
        .collect();
    ZoneTable::new(zones).unwrap()
}

pub fn radial_distribution_exact(seed: u64) -> Check {
    let mut rng = rng(seed);
    let q = rng.random_range(2..400);
    let xi = rng.random_range(0.0..10.0);
    let table = random_table(&mut rng, q);
    let ranks = rank_zones_gh(&table, xi).map_err(|e| e.to_string())?;
    for _ in 0..50 {
        let x: f64 = rng.random_range(0.0..8.0);
        let bound = x.exp() - xi;
        if (bound - bound.round()).abs() < 1e-9 {
            continue;
        }
        let expected = bound.floor().clamp(0.0, q as f64) as usize;
        let count = ranks.assignments().iter().filter(|a| a.radial <= x).count();
        ensure!(count == expected, "{count} radii <= {x}, expected {expected}");
    }
    for a in ranks.assignments() {
        ensure!(
            a.radial.to_bits() == radial_coordinate(xi, a.rank).to_bits(),
            "radial of {} drifted from ln(xi + rank)",
            a.zone_id
        );
    }
    Ok(())
}

pub fn rgh_hubs_and_reduction(seed: u64) -> Check {
    let mut rng = rng(seed);
    let q = rng.random_range(20..300);
    let xi = rng.random_range(0.0..10.0);
    let table = random_table(&mut rng, q);
    let m = rng.random_range(1..10);
    let hubs = rng.random_range(1..6);
    let regions = partition_regions(&table, m).map_err(|e| e.to_string())?;
    let ranks = rank_zones_rgh(&table, &regions, xi, hubs).map_err(|e| e.to_string())?;
    for a in ranks.assignments() {
        ensure!(
            a.radial.to_bits() == radial_coordinate(xi, a.rank).to_bits(),
            "RGH radial drift at {}",
            a.zone_id
        );
    }
    for h in ranks.hubs() {
        let a = ranks.get(&h.zone_id).unwrap();
        ensure!(a.rank == h.hub_index, "hub {} ranked {}", h.zone_id, a.rank);
        let first = ranks.hubs().iter().find(|o| o.hub_index == h.hub_index).unwrap();
        let other = ranks.get(&first.zone_id).unwrap();
        ensure!(a.radial == other.radial, "hubs at index {} differ in radius", h.hub_index);
    }
    ensure!(
        ranks.to_text() == rank_zones_rgh(&table, &regions, xi, hubs).unwrap().to_text(),
        "RGH ranking not deterministic"
    );

    let single = RegionMap::new(
        table
            .zones()
            .iter()
            .map(|z| (z.zone_id.clone(), RegionId("all".into())))
            .collect(),
    );
    let rgh = rank_zones_rgh(&table, &single, xi, q + rng.random_range(0..3)).unwrap();
    let gh = rank_zones_gh(&table, xi).unwrap();
    ensure!(rgh.assignments() == gh.assignments(), "RGH with one region differs from GH");
    ensure!(rgh.to_text() == gh.to_text(), "rank text differs");
    ensure!(gh.to_text() == rank_zones_gh(&table, xi).unwrap().to_text(), "GH not deterministic");
    Ok(())
}

// topology

fn random_grown(rng: &mut ChaCha8Rng, scheme: Scheme, n: usize, m: usize) -> Topology {
    let table = random_table(rng, n);
    let ranks = rank_zones_gh(&table, 5.0).unwrap();
    let config = SchemeConfig {
        m,
        ..SchemeConfig::new(scheme)
    };
    let ranks = (scheme != Scheme::Geo).then_some(&ranks);
    grow(table.zones().iter(), &config, ranks).unwrap()
}

pub fn growth_structure(seed: u64) -> Check {
    let mut rng = rng(seed);
    let n = rng.random_range(1..150);
    let m = rng.random_range(1..8);
    let scheme = [Scheme::Geo, Scheme::Gh][rng.random_range(0..2)];
    let table = random_table(&mut rng, n);
    let ranks = rank_zones_gh(&table, 5.0).unwrap();
    let mut t = Topology::new(scheme);
    for (i, zone) in table.zones().iter().enumerate() {
        let address = match scheme {
            Scheme::Geo => Address::Geo(zone.location),
            _ => geohyper::addressing::address_of(zone, Some(&ranks), scheme).unwrap(),
        };
        let expected_links = i.min(m);
        let before = t.edge_count();
        let id = t.add_node(zone.zone_id.clone(), address, m).unwrap();
        ensure!(
            t.degree(id) == expected_links && t.edge_count() == before + expected_links,
            "arrival {i} made {} links, expected {expected_links}",
            t.degree(id)
        );
        t.validate().map_err(|e| e.to_string())?;
    }
    let closed = n.min(m) * n.min(m).saturating_sub(1) / 2 + n.saturating_sub(m) * m;
    ensure!(t.edge_count() == closed, "{} edges, closed form {closed}", t.edge_count());
    Ok(())
}

pub fn nearest_matches_scan(seed: u64) -> Check {
    let mut rng = rng(seed);
    let n = rng.random_range(1..=200);
    let mut t = random_grown(&mut rng, Scheme::Gh, n, 5);
    if rng.random_bool(0.3) && t.node_count() > 1 {
        let victim = NodeId(rng.random_range(0..t.capacity()));
        t = apply_failure(&t, &FailureScenario::OneNode(victim)).unwrap();
    }
    for _ in 0..10 {
        let target = if rng.random_bool(0.3) {
            let id = NodeId(rng.random_range(0..t.capacity()));
            match t.node(id) {
                Some(node) => node.address,
                None => Address::Hyper(random_hyper(&mut rng, 12.0)),
            }
        } else {
            Address::Hyper(random_hyper(&mut rng, 12.0))
        };
        let m = rng.random_range(1..12);
        let fast = nearest_existing(&t, &target, m);
        let slow = linear_scan_nearest(&t, &target, m);
        ensure!(fast == slow, "nearest {fast:?} != scan {slow:?} (n = {n}, m = {m})");
    }
    Ok(())
}

pub fn failures_do_not_mutate(seed: u64) -> Check {
    let mut rng = rng(seed);
    let n = rng.random_range(2..120);
    let t = random_grown(&mut rng, Scheme::Gh, n, 3);
    let before = t.to_dump();
    let fraction = rng.random_range(0.0..0.9);
    let trial_seed = rng.random();
    let scenario = FailureScenario::RandomLinks {
        fraction,
        seed: trial_seed,
    };
    let a = apply_failure(&t, &scenario).map_err(|e| e.to_string())?;
    let b = apply_failure(&t, &scenario).map_err(|e| e.to_string())?;
    ensure!(t.to_dump() == before, "apply_failure changed its input");
    ensure!(a.to_dump() == b.to_dump(), "same seed gave different damage");
    a.validate().map_err(|e| e.to_string())?;
    for f in enumerate_single_failures(&t).into_iter().take(40) {
        let damaged = apply_failure(&t, &f).map_err(|e| e.to_string())?;
        damaged.validate().map_err(|e| e.to_string())?;
    }
    ensure!(t.to_dump() == before, "single failures changed their input");
    Ok(())
}

/// Average degree within 5% of 2m at n = 1000.
pub fn average_degree_near_2m() -> Check {
    let t = world_network(Scheme::Gh, 1000);
    let mean = 2.0 * t.edge_count() as f64 / t.node_count() as f64;
    let target = 2.0 * SchemeConfig::DEFAULT_M as f64;
    ensure!((mean - target).abs() <= 0.05 * target, "average degree {mean}");
    Ok(())
}

pub struct TailStats {
    pub max_degree: usize,
    pub mean_degree: f64,
    pub slope: Option<f64>,
}

pub fn tail_stats(t: &Topology) -> TailStats {
    let degrees = degree_sequence(t);
    let max_degree = *degrees.iter().max().unwrap();
    let mean_degree = degrees.iter().sum::<usize>() as f64 / degrees.len() as f64;
    let slope = degree_ccdf_slope(&degrees, 2 * SchemeConfig::DEFAULT_M, max_degree / 2);
    TailStats {
        max_degree,
        mean_degree,
        slope,
    }
}

/// GH at n = 2000: max degree above 10× mean, CCDF slope in [-1.5, -0.7].
pub fn gh_heavy_tail() -> Check {
    let s = tail_stats(world_network(Scheme::Gh, 2000));
    ensure!(
        s.max_degree as f64 > 10.0 * s.mean_degree,
        "max degree {} vs mean {}",
        s.max_degree,
        s.mean_degree
    );
    let slope = s.slope.ok_or("too few degrees to fit")?;
    ensure!((-1.5..=-0.7).contains(&slope), "CCDF slope {slope}");
    Ok(())
}

pub fn geo_degree_below_gh() -> Check {
    let geo = tail_stats(world_network(Scheme::Geo, 2000)).max_degree;
    let gh = tail_stats(world_network(Scheme::Gh, 2000)).max_degree;
    ensure!(geo < gh, "GEO max degree {geo} not below GH {gh}");
    Ok(())
}

// routing and metrics

/// Routes every pair of a small damaged network and checks path shape,
/// stretch bounds, determinism and the hop limit.
pub fn route_properties(seed: u64) -> Check {
    let mut rng = rng(seed);
    let scheme = [Scheme::Geo, Scheme::Gh, Scheme::Rgh][rng.random_range(0..3)];
    let n = rng.random_range(2..60);
    let m = rng.random_range(1..6);
    let mut t = random_grown(&mut rng, scheme, n, m);
    if rng.random_bool(0.5) {
        let scenario = FailureScenario::RandomLinks {
            fraction: rng.random_range(0.0..0.5),
            seed: rng.random(),
        };
        t = apply_failure(&t, &scenario).unwrap();
    }
    let strict = rng.random_bool(0.2);
    let options = RoutingOptions {
        strict_progress: strict,
        ..RoutingOptions::default()
    };
    let ctx = RoutingContext::new(&t, options);
    let again = RoutingContext::new(&t, options);
    for src in t.node_ids() {
        for dst in t.node_ids() {
            if src == dst {
                continue;
            }
            let r = ctx.greedy_route(src, dst).unwrap();
            ensure!(r == again.greedy_route(src, dst).unwrap(), "route not deterministic");
            let unique: HashSet<_> = r.path.iter().collect();
            ensure!(unique.len() == r.path.len(), "repeated node in {:?}", r.path);
            ensure!(r.path[0] == src, "path does not start at the source");
            for w in r.path.windows(2) {
                ensure!(t.has_edge(w[0], w[1]), "path uses missing link {w:?}");
            }
            ensure!(
                r.outcome != Outcome::Failure(FailureReason::HopLimit),
                "hop limit reached"
            );
            let d2 = ctx.shortest_delay_path(src, dst).unwrap();
            if r.is_success() {
                ensure!(*r.path.last().unwrap() == dst, "success away from the destination");
                let d1 = r.delay_ms.unwrap();
                let d2 = d2.ok_or("success on a disconnected pair")?;
                let d3 = ctx.underlay_delay(src, dst).unwrap();
                ensure!(d1 / d2 >= 1.0 - 1e-9, "ODS {} < 1", d1 / d2);
                ensure!(d1 / d3 >= 1.0 - 1e-9, "UDS {} < 1", d1 / d3);
                if r.hops() == 1 {
                    ensure!(d1 == d3, "single hop UDS is not exactly 1");
                }
            } else {
                ensure!(r.delay_ms.is_none(), "failure carries a delay");
            }
        }
    }
    Ok(())
}

pub fn complete_graph_one_hop(seed: u64) -> Check {
    let mut rng = rng(seed);
    let n = rng.random_range(2..25);
    let points: Vec<_> = (0..n).map(|_| random_geo(&mut rng)).collect();
    let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let t = geo_topology(&points, &edges);
    let ctx = RoutingContext::new(&t, RoutingOptions::default());
    for src in t.node_ids() {
        for dst in t.node_ids() {
            if src != dst {
                let r = ctx.greedy_route(src, dst).unwrap();
                ensure!(r.is_success() && r.hops() == 1, "{src}->{dst}: {:?}", r.path);
            }
        }
    }
    Ok(())
}

/// On small random graphs, a greedy path that is the unique shortest path
/// has ODS exactly 1.
pub fn coincident_paths_have_unit_ods(seed: u64) -> Check {
    let mut rng = rng(seed);
    let graphs = connected_graphs();
    for _ in 0..30 {
        let g = &graphs[rng.random_range(0..graphs.len())];
        let points: Vec<_> = (0..g.n).map(|_| random_geo(&mut rng)).collect();
        let t = geo_topology(&points, &g.edges());
        let ctx = RoutingContext::new(&t, RoutingOptions::default());
        let mut w = [[0.0; 8]; 8];
        for (i, j) in g.edges() {
            w[i][j] = ctx.link_delay(NodeId(i), NodeId(j)).unwrap();
            w[j][i] = w[i][j];
        }
        for src in 0..g.n {
            let best = brute_force_paths(g, &w, src);
            for dst in 0..g.n {
                if dst == src {
                    continue;
                }
                let r = ctx.greedy_route(NodeId(src), NodeId(dst)).unwrap();
                let greedy: Vec<usize> = r.path.iter().map(|id| id.index()).collect();
                if r.is_success() && greedy == best[dst].1 {
                    let d2 = ctx.shortest_delay_path(NodeId(src), NodeId(dst)).unwrap().unwrap();
                    ensure!(r.delay_ms.unwrap() / d2 == 1.0, "ODS {} on a shortest path", r.delay_ms.unwrap() / d2);
                }
            }
        }
    }
    Ok(())
}

pub fn report_bounds(seed: u64) -> Check {
    let mut rng = rng(seed);
    let n = rng.random_range(3..60);
    let t = random_grown(&mut rng, Scheme::Gh, n, 2);
    let t = apply_failure(
        &t,
        &FailureScenario::RandomLinks {
            fraction: 0.3,
            seed: rng.random(),
        },
    )
    .unwrap();
    let pairs = pair_ensemble(&t, PairMode::AllPairs).unwrap();
    let a = evaluate(&t, &pairs, RoutingOptions::default()).map_err(|e| e.to_string())?;
    let b = evaluate(&t, &pairs, RoutingOptions::default()).map_err(|e| e.to_string())?;
    ensure!(a == b, "evaluate is not repeatable");
    ensure!((0.0..=1.0).contains(&a.sr), "SR {}", a.sr);
    for (p50, p95) in [(a.ods_p50, a.ods_p95), (a.uds_p50, a.uds_p95)] {
        if let (Some(p50), Some(p95)) = (p50, p95) {
            ensure!(p50 >= 1.0 - 1e-9 && p95 >= p50, "percentiles {p50} {p95}");
        }
    }
    Ok(())
}

/// GH and RGH succeed at least as often as GEO on the undamaged world.
pub fn hyperbolic_sr_not_below_geo(n: usize) -> Check {
    let pairs_for = |t: &Topology| {
        pair_ensemble(t, PairMode::Sampled { count: 5000, seed: 11 }).unwrap()
    };
    let sr = |scheme| {
        let t = world_network(scheme, n);
        evaluate(t, &pairs_for(t), RoutingOptions::default()).unwrap().sr
    };
    let geo = sr(Scheme::Geo);
    for scheme in [Scheme::Gh, Scheme::Rgh] {
        let s = sr(scheme);
        ensure!(s >= geo, "{scheme} SR {s} below GEO {geo} at n = {n}");
    }
    Ok(())
}

// harness

fn small_config() -> ExperimentConfig {
    let spec = SyntheticZoneSpec::new(400, WORLD_PLACEMENT, 5);
    let mut config = ExperimentConfig::new(ZoneSource::Synthetic(spec), 99);
    config.num_regions = 4;
    config.n_hubs = 3;
    config.arrival_policy = ArrivalPolicyConfig::RandomizedProportional {
        seed: None,
        hubs_first: true,
    };
    config.checkpoints = Some(vec![60, 120]);
    config.scenarios = vec![
        ScenarioSpec::Original,
        ScenarioSpec::RandomLinks { fraction: 0.2, trials: 3 },
    ];
    config.pair_mode = PairModeConfig::Sampled(800);
    config
}

fn csv_of(config: &ExperimentConfig) -> Result<Vec<u8>, String> {
    let reports = run_experiment(config).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_csv(&reports, &mut buf).map_err(|e| e.to_string())?;
    Ok(buf)
}

/// Identical CSV bytes across reruns and thread counts.
pub fn experiment_determinism() -> Check {
    let config = small_config();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| csv_of(&config))?;
    let b = three.install(|| csv_of(&config))?;
    let c = csv_of(&config)?;
    ensure!(a == b && b == c, "CSV differs between runs");
    ensure!(
        String::from_utf8(a).unwrap().lines().count() == 1 + 3 * 2 * 2,
        "unexpected row count"
    );
    Ok(())
}

/// Snapshots taken during incremental growth equal growth from scratch, and
/// every RGH hub is present at the first checkpoint.
pub fn incremental_growth_and_hubs() -> Check {
    let config = small_config();
    let inputs = geohyper::harness::experiment::load_inputs(&config).map_err(|e| e.to_string())?;
    let checkpoints = resolve_checkpoints(&inputs, &config).map_err(|e| e.to_string())?;
    for scheme in [Scheme::Geo, Scheme::Gh, Scheme::Rgh] {
        let plan = plan_scheme(&inputs, &config, scheme, 120).map_err(|e| e.to_string())?;
        let mut t = Topology::new(scheme);
        for &n in &checkpoints {
            plan.extend(&mut t, n).map_err(|e| e.to_string())?;
            let fresh = grow(plan.arrivals[..n].iter().copied(), &plan.config, plan.ranks.as_ref())
                .map_err(|e| e.to_string())?;
            ensure!(t.to_dump() == fresh.to_dump(), "{scheme} snapshot at {n} differs");
        }
        if scheme == Scheme::Rgh {
            let ranks = plan.ranks.as_ref().unwrap();
            let present: HashSet<_> = plan.arrivals[..checkpoints[0]]
                .iter()
                .map(|z| z.zone_id.clone())
                .collect();
            ensure!(
                ranks.hubs().iter().all(|h| present.contains(&h.zone_id)),
                "hub missing at the first checkpoint"
            );
            ensure!(ranks.hubs().len() == 4 * 3, "expected 12 hubs");
        }
    }
    Ok(())
}

pub type SeededCheck = (&'static str, fn(u64) -> Check);

/// Seeded checks, by name.
pub const SEEDED: &[SeededCheck] = &[
    ("metric axioms", metric_axioms),
    ("hyperbolic distance monotone in angle", hyperbolic_monotone_in_angle),
    ("delay affine and positive", delay_is_affine),
    ("radial distribution and consistency", radial_distribution_exact),
    ("RGH hub equality and reduction to GH", rgh_hubs_and_reduction),
    ("growth structure and edge count", growth_structure),
    ("nearest_existing equals linear scan", nearest_matches_scan),
    ("failures leave input intact", failures_do_not_mutate),
    ("route properties", route_properties),
    ("complete graph routes in one hop", complete_graph_one_hop),
    ("unit ODS on shortest greedy paths", coincident_paths_have_unit_ods),
    ("report bounds and purity", report_bounds),
];

/// Checks on fixed networks, by name.
pub fn fixed() -> Vec<(&'static str, Check)> {
    vec![
        ("average degree near 2m", average_degree_near_2m()),
        ("GH degree heavy tail", gh_heavy_tail()),
        ("GEO max degree below GH", geo_degree_below_gh()),
        ("GH/RGH SR >= GEO at n = 500", hyperbolic_sr_not_below_geo(500)),
        ("GH/RGH SR >= GEO at n = 2000", hyperbolic_sr_not_below_geo(2000)),
        ("experiment determinism", experiment_determinism()),
        ("incremental growth and hub rule", incremental_growth_and_hubs()),
    ]
}
