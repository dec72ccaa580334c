//! Success ratio and delay-stretch statistics over source–destination pairs.
//!
//! For a pair routed successfully, `d1` is the greedy path delay, `d2` the
//! shortest overlay delay and `d3` the delay of a hypothetical direct link;
//! ODS = d1/d2 and UDS = d1/d3. Pairs with no overlay path at all are kept
//! out of the SR denominator and counted in `disconnected_fraction`.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addressing::Scheme;
use crate::routing::{FailureReason, Outcome, RoutingContext, RoutingError, RoutingOptions};
use crate::topology::{NodeId, Topology};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("pair ensemble is empty")]
    EmptyEnsemble,
    #[error("need at least two present nodes, found {0}")]
    TooFewNodes(usize),
    #[error("cannot aggregate reports of different schemes or network sizes")]
    MixedSchemes,
    #[error("no reports to aggregate")]
    NoReports,
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairMode {
    AllPairs,
    /// Seeded uniform draw of distinct ordered pairs.
    Sampled { count: usize, seed: u64 },
}

/// Ordered `(src, dst)` pairs over the present nodes, in ascending order.
/// A sample at least as large as the number of ordered pairs is clamped to
/// all pairs.
pub fn pair_ensemble(t: &Topology, mode: PairMode) -> Result<Vec<(NodeId, NodeId)>, MetricsError> {
    let ids = t.node_ids();
    let n = ids.len();
    if n < 2 {
        return Err(MetricsError::TooFewNodes(n));
    }
    let total = n * (n - 1);
    let pair_at = |index: usize| {
        let src = index / (n - 1);
        let offset = index % (n - 1);
        let dst = if offset < src { offset } else { offset + 1 };
        (ids[src], ids[dst])
    };
    match mode {
        PairMode::Sampled { count, seed } if count < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = rand::seq::index::sample(&mut rng, total, count).into_vec();
            picked.sort_unstable();
            Ok(picked.into_iter().map(pair_at).collect())
        }
        _ => Ok((0..total).map(pair_at).collect()),
    }
}

/// Per-pair stretch values of successful routes, kept so that several
/// reports can be pooled.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StretchSamples {
    pub ods: Vec<f64>,
    pub uds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scheme: Scheme,
    /// Network size: node slots grown, removed nodes included.
    pub n: usize,
    pub scenario: String,
    /// Number of evaluated snapshots pooled into this report.
    pub trials: usize,
    pub pair_count: usize,
    pub connected_pairs: usize,
    pub successes: usize,
    pub disconnected_fraction: f64,
    pub sr: f64,
    pub ods_p50: Option<f64>,
    pub ods_p95: Option<f64>,
    pub uds_p50: Option<f64>,
    pub uds_p95: Option<f64>,
    pub seed: u64,
    /// How stretch percentiles of an aggregate were formed.
    pub percentile_method: String,
    #[serde(skip)]
    pub samples: StretchSamples,
    /// Greedy walks that hit the hop limit. Always zero unless routing is
    /// broken.
    pub hop_limit_hits: usize,
}

/// Nearest-rank percentile of an ascending slice: the value at 1-based rank
/// ⌈p/100 · N⌉.
pub fn nearest_rank_percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

const POOLED: &str = "pooled-nearest-rank";

impl MetricsReport {
    fn from_samples(
        scheme: Scheme,
        n: usize,
        pair_count: usize,
        connected_pairs: usize,
        successes: usize,
        hop_limit_hits: usize,
        samples: StretchSamples,
    ) -> Self {
        let ods = sorted(&samples.ods);
        let uds = sorted(&samples.uds);
        Self {
            scheme,
            n,
            scenario: "original".into(),
            trials: 1,
            pair_count,
            connected_pairs,
            successes,
            disconnected_fraction: (pair_count - connected_pairs) as f64 / pair_count as f64,
            // vacuously 1 when every pair is disconnected: no walk could fail
            sr: if connected_pairs == 0 {
                1.0
            } else {
                successes as f64 / connected_pairs as f64
            },
            ods_p50: nearest_rank_percentile(&ods, 50.0),
            ods_p95: nearest_rank_percentile(&ods, 95.0),
            uds_p50: nearest_rank_percentile(&uds, 50.0),
            uds_p95: nearest_rank_percentile(&uds, 95.0),
            seed: 0,
            percentile_method: POOLED.into(),
            samples,
            hop_limit_hits,
        }
    }
}

#[derive(Default)]
struct Tally {
    connected: usize,
    successes: usize,
    hop_limit_hits: usize,
    samples: StretchSamples,
}

/// Routes every pair on one snapshot. Pairs are grouped by destination and
/// the groups are evaluated in parallel; results are merged in destination
/// order, so the report does not depend on the thread count.
pub fn evaluate(
    t: &Topology,
    pairs: &[(NodeId, NodeId)],
    options: RoutingOptions,
) -> Result<MetricsReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyEnsemble);
    }
    let mut by_destination: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(src, dst) in pairs {
        for id in [src, dst] {
            if !t.contains(id) {
                return Err(RoutingError::NoSuchNode(id).into());
            }
        }
        by_destination.entry(dst).or_default().push(src);
    }
    let ctx = RoutingContext::new(t, options);
    let groups: Vec<(NodeId, Vec<NodeId>)> = by_destination.into_iter().collect();
    let tallies: Vec<Tally> = groups
        .par_iter()
        .map(|(dst, sources)| tally_destination(&ctx, *dst, sources))
        .collect::<Result<_, _>>()?;

    let mut total = Tally::default();
    for tally in tallies {
        total.connected += tally.connected;
        total.successes += tally.successes;
        total.hop_limit_hits += tally.hop_limit_hits;
        total.samples.ods.extend(tally.samples.ods);
        total.samples.uds.extend(tally.samples.uds);
    }
    Ok(MetricsReport::from_samples(
        t.scheme(),
        t.capacity(),
        pairs.len(),
        total.connected,
        total.successes,
        total.hop_limit_hits,
        total.samples,
    ))
}

fn tally_destination(
    ctx: &RoutingContext<'_>,
    dst: NodeId,
    sources: &[NodeId],
) -> Result<Tally, RoutingError> {
    let view = ctx.toward(dst)?;
    let mut tally = Tally::default();
    for &src in sources {
        let Some(d2) = view.shortest_delay(src) else {
            continue;
        };
        tally.connected += 1;
        let route = view.route(src)?;
        match route.outcome {
            Outcome::Success => {
                let d1 = route.delay_ms.expect("successful routes carry a delay");
                let d3 = ctx.underlay_delay(src, dst)?;
                tally.successes += 1;
                tally.samples.ods.push(d1 / d2);
                tally.samples.uds.push(d1 / d3);
            }
            Outcome::Failure(FailureReason::HopLimit) => tally.hop_limit_hits += 1,
            Outcome::Failure(_) => {}
        }
    }
    Ok(tally)
}

/// Combines reports of one scheme and size: SR and disconnected fraction are
/// unweighted means over reports, stretch percentiles come from the pooled
/// per-pair values.
pub fn aggregate(reports: &[MetricsReport]) -> Result<MetricsReport, MetricsError> {
    let first = reports.first().ok_or(MetricsError::NoReports)?;
    if reports
        .iter()
        .any(|r| r.scheme != first.scheme || r.n != first.n)
    {
        return Err(MetricsError::MixedSchemes);
    }
    if reports.len() == 1 {
        return Ok(first.clone());
    }
    let count = reports.len() as f64;
    let mut samples = StretchSamples::default();
    for r in reports {
        samples.ods.extend_from_slice(&r.samples.ods);
        samples.uds.extend_from_slice(&r.samples.uds);
    }
    let mut merged = MetricsReport::from_samples(
        first.scheme,
        first.n,
        reports.iter().map(|r| r.pair_count).sum(),
        reports.iter().map(|r| r.connected_pairs).sum(),
        reports.iter().map(|r| r.successes).sum(),
        reports.iter().map(|r| r.hop_limit_hits).sum(),
        samples,
    );
    merged.sr = reports.iter().map(|r| r.sr).sum::<f64>() / count;
    merged.disconnected_fraction =
        reports.iter().map(|r| r.disconnected_fraction).sum::<f64>() / count;
    merged.trials = reports.iter().map(|r| r.trials).sum();
    merged.scenario = first.scenario.clone();
    merged.seed = first.seed;
    Ok(merged)
}
