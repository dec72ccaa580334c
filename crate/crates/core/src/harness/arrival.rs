//! Node arrival orders.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::addressing::{RankTable, Zone, ZoneId, ZoneTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalPolicy {
    /// Descending score, ties by zone id.
    DeterministicRank,
    /// Draws without replacement, each pick proportional to score. With
    /// `hubs_first`, the hub zones of the rank table arrive first.
    RandomizedProportional { seed: u64, hubs_first: bool },
}

/// Every zone exactly once, in arrival order. `ranks` supplies hubs for
/// `hubs_first`; tables without hubs put nothing first.
pub fn arrival_order<'a>(
    zones: &'a ZoneTable,
    ranks: Option<&RankTable>,
    policy: &ArrivalPolicy,
) -> Vec<&'a Zone> {
    match *policy {
        ArrivalPolicy::DeterministicRank => zones.by_descending_score(),
        ArrivalPolicy::RandomizedProportional { seed, hubs_first } => {
            let mut order = Vec::with_capacity(zones.len());
            let mut placed: HashSet<&ZoneId> = HashSet::new();
            if hubs_first {
                for hub in ranks.map(|r| r.hubs()).unwrap_or_default() {
                    if let Some(zone) = zones.get(&hub.zone_id) {
                        if placed.insert(&zone.zone_id) {
                            order.push(zone);
                        }
                    }
                }
            }
            // Sequential proportional draws without replacement have the same
            // law as sorting by the key ln(u)/w, descending.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut keyed: Vec<(f64, &Zone)> = zones
                .zones()
                .iter()
                .map(|zone| {
                    let u: f64 = 1.0 - rng.random::<f64>();
                    (u.ln() / zone.score, zone)
                })
                .filter(|(_, zone)| !placed.contains(&zone.zone_id))
                .collect();
            keyed.sort_by(|a, b| match b.0.total_cmp(&a.0) {
                Ordering::Equal => a.1.zone_id.cmp(&b.1.zone_id),
                other => other,
            });
            order.extend(keyed.into_iter().map(|(_, zone)| zone));
            order
        }
    }
}

/// Stress-test arrivals that may revisit zones: `count` independent draws
/// proportional to score, after the hubs when `hubs_first` applies.
pub fn arrival_with_repeats<'a>(
    zones: &'a ZoneTable,
    ranks: Option<&RankTable>,
    count: usize,
    seed: u64,
    hubs_first: bool,
) -> Vec<&'a Zone> {
    let mut order: Vec<&Zone> = Vec::with_capacity(count);
    if hubs_first {
        for hub in ranks.map(|r| r.hubs()).unwrap_or_default() {
            if let Some(zone) = zones.get(&hub.zone_id) {
                order.push(zone);
            }
        }
    }
    order.truncate(count);
    let weights = WeightedIndex::new(zones.zones().iter().map(|z| z.score))
        .expect("scores are finite and >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while order.len() < count {
        order.push(&zones.zones()[weights.sample(&mut rng)]);
    }
    order
}

/// Number of arrivals after which every hub of `ranks` is present, or `None`
/// when some hub never arrives.
pub fn hub_complete_size(order: &[&Zone], ranks: &RankTable) -> Option<usize> {
    let mut missing: HashSet<&ZoneId> = ranks.hubs().iter().map(|h| &h.zone_id).collect();
    if missing.is_empty() {
        return Some(0);
    }
    for (i, zone) in order.iter().enumerate() {
        missing.remove(&zone.zone_id);
        if missing.is_empty() {
            return Some(i + 1);
        }
    }
    None
}
