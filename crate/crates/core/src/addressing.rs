//! Zone tables, centrality ranks and radial coordinates, regions, and
//! per-scheme node addresses.
//!
//! A zone with centrality rank `t` sits at radius `ln(ξ + t)`. Under GH the
//! rank is the zone's position in the global descending-score order. Under
//! RGH the top `n_hubs` zones of every region share the ranks `1..=n_hubs`
//! (so the i-th hub of every region sits at the same radius) and every other
//! zone is ranked after them by global score.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, GeoPoint, HyperbolicPoint};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub String);

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ZoneId {
    fn from(s: &str) -> Self {
        ZoneId(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionId(pub String);

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RegionId {
    fn from(s: &str) -> Self {
        RegionId(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub zone_id: ZoneId,
    pub name: String,
    pub location: GeoPoint,
    /// Centrality score, at least 1. Population for city data.
    pub score: f64,
    pub region_id: Option<RegionId>,
}

#[derive(Debug, Error, PartialEq)]
pub enum AddressingError {
    #[error("zone table is empty")]
    EmptyTable,
    #[error("duplicate zone id {0}")]
    DuplicateZoneId(ZoneId),
    #[error("zone {zone} has score {score}, expected a finite value >= 1")]
    InvalidScore { zone: ZoneId, score: f64 },
    #[error("zone {0} has no region assignment")]
    MissingRegionAssignment(ZoneId),
    #[error("region {0} has no zones")]
    EmptyRegion(RegionId),
    #[error("cannot split {zones} zones into {regions} regions")]
    TooManyRegions { regions: usize, zones: usize },
    #[error("zone {0} has no rank assignment")]
    UnrankedZone(ZoneId),
    #[error("region file, line {line}: {message}")]
    ParseError { line: u64, message: String },
    #[error("region file, line {line}: unknown zone {zone}")]
    UnknownZone { line: u64, zone: ZoneId },
    #[error("zone {0} is not assigned to any region")]
    UnassignedZone(ZoneId),
}

/// Validated collection of zones with unique ids, kept in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZoneTable {
    zones: Vec<Zone>,
    index: HashMap<ZoneId, usize>,
}

impl ZoneTable {
    pub fn new(zones: Vec<Zone>) -> Result<Self, AddressingError> {
        let mut index = HashMap::with_capacity(zones.len());
        for (i, zone) in zones.iter().enumerate() {
            if !zone.score.is_finite() || zone.score < 1.0 {
                return Err(AddressingError::InvalidScore {
                    zone: zone.zone_id.clone(),
                    score: zone.score,
                });
            }
            if index.insert(zone.zone_id.clone(), i).is_some() {
                return Err(AddressingError::DuplicateZoneId(zone.zone_id.clone()));
            }
        }
        Ok(Self { zones, index })
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn get(&self, id: &ZoneId) -> Option<&Zone> {
        self.index.get(id).map(|&i| &self.zones[i])
    }

    pub fn contains(&self, id: &ZoneId) -> bool {
        self.index.contains_key(id)
    }

    /// Zones sorted by descending score, ties by ascending zone id.
    pub fn by_descending_score(&self) -> Vec<&Zone> {
        let mut sorted: Vec<&Zone> = self.zones.iter().collect();
        sorted.sort_by(|a, b| descending_score(a, b));
        sorted
    }

    /// Copies the region assignment of every zone from `regions`.
    pub fn assign_regions(&mut self, regions: &RegionMap) {
        for zone in &mut self.zones {
            zone.region_id = regions.region_of(&zone.zone_id).cloned();
        }
    }

    /// Keeps the `count` highest-scoring zones, preserving their relative order.
    pub fn top(&self, count: usize) -> ZoneTable {
        let zones = self
            .by_descending_score()
            .into_iter()
            .take(count)
            .cloned()
            .collect();
        ZoneTable::new(zones).expect("subset of a valid table is valid")
    }
}

fn descending_score(a: &Zone, b: &Zone) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.zone_id.cmp(&b.zone_id))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "GEO")]
    Geo,
    #[serde(rename = "GH")]
    Gh,
    #[serde(rename = "RGH")]
    Rgh,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Geo => "GEO",
            Scheme::Gh => "GH",
            Scheme::Rgh => "RGH",
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        !matches!(self, Scheme::Geo)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "GEO" => Ok(Scheme::Geo),
            "GH" => Ok(Scheme::Gh),
            "RGH" => Ok(Scheme::Rgh),
            other => Err(format!("unknown scheme {other:?}, expected GEO, GH or RGH")),
        }
    }
}

/// Parameters of an addressing scheme and the coupled design scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// ξ ≥ 0; the smallest radius is ln(ξ + 1).
    pub xi: f64,
    /// Links every arriving node establishes.
    pub m: usize,
    /// M, RGH only.
    pub num_regions: usize,
    /// N_hubs, RGH only.
    pub n_hubs: usize,
}

impl SchemeConfig {
    pub const DEFAULT_M: usize = 5;
    pub const DEFAULT_XI: f64 = 5.0;
    pub const DEFAULT_NUM_REGIONS: usize = 14;
    pub const DEFAULT_N_HUBS: usize = 5;

    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            xi: Self::DEFAULT_XI,
            m: Self::DEFAULT_M,
            num_regions: Self::DEFAULT_NUM_REGIONS,
            n_hubs: Self::DEFAULT_N_HUBS,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.xi.is_finite() || self.xi < 0.0 {
            return Err(format!("xi must be finite and >= 0, got {}", self.xi));
        }
        if self.m == 0 {
            return Err("m must be >= 1".into());
        }
        if self.num_regions == 0 {
            return Err("num_regions must be >= 1".into());
        }
        if self.n_hubs == 0 {
            return Err("n_hubs must be >= 1".into());
        }
        Ok(())
    }
}

/// Radius of a zone with centrality rank `rank` (1-based).
pub fn radial_coordinate(xi: f64, rank: usize) -> f64 {
    (xi + rank as f64).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankAssignment {
    pub zone_id: ZoneId,
    pub rank: usize,
    pub radial: f64,
}

/// Position of a zone in its region's hub list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hub {
    pub zone_id: ZoneId,
    pub region_id: RegionId,
    /// 1-based position in the region's hub list; equals the zone's rank.
    pub hub_index: usize,
}

/// Rank and radius of every zone in a table.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    xi: f64,
    assignments: Vec<RankAssignment>,
    index: HashMap<ZoneId, usize>,
    hubs: Vec<Hub>,
}

impl RankTable {
    fn from_parts(xi: f64, assignments: Vec<RankAssignment>, hubs: Vec<Hub>) -> Self {
        let index = assignments
            .iter()
            .enumerate()
            .map(|(i, a)| (a.zone_id.clone(), i))
            .collect();
        Self {
            xi,
            assignments,
            index,
            hubs,
        }
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Assignments in ascending rank order (hubs first, by hub index then
    /// region, under RGH).
    pub fn assignments(&self) -> &[RankAssignment] {
        &self.assignments
    }

    pub fn get(&self, zone: &ZoneId) -> Option<&RankAssignment> {
        self.index.get(zone).map(|&i| &self.assignments[i])
    }

    /// RGH hubs ordered by hub index, then region id. Empty under GH.
    pub fn hubs(&self) -> &[Hub] {
        &self.hubs
    }

    /// Stable text form used to compare tables across runs.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.assignments {
            out.push_str(&format!("{} {} {:e}\n", a.zone_id, a.rank, a.radial));
        }
        out
    }
}

/// GH ranking: 1-based position in the descending-score order.
pub fn rank_zones_gh(zones: &ZoneTable, xi: f64) -> Result<RankTable, AddressingError> {
    if zones.is_empty() {
        return Err(AddressingError::EmptyTable);
    }
    let assignments = zones
        .by_descending_score()
        .into_iter()
        .enumerate()
        .map(|(i, zone)| RankAssignment {
            zone_id: zone.zone_id.clone(),
            rank: i + 1,
            radial: radial_coordinate(xi, i + 1),
        })
        .collect();
    Ok(RankTable::from_parts(xi, assignments, Vec::new()))
}

/// RGH ranking. Regions with fewer than `n_hubs` zones contribute a shorter
/// hub list.
pub fn rank_zones_rgh(
    zones: &ZoneTable,
    regions: &RegionMap,
    xi: f64,
    n_hubs: usize,
) -> Result<RankTable, AddressingError> {
    if zones.is_empty() {
        return Err(AddressingError::EmptyTable);
    }
    let mut members: BTreeMap<&RegionId, Vec<&Zone>> = regions
        .region_ids()
        .map(|region| (region, Vec::new()))
        .collect();
    for zone in zones.zones() {
        let region = regions
            .region_of(&zone.zone_id)
            .ok_or_else(|| AddressingError::MissingRegionAssignment(zone.zone_id.clone()))?;
        members.entry(region).or_default().push(zone);
    }

    let mut hubs = Vec::new();
    for (region, list) in &mut members {
        if list.is_empty() {
            return Err(AddressingError::EmptyRegion((*region).clone()));
        }
        list.sort_by(|a, b| descending_score(a, b));
        for (i, zone) in list.iter().take(n_hubs).enumerate() {
            hubs.push(Hub {
                zone_id: zone.zone_id.clone(),
                region_id: (*region).clone(),
                hub_index: i + 1,
            });
        }
    }
    hubs.sort_by(|a, b| {
        a.hub_index
            .cmp(&b.hub_index)
            .then_with(|| a.region_id.cmp(&b.region_id))
    });

    let hub_set: HashMap<&ZoneId, usize> = hubs.iter().map(|h| (&h.zone_id, h.hub_index)).collect();
    let mut assignments: Vec<RankAssignment> = hubs
        .iter()
        .map(|h| RankAssignment {
            zone_id: h.zone_id.clone(),
            rank: h.hub_index,
            radial: radial_coordinate(xi, h.hub_index),
        })
        .collect();
    let residual = zones
        .by_descending_score()
        .into_iter()
        .filter(|z| !hub_set.contains_key(&z.zone_id));
    for (i, zone) in residual.enumerate() {
        let rank = n_hubs + i + 1;
        assignments.push(RankAssignment {
            zone_id: zone.zone_id.clone(),
            rank,
            radial: radial_coordinate(xi, rank),
        });
    }
    Ok(RankTable::from_parts(xi, assignments, hubs))
}

/// Scheme-tagged geometric address.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Address {
    Geo(GeoPoint),
    Hyper(HyperbolicPoint),
}

impl Address {
    pub fn angular(&self) -> GeoPoint {
        match self {
            Address::Geo(p) => *p,
            Address::Hyper(h) => h.angular(),
        }
    }

    pub fn radial(&self) -> Option<f64> {
        match self {
            Address::Geo(_) => None,
            Address::Hyper(h) => Some(h.r()),
        }
    }

    /// Scheme metric: great-circle kilometers for GEO, H³ distance otherwise.
    ///
    /// # Panics
    /// When the two addresses carry different tags.
    pub fn distance(&self, other: &Address) -> f64 {
        match (self, other) {
            (Address::Geo(a), Address::Geo(b)) => geometry::great_circle_km(*a, *b),
            (Address::Hyper(a), Address::Hyper(b)) => geometry::hyperbolic_distance(*a, *b),
            _ => panic!("distance between addresses of different schemes"),
        }
    }
}

pub fn address_of(
    zone: &Zone,
    ranks: Option<&RankTable>,
    scheme: Scheme,
) -> Result<Address, AddressingError> {
    if scheme == Scheme::Geo {
        return Ok(Address::Geo(zone.location));
    }
    let assignment = ranks
        .and_then(|r| r.get(&zone.zone_id))
        .ok_or_else(|| AddressingError::UnrankedZone(zone.zone_id.clone()))?;
    let point = HyperbolicPoint::new(assignment.radial, zone.location)
        .expect("radius from a valid rank is finite and non-negative");
    Ok(Address::Hyper(point))
}

/// Zone → region assignment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegionMap {
    assignment: BTreeMap<ZoneId, RegionId>,
}

impl RegionMap {
    pub fn new(assignment: BTreeMap<ZoneId, RegionId>) -> Self {
        Self { assignment }
    }

    pub fn region_of(&self, zone: &ZoneId) -> Option<&RegionId> {
        self.assignment.get(zone)
    }

    /// Distinct region ids in ascending order.
    pub fn region_ids(&self) -> impl Iterator<Item = &RegionId> {
        let mut ids: Vec<&RegionId> = self.assignment.values().collect();
        ids.sort();
        ids.dedup();
        ids.into_iter()
    }

    pub fn num_regions(&self) -> usize {
        self.region_ids().count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ZoneId, &RegionId)> {
        self.assignment.iter()
    }

    /// Region file contents: header plus one `zone_id,region_id` line per zone.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("zone_id,region_id\n");
        for (zone, region) in &self.assignment {
            out.push_str(&format!("{zone},{region}\n"));
        }
        out
    }
}

/// Splits zones into `num_regions` longitude bands of roughly equal total
/// score. Zones are swept eastward from longitude 0 (ties by zone id) and a
/// band is closed once the running score reaches the next multiple of
/// total/M. Every band gets at least one zone.
pub fn partition_regions(
    zones: &ZoneTable,
    num_regions: usize,
) -> Result<RegionMap, AddressingError> {
    if num_regions == 0 || num_regions > zones.len() {
        return Err(AddressingError::TooManyRegions {
            regions: num_regions,
            zones: zones.len(),
        });
    }
    let mut sorted: Vec<&Zone> = zones.zones().iter().collect();
    sorted.sort_by(|a, b| {
        a.location
            .phi()
            .total_cmp(&b.location.phi())
            .then_with(|| a.zone_id.cmp(&b.zone_id))
    });
    let total: f64 = sorted.iter().map(|z| z.score).sum();
    let width = num_regions.to_string().len().max(2);

    let mut assignment = BTreeMap::new();
    let mut current = 0usize;
    let mut accumulated = 0.0;
    for (i, zone) in sorted.iter().enumerate() {
        assignment.insert(
            zone.zone_id.clone(),
            RegionId(format!("R{:0width$}", current + 1)),
        );
        accumulated += zone.score;
        let zones_left = sorted.len() - i - 1;
        let regions_left = num_regions - 1 - current;
        if regions_left == 0 {
            continue;
        }
        let threshold = total * (current + 1) as f64 / num_regions as f64;
        if accumulated >= threshold || zones_left == regions_left {
            current += 1;
        }
    }
    Ok(RegionMap::new(assignment))
}

/// Reads a region file (`zone_id,region_id` with a header line). Every zone in
/// `zones` must be assigned and every listed zone must exist.
pub fn load_region_map<R: Read>(source: R, zones: &ZoneTable) -> Result<RegionMap, AddressingError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut assignment = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| AddressingError::ParseError {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 || record[0].is_empty() || record[1].is_empty() {
            return Err(AddressingError::ParseError {
                line,
                message: "expected zone_id,region_id".into(),
            });
        }
        let zone = ZoneId::from(&record[0]);
        if !zones.contains(&zone) {
            return Err(AddressingError::UnknownZone { line, zone });
        }
        if assignment.insert(zone.clone(), RegionId::from(&record[1])).is_some() {
            return Err(AddressingError::ParseError {
                line,
                message: format!("zone {zone} assigned twice"),
            });
        }
    }
    for zone in zones.zones() {
        if !assignment.contains_key(&zone.zone_id) {
            return Err(AddressingError::UnassignedZone(zone.zone_id.clone()));
        }
    }
    Ok(RegionMap::new(assignment))
}
