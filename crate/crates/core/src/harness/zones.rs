//! Zone ingestion and synthetic zone tables.
//!
//! Zone files are CSV with the header
//! `zone_id,name,latitude_deg,longitude_deg,population`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::addressing::{Zone, ZoneId, ZoneTable};
use crate::geometry::GeoPoint;

const HEADER: [&str; 5] = ["zone_id", "name", "latitude_deg", "longitude_deg", "population"];

/// Reads a zone file. Line numbers in errors are 1-based file lines.
pub fn read_zones<R: Read>(source: R) -> Result<ZoneTable, HarnessError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut zones = Vec::new();
    let mut seen = HashSet::new();
    let mut header_seen = false;
    for record in reader.records() {
        let record = record.map_err(|e| HarnessError::ZoneParse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if !header_seen {
            header_seen = true;
            if record.iter().ne(HEADER) {
                return Err(HarnessError::ZoneParse {
                    line,
                    message: format!("expected header {}", HEADER.join(",")),
                });
            }
            continue;
        }
        if record.len() != HEADER.len() {
            return Err(HarnessError::ZoneParse {
                line,
                message: format!("expected {} fields, found {}", HEADER.len(), record.len()),
            });
        }
        let zone_id = &record[0];
        if zone_id.is_empty() || zone_id.contains(char::is_whitespace) {
            return Err(HarnessError::ZoneParse {
                line,
                message: format!("zone id {zone_id:?} is empty or contains whitespace"),
            });
        }
        let number = |field: usize| -> Result<f64, HarnessError> {
            record[field].parse::<f64>().map_err(|_| HarnessError::ZoneParse {
                line,
                message: format!("{} {:?} is not a number", HEADER[field], &record[field]),
            })
        };
        let latitude = number(2)?;
        let longitude = number(3)?;
        let population = number(4)?;
        if !(-90.0..=90.0).contains(&latitude) {
            return Err(HarnessError::InvalidLatitude { line, value: latitude });
        }
        if !(-180.0..=360.0).contains(&longitude) {
            return Err(HarnessError::InvalidLongitude { line, value: longitude });
        }
        if !population.is_finite() || population < 1.0 {
            return Err(HarnessError::InvalidPopulation { line, value: population });
        }
        if !seen.insert(zone_id.to_owned()) {
            return Err(HarnessError::DuplicateZoneId {
                line,
                zone: zone_id.into(),
            });
        }
        zones.push(Zone {
            zone_id: zone_id.into(),
            name: record[1].to_owned(),
            location: GeoPoint::from_degrees(latitude, longitude)
                .expect("validated latitude and longitude"),
            score: population,
            region_id: None,
        });
    }
    Ok(ZoneTable::new(zones)?)
}

pub fn load_zones(path: &std::path::Path) -> Result<ZoneTable, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_zones(std::io::BufReader::new(file))
}

/// Writes a zone table in the zone-file format. Coordinates use the shortest
/// representation that parses back to the same degrees.
pub fn write_zones<W: Write>(zones: &ZoneTable, out: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(HEADER)?;
    for zone in zones.zones() {
        writer.write_record([
            zone.zone_id.0.as_str(),
            zone.name.as_str(),
            &format!("{:?}", zone.location.latitude_deg()),
            &format!("{:?}", zone.location.longitude_deg()),
            &format!("{}", zone.score),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Placement {
    /// Area-uniform on the sphere.
    Uniform,
    /// Zones scattered around `clusters` area-uniform centers with a
    /// half-normal angular offset of scale `spread_deg`.
    Clustered { clusters: usize, spread_deg: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticZoneSpec {
    pub count: usize,
    pub placement: Placement,
    pub seed: u64,
    /// S in s_t = ⌈S/t⌉; raised to `count` when smaller so every score is
    /// at least 1.
    #[serde(default)]
    pub top_score: Option<f64>,
}

impl SyntheticZoneSpec {
    pub fn new(count: usize, placement: Placement, seed: u64) -> Self {
        Self {
            count,
            placement,
            seed,
            top_score: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.count < 2 {
            return Err(format!("synthetic zone count must be >= 2, got {}", self.count));
        }
        if let Some(s) = self.top_score {
            if !s.is_finite() || s < 1.0 {
                return Err(format!("top_score must be finite and >= 1, got {s}"));
            }
        }
        if let Placement::Clustered { clusters, spread_deg } = self.placement {
            if clusters == 0 {
                return Err("clustered placement needs at least one cluster".into());
            }
            if !spread_deg.is_finite() || spread_deg < 0.0 {
                return Err(format!("spread_deg must be finite and >= 0, got {spread_deg}"));
            }
        }
        Ok(())
    }
}

/// Zipf-scored zones, rank t scoring ⌈S/t⌉. Zone ids are `z` plus the
/// zero-padded rank, so id order equals rank order.
///
/// # Panics
/// On a spec rejected by [`SyntheticZoneSpec::validate`].
pub fn synth_zones(spec: &SyntheticZoneSpec) -> ZoneTable {
    if let Err(e) = spec.validate() {
        panic!("invalid synthetic zone spec: {e}");
    }
    let q = spec.count;
    let top = spec.top_score.unwrap_or(0.0).max(q as f64);
    let width = q.to_string().len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut place: Box<dyn FnMut(&mut ChaCha8Rng) -> GeoPoint> = match spec.placement {
        Placement::Uniform => Box::new(uniform_point),
        Placement::Clustered { clusters, spread_deg } => {
            let centers: Vec<GeoPoint> = (0..clusters).map(|_| uniform_point(&mut rng)).collect();
            let spread = Normal::new(0.0, spread_deg.to_radians()).expect("finite spread");
            Box::new(move |rng: &mut ChaCha8Rng| {
                let center = centers[rng.random_range(0..centers.len())];
                let distance: f64 = spread.sample(rng);
                let bearing = rng.random_range(0.0..2.0 * PI);
                offset(center, distance.abs(), bearing)
            })
        }
    };
    let zones = (1..=q)
        .map(|t| Zone {
            zone_id: ZoneId(format!("z{t:0width$}")),
            name: format!("synthetic-{t}"),
            location: place(&mut rng),
            score: (top / t as f64).ceil(),
            region_id: None,
        })
        .collect();
    ZoneTable::new(zones).expect("synthetic zones have unique ids and scores >= 1")
}

fn uniform_point(rng: &mut ChaCha8Rng) -> GeoPoint {
    let cos_theta: f64 = rng.random_range(-1.0..=1.0);
    let phi = rng.random_range(0.0..2.0 * PI);
    GeoPoint::new(cos_theta.acos(), phi).expect("acos lies in [0, pi]")
}

/// Destination after travelling `distance` radians from `start` along the
/// initial bearing `bearing` (clockwise from north).
fn offset(start: GeoPoint, distance: f64, bearing: f64) -> GeoPoint {
    let lat1 = PI / 2.0 - start.theta();
    let lon1 = start.phi();
    let sin_lat2 =
        lat1.sin() * distance.cos() + lat1.cos() * distance.sin() * bearing.cos();
    let lat2 = sin_lat2.clamp(-1.0, 1.0).asin();
    let lon2 = lon1
        + (bearing.sin() * distance.sin() * lat1.cos())
            .atan2(distance.cos() - lat1.sin() * sin_lat2);
    GeoPoint::new((PI / 2.0 - lat2).clamp(0.0, PI), lon2).expect("finite coordinates")
}
