//! Metric and delay computations on the unit sphere and in three-dimensional
//! hyperbolic space (curvature −1).
//!
//! Angles are radians everywhere inside the crate. Degrees appear only at
//! ingestion ([`GeoPoint::from_degrees`]) and in human-facing output.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// Point on the unit sphere: colatitude `theta` ∈ [0, π] measured from the
/// north pole and longitude `phi` ∈ [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    theta: f64,
    phi: f64,
}

impl GeoPoint {
    /// Builds a point from colatitude and longitude in radians. `phi` is
    /// wrapped into [0, 2π); `theta` must already lie in [0, π].
    pub fn new(theta: f64, phi: f64) -> Option<Self> {
        if !theta.is_finite() || !phi.is_finite() || !(0.0..=PI).contains(&theta) {
            return None;
        }
        Some(Self {
            theta,
            phi: normalize_longitude(phi),
        })
    }

    /// Converts geographic latitude/longitude in degrees. Latitude must be in
    /// [−90, 90]; longitude may be any finite value.
    pub fn from_degrees(latitude_deg: f64, longitude_deg: f64) -> Option<Self> {
        if !latitude_deg.is_finite() || !(-90.0..=90.0).contains(&latitude_deg) {
            return None;
        }
        let theta = (PI / 2.0 - latitude_deg.to_radians()).clamp(0.0, PI);
        Self::new(theta, longitude_deg.to_radians())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn latitude_deg(&self) -> f64 {
        (PI / 2.0 - self.theta).to_degrees()
    }

    /// Longitude in degrees, in (−180, 180].
    pub fn longitude_deg(&self) -> f64 {
        let deg = self.phi.to_degrees();
        if deg > 180.0 {
            deg - 360.0
        } else {
            deg
        }
    }
}

fn normalize_longitude(phi: f64) -> f64 {
    let wrapped = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Point in H³ given in spherical coordinates: radius `r` ≥ 0 plus the
/// geographic angular part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicPoint {
    r: f64,
    angular: GeoPoint,
}

impl HyperbolicPoint {
    pub fn new(r: f64, angular: GeoPoint) -> Option<Self> {
        if !r.is_finite() || r < 0.0 {
            return None;
        }
        Some(Self { r, angular })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn angular(&self) -> GeoPoint {
        self.angular
    }
}

/// Earth radius and the affine distance-to-delay model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthConstants {
    pub earth_radius_km: f64,
    pub delay_offset_km: f64,
    pub delay_divisor: f64,
}

impl EarthConstants {
    pub const STANDARD: EarthConstants = EarthConstants {
        earth_radius_km: EARTH_RADIUS_KM,
        delay_offset_km: DELAY_OFFSET_KM,
        delay_divisor: DELAY_DIVISOR,
    };

    pub fn is_standard(&self) -> bool {
        *self == Self::STANDARD
    }

    pub fn great_circle_km(&self, a: GeoPoint, b: GeoPoint) -> f64 {
        self.earth_radius_km * central_angle(a, b)
    }

    pub fn link_delay_ms(&self, a: GeoPoint, b: GeoPoint) -> f64 {
        self.delay_for_angle(central_angle(a, b))
    }

    /// Delay of a direct link spanning the given central angle.
    pub fn delay_for_angle(&self, central_angle: f64) -> f64 {
        (self.earth_radius_km * central_angle + self.delay_offset_km) / self.delay_divisor
    }
}

impl Default for EarthConstants {
    fn default() -> Self {
        Self::STANDARD
    }
}

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const DELAY_OFFSET_KM: f64 = 1165.0;
pub const DELAY_DIVISOR: f64 = 49.0;

/// Central angle between two points on the sphere, in [0, π].
///
/// Arguments are put in a canonical order first, so the result is bitwise
/// symmetric.
pub fn central_angle(a: GeoPoint, b: GeoPoint) -> f64 {
    PreparedPoint::geo(a).central_angle(&PreparedPoint::geo(b))
}

/// Great-circle distance in kilometers on a sphere of radius 6371 km.
pub fn great_circle_km(a: GeoPoint, b: GeoPoint) -> f64 {
    EarthConstants::STANDARD.great_circle_km(a, b)
}

/// Hyperbolic distance in H³ between two points given in spherical
/// coordinates. Bitwise symmetric, and exactly zero for identical points.
pub fn hyperbolic_distance(a: HyperbolicPoint, b: HyperbolicPoint) -> f64 {
    PreparedPoint::hyper(a).hyperbolic_distance(&PreparedPoint::hyper(b))
}

/// A point with its trigonometric terms cached. Distances computed from
/// prepared points are bitwise identical to [`central_angle`] and
/// [`hyperbolic_distance`], which are implemented on top of them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparedPoint {
    r: f64,
    cosh_r: f64,
    sinh_r: f64,
    theta: f64,
    cos_theta: f64,
    sin_theta: f64,
    phi: f64,
}

impl PreparedPoint {
    /// Point on the sphere; treated as radius 0 by [`Self::hyperbolic_distance`].
    pub fn geo(p: GeoPoint) -> Self {
        Self::with_radius(0.0, p)
    }

    pub fn hyper(h: HyperbolicPoint) -> Self {
        Self::with_radius(h.r, h.angular)
    }

    fn with_radius(r: f64, p: GeoPoint) -> Self {
        Self {
            r,
            cosh_r: r.cosh(),
            sinh_r: r.sinh(),
            theta: p.theta,
            cos_theta: p.theta.cos(),
            sin_theta: p.theta.sin(),
            phi: p.phi,
        }
    }

    fn angular_cmp(&self, other: &Self) -> Ordering {
        self.theta
            .total_cmp(&other.theta)
            .then(self.phi.total_cmp(&other.phi))
    }

    fn same_angular(&self, other: &Self) -> bool {
        self.theta == other.theta && self.phi == other.phi
    }

    pub fn central_angle(&self, other: &Self) -> f64 {
        let (a, b) = if self.angular_cmp(other) == Ordering::Greater {
            (other, self)
        } else {
            (self, other)
        };
        if a.same_angular(b) {
            return 0.0;
        }
        let cos_angle =
            a.cos_theta * b.cos_theta + a.sin_theta * b.sin_theta * (a.phi - b.phi).cos();
        cos_angle.clamp(-1.0, 1.0).acos()
    }

    pub fn hyperbolic_distance(&self, other: &Self) -> f64 {
        let (a, b) = match self.r.total_cmp(&other.r).then(self.angular_cmp(other)) {
            Ordering::Greater => (other, self),
            _ => (self, other),
        };
        if a.r == b.r && a.same_angular(b) {
            return 0.0;
        }
        let cosh_d = a.cosh_r * b.cosh_r - a.sinh_r * b.sinh_r * a.central_angle(b).cos();
        cosh_d.max(1.0).acosh()
    }
}

/// Estimated one-way delay in milliseconds of a direct link between two
/// geolocations: `(km + 1165) / 49`.
pub fn link_delay_ms(a: GeoPoint, b: GeoPoint) -> f64 {
    EarthConstants::STANDARD.link_delay_ms(a, b)
}
