//! Great-circle geometry, source assignment, and distance binning.
//!
//! Distances are great-circle kilometres on a sphere of radius
//! [`EARTH_RADIUS_KM`]. Exposure aggregates inverse-square contributions of
//! weighted sources; a point sitting exactly on a source is clamped to
//! [`MIN_DISTANCE_KM`] so that inverse-square weights stay finite.
//!
//! All aggregations iterate sources in `source_id` order regardless of input
//! order, so results are bitwise reproducible and independent of how callers
//! shard or parallelise their data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in kilometres used for every great-circle distance.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Smallest admissible point-to-source distance in kilometres. Shorter
/// distances are clamped here and flagged on the assignment.
pub const MIN_DISTANCE_KM: f64 = 0.1;

/// A validated geographic coordinate in decimal degrees.
///
/// Latitude lies in [-90, 90], longitude in [-180, 180], both finite.
/// Construction is the only validation point; downstream code may assume
/// the invariants hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeoPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct RawGeoPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawGeoPoint> for GeoPoint {
    type Error = Error;

    fn try_from(raw: RawGeoPoint) -> Result<Self> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl GeoPoint {
    /// Validates ranges and builds a point.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::Input(format!(
                "coordinates must be finite, got ({lat}, {lon})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::Input(format!("latitude {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::Input(format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// An axis-aligned latitude/longitude rectangle.
///
/// Both extents must be strictly positive (no degenerate boxes) and the
/// corners must be valid coordinates. Boxes never wrap the antimeridian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBoundingBox")]
pub struct BoundingBox {
    lat_min: f64,
    lat_max: f64,
    lon_min: f64,
    lon_max: f64,
}

#[derive(Deserialize)]
struct RawBoundingBox {
    lat_min: f64,
    lat_max: f64,
    lon_min: f64,
    lon_max: f64,
}

impl TryFrom<RawBoundingBox> for BoundingBox {
    type Error = Error;

    fn try_from(raw: RawBoundingBox) -> Result<Self> {
        BoundingBox::new(raw.lat_min, raw.lat_max, raw.lon_min, raw.lon_max)
    }
}

impl BoundingBox {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self> {
        GeoPoint::new(lat_min, lon_min)?;
        GeoPoint::new(lat_max, lon_max)?;
        if lat_min >= lat_max || lon_min >= lon_max {
            return Err(Error::Config(format!(
                "degenerate bounding box [{lat_min}, {lat_max}] x [{lon_min}, {lon_max}]"
            )));
        }
        Ok(Self {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
        })
    }

    pub fn lat_min(&self) -> f64 {
        self.lat_min
    }

    pub fn lat_max(&self) -> f64 {
        self.lat_max
    }

    pub fn lon_min(&self) -> f64 {
        self.lon_min
    }

    pub fn lon_max(&self) -> f64 {
        self.lon_max
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        (self.lat_min..=self.lat_max).contains(&p.lat())
            && (self.lon_min..=self.lon_max).contains(&p.lon())
    }

    /// Nearest point of the box to `p` (equal to `p` when inside).
    pub fn clamp(&self, p: &GeoPoint) -> GeoPoint {
        GeoPoint {
            lat: p.lat().clamp(self.lat_min, self.lat_max),
            lon: p.lon().clamp(self.lon_min, self.lon_max),
        }
    }
}

/// A fixed emitting facility.
///
/// `emission_rate` is the source strength used both as the emission weight
/// and as the field amplitude Q; `region_tag` carries the two-letter state
/// or region code of the site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub source_id: String,
    pub location: GeoPoint,
    pub capacity_mw: f64,
    pub emission_rate: f64,
    pub region_tag: String,
}

impl SourceRecord {
    /// Checks the record invariants: non-empty id, non-negative finite weights.
    pub fn validate(&self) -> Result<()> {
        if self.source_id.is_empty() {
            return Err(Error::Input("source_id must be non-empty".into()));
        }
        for (name, v) in [
            ("capacity_mw", self.capacity_mw),
            ("emission_rate", self.emission_rate),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Input(format!(
                    "source {}: {name} must be finite and >= 0, got {v}",
                    self.source_id
                )));
            }
        }
        Ok(())
    }
}

/// Weighting scheme for exposure and dominant-source selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Unit weight per source; the dominant source is simply the nearest.
    Nearest,
    /// Weight by nameplate capacity (MW).
    Capacity,
    /// Weight by total emission rate.
    Emissions,
}

impl WeightMode {
    pub const ALL: [WeightMode; 3] = [
        WeightMode::Nearest,
        WeightMode::Capacity,
        WeightMode::Emissions,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            WeightMode::Nearest => "nearest",
            WeightMode::Capacity => "capacity",
            WeightMode::Emissions => "emissions",
        }
    }

    fn weight(&self, s: &SourceRecord) -> f64 {
        match self {
            WeightMode::Nearest => 1.0,
            WeightMode::Capacity => s.capacity_mw,
            WeightMode::Emissions => s.emission_rate,
        }
    }
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(WeightMode::Nearest),
            "capacity" => Ok(WeightMode::Capacity),
            "emissions" => Ok(WeightMode::Emissions),
            other => Err(Error::Config(format!(
                "unknown weight mode {other:?}; expected nearest, capacity, or emissions"
            ))),
        }
    }
}

/// Relation of one observation point to a set of sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceAssignment {
    /// Source with the smallest great-circle distance (ties broken by id).
    pub nearest_id: String,
    /// Distance to that source in km, clamped to at least [`MIN_DISTANCE_KM`].
    pub nearest_distance_km: f64,
    /// Source contributing the largest share of `exposure`.
    pub dominant_id: String,
    /// Distance to the dominant source in km, clamped like `nearest_distance_km`.
    pub dominant_distance_km: f64,
    /// Sum over sources of weight / distance^2 (1/km^2 units times weight).
    pub exposure: f64,
    /// True when any source sat closer than [`MIN_DISTANCE_KM`].
    pub clamped: bool,
}

/// Great-circle distance in kilometres between two points.
///
/// Haversine form: numerically stable for small separations; the asin
/// argument is clamped to 1 so antipodal round-off cannot produce NaN.
pub fn haversine(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let phi1 = a.lat().to_radians();
    let phi2 = b.lat().to_radians();
    let dphi = (b.lat() - a.lat()).to_radians();
    let dlambda = (b.lon() - a.lon()).to_radians();

    let s = (dphi / 2.0).sin().powi(2)
        + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * s.sqrt().min(1.0).asin()
}

/// Computes nearest source, dominant-exposure source, and total exposure for
/// one point.
///
/// Exposure sums `weight / d^2` over all sources with distances clamped to
/// [`MIN_DISTANCE_KM`]. Contributions are accumulated in `source_id` order,
/// so the result does not depend on the order of `sources`. Ties on distance
/// or on exposure share resolve to the lexicographically smallest id.
pub fn assign_sources(
    point: &GeoPoint,
    sources: &[SourceRecord],
    mode: WeightMode,
) -> Result<SourceAssignment> {
    if sources.is_empty() {
        return Err(Error::Input("assign_sources: empty source list".into()));
    }

    let mut by_id: Vec<&SourceRecord> = sources.iter().collect();
    by_id.sort_by(|a, b| a.source_id.cmp(&b.source_id));

    let mut clamped = false;
    let mut exposure = 0.0;
    let mut nearest: Option<(f64, &SourceRecord)> = None;
    let mut dominant: Option<(f64, f64, &SourceRecord)> = None;

    for s in by_id {
        s.validate()?;
        let raw = haversine(point, &s.location);
        let d = if raw < MIN_DISTANCE_KM {
            clamped = true;
            MIN_DISTANCE_KM
        } else {
            raw
        };
        let share = mode.weight(s) / (d * d);
        exposure += share;

        let closer = match nearest {
            None => true,
            Some((best, _)) => d < best,
        };
        if closer {
            nearest = Some((d, s));
        }
        let stronger = match dominant {
            None => true,
            Some((best, _, _)) => share > best,
        };
        if stronger {
            dominant = Some((share, d, s));
        }
    }

    let (nearest_distance_km, nearest_src) =
        nearest.ok_or_else(|| Error::Internal("no nearest source selected".into()))?;
    let (_, dominant_distance_km, dominant_src) =
        dominant.ok_or_else(|| Error::Internal("no dominant source selected".into()))?;

    Ok(SourceAssignment {
        nearest_id: nearest_src.source_id.clone(),
        nearest_distance_km,
        dominant_id: dominant_src.source_id.clone(),
        dominant_distance_km,
        exposure,
        clamped,
    })
}

/// Summary statistics of the values falling in one distance bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceBin {
    /// Inclusive lower edge in km.
    pub lo: f64,
    /// Exclusive upper edge in km; `None` marks an open-ended last bin.
    pub hi: Option<f64>,
    pub n: usize,
    /// Arithmetic mean; absent for empty bins.
    pub mean: Option<f64>,
    /// Midpoint-interpolated median; absent for empty bins.
    pub median: Option<f64>,
    /// Sample standard deviation (n-1 denominator); absent for n < 2.
    pub sd: Option<f64>,
}

/// Binned distance profile of a set of (distance, value) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub bins: Vec<DistanceBin>,
    /// Observations falling below the first edge, or at/above the last edge
    /// of a closed binning. Bin counts plus this equal the input count.
    pub out_of_range: usize,
}

/// Bins (distance, value) pairs into half-open intervals `[e_k, e_{k+1})`
/// defined by strictly ascending `edges`.
///
/// With `open_ended` the final bin extends to infinity. Every pair lands in
/// exactly one bin or in the `out_of_range` tally, so counts always sum to
/// `pairs.len()`.
pub fn distance_bin_summary(
    pairs: &[(f64, f64)],
    edges: &[f64],
    open_ended: bool,
) -> Result<BinSummary> {
    if edges.len() < 2 {
        return Err(Error::Config("need at least two bin edges".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "bin edges must be finite and strictly ascending, got {edges:?}"
        )));
    }
    if let Some(&(d, v)) = pairs
        .iter()
        .find(|(d, v)| !d.is_finite() || !v.is_finite())
    {
        return Err(Error::Input(format!(
            "non-finite (distance, value) pair ({d}, {v})"
        )));
    }

    let n_bins = edges.len() - 1;
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    let mut out_of_range = 0usize;

    for &(d, v) in pairs {
        // partition_point returns the count of edges <= d, hence the bin
        // index is one less; d below the first edge yields 0.
        let idx = edges.partition_point(|&e| e <= d);
        if idx == 0 {
            out_of_range += 1;
        } else if idx <= n_bins {
            values[idx - 1].push(v);
        } else if open_ended {
            values[n_bins - 1].push(v);
        } else {
            out_of_range += 1;
        }
    }

    let bins = values
        .into_iter()
        .enumerate()
        .map(|(k, mut vals)| {
            let (mean, median, sd) = summarize(&mut vals);
            DistanceBin {
                lo: edges[k],
                hi: if open_ended && k == n_bins - 1 {
                    None
                } else {
                    Some(edges[k + 1])
                },
                n: vals.len(),
                mean,
                median,
                sd,
            }
        })
        .collect();

    Ok(BinSummary { bins, out_of_range })
}

fn summarize(vals: &mut [f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    let n = vals.len();
    if n == 0 {
        return (None, None, None);
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    vals.sort_by(|a, b| a.total_cmp(b));
    let median = if n % 2 == 1 {
        vals[n / 2]
    } else {
        0.5 * (vals[n / 2 - 1] + vals[n / 2])
    };
    let sd = if n >= 2 {
        let ss = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        Some((ss / (n - 1) as f64).sqrt())
    } else {
        None
    };
    (Some(mean), Some(median), sd)
}
