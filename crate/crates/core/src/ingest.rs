//! CSV ingestion and quality filtering for observation and source datasets.
//!
//! Three fixed schemas (header rows are exact):
//!
//! * plants:   `plant_id,lat,lon,capacity_mw,so2_tons,nox_tons,state`
//! * monitors: `monitor_id,lat,lon,date,value`
//! * cells:    `cell_id,lat,lon,month,value,n_obs,qa`
//!
//! Filter rules run in a fixed order and each dropped row is attributed to
//! the first rule it violates: malformed (at parse), negative value,
//! too few readings per period (cells), low quality-assurance score (cells),
//! value above the trim cut, and finally low yearly coverage (monitors).
//!
//! The trim cut is the nearest-rank `trim_quantile` of the post-negative
//! pool, resolved once per application and recorded in the audit. Applying
//! the same resolved cut again drops nothing, which makes filtering
//! idempotent; re-resolving a quantile against already-trimmed data would
//! instead tighten it on every pass. Coverage runs after the trim for the
//! same reason: a monitor-year retained once cannot lose days afterwards,
//! so its coverage ratio can only rise on re-application.
//!
//! Coverage itself follows the per-calendar-year reading: a monitor-year is
//! kept when its distinct observation days cover at least `min_coverage` of
//! that year's days inside the data's overall date span.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, SourceRecord};

/// The ten highest coal-output states; membership decides the coal stratum.
pub const COAL_STATES: [&str; 10] = ["WV", "WY", "KY", "IN", "PA", "ND", "MT", "OH", "TX", "IL"];

/// Near/far split distance in km. The boundary itself is strictly far.
pub const NEAR_FIELD_KM: f64 = 100.0;

/// Observation timestamp: a calendar day or a calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Period {
    Month { year: i32, month: u32 },
    Date(NaiveDate),
}

impl Period {
    /// Parses `YYYY-MM-DD` or `YYYY-MM`.
    pub fn parse(s: &str) -> Result<Self> {
        if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Ok(Period::Date(d));
        }
        if let Some((y, m)) = s.split_once('-') {
            if let (Ok(year), Ok(month)) = (y.parse::<i32>(), m.parse::<u32>()) {
                if y.len() == 4 && m.len() == 2 && (1..=12).contains(&month) {
                    return Ok(Period::Month { year, month });
                }
            }
        }
        Err(Error::Input(format!(
            "period {s:?} is neither YYYY-MM-DD nor YYYY-MM"
        )))
    }

    pub fn year(&self) -> i32 {
        match self {
            Period::Date(d) => d.year(),
            Period::Month { year, .. } => *year,
        }
    }

    fn date(&self) -> Option<NaiveDate> {
        match self {
            Period::Date(d) => Some(*d),
            Period::Month { .. } => None,
        }
    }
}

impl std::fmt::Display for Period {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Period::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            Period::Month { year, month } => write!(f, "{year:04}-{month:02}"),
        }
    }
}

impl TryFrom<String> for Period {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Period::parse(&s)
    }
}

impl From<Period> for String {
    fn from(p: Period) -> String {
        p.to_string()
    }
}

/// One quality-controlled measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub obs_id: String,
    pub location: GeoPoint,
    pub period: Period,
    pub value: f64,
    /// Readings aggregated into this row (1 for daily monitor rows).
    pub n_within_period: u32,
    /// Quality-assurance fraction in [0, 1]; absent for monitor rows.
    pub qa: Option<f64>,
    /// Two-letter state/region code when known, else empty.
    pub region_tag: String,
}

/// Input schema selector for [`load_observations`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaKind {
    Monitor,
    Cell,
}

impl SchemaKind {
    fn headers(&self) -> &'static [&'static str] {
        match self {
            SchemaKind::Monitor => &["monitor_id", "lat", "lon", "date", "value"],
            SchemaKind::Cell => &["cell_id", "lat", "lon", "month", "value", "n_obs", "qa"],
        }
    }
}

/// Detects the observation schema from a file's header row. A header that
/// matches neither schema is an input error naming the columns seen.
pub fn sniff_schema(path: &Path) -> Result<SchemaKind> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(file);
    let mut record = csv::StringRecord::new();
    let got = reader
        .read_record(&mut record)
        .map_err(|e| Error::Input(format!("cannot read header of {}: {e}", path.display())))?;
    if !got {
        return Err(Error::Input(format!("{} is empty", path.display())));
    }
    let header: Vec<&str> = record.iter().map(str::trim).collect();
    for kind in [SchemaKind::Monitor, SchemaKind::Cell] {
        if header == kind.headers() {
            return Ok(kind);
        }
    }
    Err(Error::Input(format!(
        "unrecognized observation header [{}] in {}",
        header.join(", "),
        path.display()
    )))
}

/// Quality-filter settings. All fractions live in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    /// Minimum fraction of a calendar year's days (within the data span)
    /// a monitor must cover.
    pub min_coverage: f64,
    /// Minimum readings per period for cell rows.
    pub min_obs_per_period: u32,
    /// Minimum quality-assurance score for cell rows.
    pub min_qa: f64,
    /// Upper trim quantile; 1.0 disables trimming.
    pub trim_quantile: f64,
    /// Drop rows with negative values.
    pub drop_negative: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self {
            min_coverage: 0.75,
            min_obs_per_period: 5,
            min_qa: 0.75,
            trim_quantile: 0.99,
            drop_negative: true,
        }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("min_coverage", self.min_coverage),
            ("min_qa", self.min_qa),
            ("trim_quantile", self.trim_quantile),
        ] {
            if !(v.is_finite() && 0.0 < v && v <= 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Per-rule drop counts for one filter application.
///
/// The counts partition the input: `malformed + negative + below_min_obs +
/// below_qa + trimmed + low_coverage + retained == input_rows`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterAudit {
    pub input_rows: usize,
    pub malformed: usize,
    pub negative: usize,
    pub below_min_obs: usize,
    pub below_qa: usize,
    pub trimmed: usize,
    pub low_coverage: usize,
    pub retained: usize,
    /// Resolved trim cut; values strictly above it were dropped. Absent
    /// when the post-negative pool was empty.
    pub trim_cut: Option<f64>,
}

impl FilterAudit {
    pub fn dropped(&self) -> usize {
        self.malformed
            + self.negative
            + self.below_min_obs
            + self.below_qa
            + self.trimmed
            + self.low_coverage
    }
}

/// Nearest-rank upper quantile: the ceil(p*n)-th smallest value.
fn nearest_rank_quantile(values: &mut [f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let rank = ((p * values.len() as f64).ceil() as usize).clamp(1, values.len());
    Some(values[rank - 1])
}

/// Applies the row filters to already-parsed records, resolving the trim
/// cut from the post-negative pool of `records`.
pub fn apply_filters(
    records: &[ObservationRecord],
    schema: SchemaKind,
    policy: &FilterPolicy,
) -> Result<(Vec<ObservationRecord>, FilterAudit)> {
    policy.validate()?;
    let mut pool: Vec<f64> = records
        .iter()
        .filter(|r| !(policy.drop_negative && r.value < 0.0))
        .map(|r| r.value)
        .collect();
    let cut = if policy.trim_quantile < 1.0 {
        nearest_rank_quantile(&mut pool, policy.trim_quantile)
    } else {
        None
    };
    Ok(apply_filters_with_cut(records, schema, policy, cut))
}

/// Applies the row filters with a previously resolved trim cut. Applying
/// the same cut to its own output is a no-op.
pub fn apply_filters_with_cut(
    records: &[ObservationRecord],
    schema: SchemaKind,
    policy: &FilterPolicy,
    trim_cut: Option<f64>,
) -> (Vec<ObservationRecord>, FilterAudit) {
    let mut audit = FilterAudit {
        input_rows: records.len(),
        trim_cut,
        ..FilterAudit::default()
    };

    let mut kept: Vec<ObservationRecord> = Vec::with_capacity(records.len());
    for r in records {
        if policy.drop_negative && r.value < 0.0 {
            audit.negative += 1;
        } else if schema == SchemaKind::Cell && r.n_within_period < policy.min_obs_per_period {
            audit.below_min_obs += 1;
        } else if schema == SchemaKind::Cell && r.qa.is_some_and(|qa| qa < policy.min_qa) {
            audit.below_qa += 1;
        } else if trim_cut.is_some_and(|cut| r.value > cut) {
            audit.trimmed += 1;
        } else {
            kept.push(r.clone());
        }
    }

    let kept = if schema == SchemaKind::Monitor {
        filter_coverage(kept, policy.min_coverage, &mut audit)
    } else {
        kept
    };

    let mut kept = kept;
    kept.sort_by(|a, b| (&a.obs_id, a.period).cmp(&(&b.obs_id, b.period)));
    audit.retained = kept.len();
    (kept, audit)
}

/// Drops whole monitor-years whose distinct observation days cover less
/// than `min_coverage` of the calendar year's days inside the data span.
fn filter_coverage(
    rows: Vec<ObservationRecord>,
    min_coverage: f64,
    audit: &mut FilterAudit,
) -> Vec<ObservationRecord> {
    let dates: Vec<NaiveDate> = rows.iter().filter_map(|r| r.period.date()).collect();
    let (Some(&span_lo), Some(&span_hi)) = (dates.iter().min(), dates.iter().max()) else {
        return rows;
    };

    let mut days: BTreeMap<(String, i32), BTreeSet<NaiveDate>> = BTreeMap::new();
    for r in &rows {
        if let Some(d) = r.period.date() {
            days.entry((r.obs_id.clone(), d.year())).or_default().insert(d);
        }
    }

    let covered = |id: &str, year: i32| -> bool {
        let Some(observed) = days.get(&(id.to_string(), year)) else {
            return true;
        };
        let year_lo = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year start");
        let year_hi = NaiveDate::from_ymd_opt(year, 12, 31).expect("valid year end");
        let lo = year_lo.max(span_lo);
        let hi = year_hi.min(span_hi);
        let denom = (hi - lo).num_days() + 1;
        denom <= 0 || observed.len() as f64 / denom as f64 >= min_coverage
    };

    let mut kept = Vec::with_capacity(rows.len());
    for r in rows {
        let keep = match r.period.date() {
            Some(d) => covered(&r.obs_id, d.year()),
            None => true,
        };
        if keep {
            kept.push(r);
        } else {
            audit.low_coverage += 1;
        }
    }
    kept
}

fn read_csv<R: Read>(reader: R, expected: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Input(format!("cannot read CSV header: {e}")))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Input(format!(
            "header mismatch: expected {expected:?}, got {got:?}"
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        match rec {
            Ok(r) => rows.push(r),
            // A structurally broken row (for example a stray quote) still
            // counts as one malformed input row.
            Err(_) => rows.push(csv::StringRecord::new()),
        }
    }
    Ok(rows)
}

fn parse_f64(field: Option<&str>) -> Option<f64> {
    field.and_then(|s| s.trim().parse::<f64>().ok()).filter(|v| v.is_finite())
}

/// Loads and filters an observation CSV in the given schema.
///
/// Malformed rows are skipped and counted; more than 50% malformed is a
/// hard error. Output is sorted by `(obs_id, period)`.
pub fn load_observations(
    path: &Path,
    schema: SchemaKind,
    policy: &FilterPolicy,
) -> Result<(Vec<ObservationRecord>, FilterAudit)> {
    policy.validate()?;
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    let rows = read_csv(file, schema.headers())?;

    let mut records = Vec::with_capacity(rows.len());
    let mut malformed = 0usize;
    for row in &rows {
        match parse_observation(row, schema) {
            Some(rec) => records.push(rec),
            None => malformed += 1,
        }
    }
    if malformed * 2 > rows.len() {
        return Err(Error::Input(format!(
            "{malformed} of {} rows are malformed (more than half)",
            rows.len()
        )));
    }

    let (kept, mut audit) = apply_filters(&records, schema, policy)?;
    audit.malformed = malformed;
    audit.input_rows = rows.len();
    Ok((kept, audit))
}

fn parse_observation(row: &csv::StringRecord, schema: SchemaKind) -> Option<ObservationRecord> {
    let id = row.get(0)?.trim();
    if id.is_empty() {
        return None;
    }
    let lat = parse_f64(row.get(1))?;
    let lon = parse_f64(row.get(2))?;
    let location = GeoPoint::new(lat, lon).ok()?;
    let period = Period::parse(row.get(3)?.trim()).ok()?;
    let value = parse_f64(row.get(4))?;

    match schema {
        SchemaKind::Monitor => {
            if row.len() != 5 || !matches!(period, Period::Date(_)) {
                return None;
            }
            Some(ObservationRecord {
                obs_id: id.to_string(),
                location,
                period,
                value,
                n_within_period: 1,
                qa: None,
                region_tag: String::new(),
            })
        }
        SchemaKind::Cell => {
            if row.len() != 7 || !matches!(period, Period::Month { .. }) {
                return None;
            }
            let n_obs = row.get(5)?.trim().parse::<u32>().ok()?;
            let qa = parse_f64(row.get(6))?;
            if !(0.0..=1.0).contains(&qa) {
                return None;
            }
            Some(ObservationRecord {
                obs_id: id.to_string(),
                location,
                period,
                value,
                n_within_period: n_obs,
                qa: Some(qa),
                region_tag: String::new(),
            })
        }
    }
}

/// Loads the plants CSV. Sources are few and load-bearing, so any bad row
/// is a hard error rather than an audited skip. `emission_rate` is the sum
/// of the SO2 and NOx columns; output is sorted by id.
pub fn load_sources(path: &Path) -> Result<Vec<SourceRecord>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    let rows = read_csv(
        file,
        &["plant_id", "lat", "lon", "capacity_mw", "so2_tons", "nox_tons", "state"],
    )?;

    let mut sources = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let parsed = (|| -> Option<SourceRecord> {
            let id = row.get(0)?.trim();
            if id.is_empty() || row.len() != 7 {
                return None;
            }
            let location = GeoPoint::new(parse_f64(row.get(1))?, parse_f64(row.get(2))?).ok()?;
            let capacity = parse_f64(row.get(3))?;
            let so2 = parse_f64(row.get(4))?;
            let nox = parse_f64(row.get(5))?;
            Some(SourceRecord {
                source_id: id.to_string(),
                location,
                capacity_mw: capacity,
                emission_rate: so2 + nox,
                region_tag: row.get(6)?.trim().to_string(),
            })
        })();
        let rec = parsed
            .ok_or_else(|| Error::Input(format!("plants row {}: malformed", i + 2)))?;
        rec.validate()?;
        sources.push(rec);
    }
    sources.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    Ok(sources)
}

/// Writes sources in the plants CSV schema read back by [`load_sources`].
/// The whole emission rate goes in the SO2 column with zero NOx, so a
/// round trip preserves the combined rate.
pub fn write_sources_csv(sources: &[SourceRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Input(format!("cannot create {}: {e}", path.display())))?;
    w.write_record(["plant_id", "lat", "lon", "capacity_mw", "so2_tons", "nox_tons", "state"])
        .map_err(|e| Error::Internal(format!("csv write: {e}")))?;
    for s in sources {
        s.validate()?;
        w.write_record([
            s.source_id.as_str(),
            &s.location.lat().to_string(),
            &s.location.lon().to_string(),
            &s.capacity_mw.to_string(),
            &s.emission_rate.to_string(),
            "0",
            &s.region_tag,
        ])
        .map_err(|e| Error::Internal(format!("csv write: {e}")))?;
    }
    w.flush().map_err(|e| Error::Internal(format!("csv flush: {e}")))?;
    Ok(())
}

/// Writes observation records in the monitor CSV schema. All periods must
/// be calendar dates.
pub fn write_monitor_csv(records: &[ObservationRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Input(format!("cannot create {}: {e}", path.display())))?;
    w.write_record(["monitor_id", "lat", "lon", "date", "value"])
        .map_err(|e| Error::Internal(format!("csv write: {e}")))?;
    for r in records {
        if !matches!(r.period, Period::Date(_)) {
            return Err(Error::Input(format!(
                "monitor schema requires daily periods, got {} for {}",
                r.period, r.obs_id
            )));
        }
        w.write_record([
            r.obs_id.as_str(),
            &r.location.lat().to_string(),
            &r.location.lon().to_string(),
            &r.period.to_string(),
            &r.value.to_string(),
        ])
        .map_err(|e| Error::Internal(format!("csv write: {e}")))?;
    }
    w.flush().map_err(|e| Error::Internal(format!("csv flush: {e}")))?;
    Ok(())
}

/// Time-averaged value of one observation unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAveraged {
    pub obs_id: String,
    pub location: GeoPoint,
    pub mean_value: f64,
    /// Number of distinct periods contributing to the mean.
    pub n_periods: usize,
    pub region_tag: String,
}

/// Arithmetic mean per `obs_id` across periods, sorted by id. The location
/// and region tag are taken from the earliest period's row.
pub fn time_average(observations: &[ObservationRecord]) -> Result<Vec<TimeAveraged>> {
    if observations.is_empty() {
        return Err(Error::Input("time_average: no observations".into()));
    }
    let mut groups: BTreeMap<&str, Vec<&ObservationRecord>> = BTreeMap::new();
    for r in observations {
        groups.entry(&r.obs_id).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|(id, mut rows)| {
            rows.sort_by_key(|r| r.period);
            let mean = rows.iter().map(|r| r.value).sum::<f64>() / rows.len() as f64;
            let periods: BTreeSet<Period> = rows.iter().map(|r| r.period).collect();
            TimeAveraged {
                obs_id: id.to_string(),
                location: rows[0].location,
                mean_value: mean,
                n_periods: periods.len(),
                region_tag: rows[0].region_tag.clone(),
            }
        })
        .collect())
}

/// Stratum labels combining coal-state membership with the near/far split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionClass {
    CoalNear,
    CoalFar,
    NoncoalNear,
    NoncoalFar,
}

impl RegionClass {
    pub const ALL: [RegionClass; 4] = [
        RegionClass::CoalNear,
        RegionClass::CoalFar,
        RegionClass::NoncoalNear,
        RegionClass::NoncoalFar,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            RegionClass::CoalNear => "coal_near",
            RegionClass::CoalFar => "coal_far",
            RegionClass::NoncoalNear => "noncoal_near",
            RegionClass::NoncoalFar => "noncoal_far",
        }
    }
}

impl std::fmt::Display for RegionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Classifies a location by the coal intensity of its state and its
/// distance to the nearest source. Near means strictly under
/// [`NEAR_FIELD_KM`]; the boundary itself is far.
pub fn classify_region(state_code: &str, nearest_distance_km: f64) -> Result<RegionClass> {
    let code = state_code.trim().to_ascii_uppercase();
    if code.len() != 2 || !code.bytes().all(|b| b.is_ascii_uppercase()) {
        return Err(Error::Input(format!(
            "state code must be two letters, got {state_code:?}"
        )));
    }
    if !nearest_distance_km.is_finite() || nearest_distance_km < 0.0 {
        return Err(Error::Input(format!(
            "distance must be finite and >= 0, got {nearest_distance_km}"
        )));
    }
    let coal = COAL_STATES.contains(&code.as_str());
    let near = nearest_distance_km < NEAR_FIELD_KM;
    Ok(match (coal, near) {
        (true, true) => RegionClass::CoalNear,
        (true, false) => RegionClass::CoalFar,
        (false, true) => RegionClass::NoncoalNear,
        (false, false) => RegionClass::NoncoalFar,
    })
}
