//! On-disk artifact shapes and deterministic readers/writers.
//!
//! Every artifact is pretty-printed JSON with a trailing newline, written
//! from structs with a fixed field order, so identical runs produce
//! byte-identical files regardless of thread count or environment.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use decaybound::boundary::BoundaryEstimate;
use decaybound::diagnose::{PlaceboResult, RobustnessResult, ValidityReport};
use decaybound::estimate::{DecayEstimate, StratumResult};
use decaybound::ingest::{FilterAudit, FilterPolicy, SchemaKind};
use decaybound::synth::GroundTruth;
use decaybound::{Error, Result};

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// Absent file reads as `None`; a present but unparsable file is an error.
pub fn read_json_opt<T: DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if !path.exists() {
        return Ok(None);
    }
    read_json(path).map(Some)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
}

/// One fitted coefficient with its robust standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
}

/// One regression form's results within a ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub spec: String,
    pub scale: String,
    pub n: usize,
    pub dropped_nonpositive: usize,
    pub r2: f64,
    pub aic: f64,
    /// AIC above the ranking winner; 0 for the winner itself.
    pub delta_aic: f64,
    pub coefficients: Vec<CoefficientRow>,
    pub decay: DecayEstimate,
}

/// `fits.json`: the full estimation record for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitsArtifact {
    pub input: String,
    pub schema: SchemaKind,
    pub weight_mode: String,
    pub policy: FilterPolicy,
    pub audit: FilterAudit,
    /// Observation units after time averaging.
    pub n_units: usize,
    pub distance_min_km: f64,
    pub distance_max_km: f64,
    /// Best fit first.
    pub ranking: Vec<FitSummary>,
    pub strata: Option<Vec<StratumResult>>,
}

impl FitsArtifact {
    /// The ranking winner's decay estimate.
    pub fn best_decay(&self) -> Result<&DecayEstimate> {
        self.ranking
            .first()
            .map(|f| &f.decay)
            .ok_or_else(|| Error::Input("fit artifact has an empty ranking".into()))
    }
}

/// Temporal persistence bound derived from a spatial boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalRow {
    pub epsilon: f64,
    pub tau_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSection {
    pub treatment_intensity: f64,
    pub diffusion: f64,
    pub rows: Vec<TemporalRow>,
}

/// `boundary.json`: detection boundaries across the threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArtifact {
    pub decay: DecayEstimate,
    pub boundaries: Vec<BoundaryEstimate>,
    pub temporal: Option<TemporalSection>,
}

/// `report.json`: everything a run produced, in one place. Sections are
/// optional because runs legitimately stop early (a rejected framework
/// has no boundary to report).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportArtifact {
    pub truth: Option<GroundTruth>,
    pub fits: Option<FitsArtifact>,
    pub boundary: Option<BoundaryArtifact>,
    pub validity: Option<ValidityReport>,
    pub placebo: Option<PlaceboResult>,
    pub robustness: Option<RobustnessResult>,
}

/// Bare decay estimate accepted by `bound` in place of a fit artifact:
/// only the point value and its standard error are mandatory.
#[derive(Debug, Clone, Deserialize)]
pub struct LenientDecay {
    pub kappa_s: f64,
    pub se: f64,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub stratum: String,
}

impl LenientDecay {
    pub fn into_estimate(self) -> DecayEstimate {
        DecayEstimate::from_parts(self.kappa_s, self.se, self.n, self.stratum)
    }
}
