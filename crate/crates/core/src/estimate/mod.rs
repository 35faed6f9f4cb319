//! Regression engine for distance-decay estimation.
//!
//! A [`DecayRow`] is one regression-ready observation: outcome, distance to
//! the assigned source, optional wind fields, pass-through covariates, and
//! stratum/year labels. [`build_design`] turns rows into a named design
//! matrix per [`SpecKind`]; [`ols::fit_ols`] runs least squares with HC1
//! robust covariance; higher-level operations stratify, split by year, and
//! difference group means.

pub mod ols;
pub mod superposition;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{assign_sources, SourceRecord, WeightMode};
use crate::ingest::{classify_region, TimeAveraged};

pub use ols::{compare_specs, extract_decay, fit_ols, RankedFit, RegressionFit};
pub use superposition::{
    fit_superposition, fit_superposition_with, superposition_init, SuperpositionFit,
    SuperpositionObs,
};

/// Two-sided 5% critical value used for every significance call.
pub const Z_CRIT_95: f64 = 1.96;

/// Functional form of the distance-decay regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    /// Outcome on distance.
    Linear,
    /// Outcome on distance and distance squared.
    Quadratic,
    /// Outcome on log distance and distance, separating geometric
    /// spreading from exponential decay.
    Both,
    /// Log outcome on distance.
    LogLinear,
    /// Log outcome on distance with an imposed inverse-square spreading
    /// term (the log-distance coefficient is fixed at -2, not estimated).
    Geometric,
    /// Separate distance slopes downwind and upwind of the source.
    Asymmetric,
    /// Distance plus a distance-by-wind-speed interaction.
    WindInteraction,
}

impl SpecKind {
    pub const ALL: [SpecKind; 7] = [
        SpecKind::Linear,
        SpecKind::Quadratic,
        SpecKind::Both,
        SpecKind::LogLinear,
        SpecKind::Geometric,
        SpecKind::Asymmetric,
        SpecKind::WindInteraction,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SpecKind::Linear => "linear",
            SpecKind::Quadratic => "quadratic",
            SpecKind::Both => "both",
            SpecKind::LogLinear => "log_linear",
            SpecKind::Geometric => "geometric",
            SpecKind::Asymmetric => "asymmetric",
            SpecKind::WindInteraction => "wind_interaction",
        }
    }

    /// Outcome scale the form is normally estimated on. `linear` and
    /// `quadratic` describe the level outcome; the rest are log-outcome
    /// forms.
    pub fn default_scale(&self) -> OutcomeScale {
        match self {
            SpecKind::Linear | SpecKind::Quadratic => OutcomeScale::Level,
            _ => OutcomeScale::Log,
        }
    }

    /// Number of distance-derived regressors, excluding the intercept and
    /// any pass-through covariates.
    pub fn regressor_count(&self) -> usize {
        match self {
            SpecKind::Linear | SpecKind::LogLinear | SpecKind::Geometric => 1,
            SpecKind::Quadratic
            | SpecKind::Both
            | SpecKind::Asymmetric
            | SpecKind::WindInteraction => 2,
        }
    }
}

impl std::str::FromStr for SpecKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpecKind::ALL
            .iter()
            .copied()
            .find(|k| k.label() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown spec {s:?}; expected one of {:?}",
                    SpecKind::ALL.map(|k| k.label())
                ))
            })
    }
}

impl std::fmt::Display for SpecKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Whether the outcome enters the regression in levels or natural logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeScale {
    Level,
    Log,
}

/// One regression-ready observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub obs_id: String,
    pub distance_km: f64,
    pub outcome: f64,
    /// Bearing of the source-to-observation direction relative to the wind
    /// direction, radians; required by the asymmetric form.
    pub rel_bearing: Option<f64>,
    /// Wind speed at the observation; required by the wind interaction form.
    pub wind_speed: Option<f64>,
    /// Pass-through numeric covariates, same length on every row.
    pub covariates: Vec<f64>,
    /// Region label used by stratified fits; empty when unknown.
    pub stratum: String,
    pub year: Option<i32>,
}

impl DecayRow {
    pub fn new(obs_id: &str, distance_km: f64, outcome: f64) -> Self {
        Self {
            obs_id: obs_id.to_string(),
            distance_km,
            outcome,
            rel_bearing: None,
            wind_speed: None,
            covariates: Vec::new(),
            stratum: String::new(),
            year: None,
        }
    }
}

/// Named design matrix with the outcome already on its regression scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub spec: SpecKind,
    pub scale: OutcomeScale,
    /// Column names, `intercept` first.
    pub names: Vec<String>,
    pub y: Vec<f64>,
    /// Row-major regressor matrix, one inner vector per observation.
    pub x: Vec<Vec<f64>>,
    /// Rows lost to the log transform (non-positive outcomes).
    pub dropped_nonpositive: usize,
}

/// Builds the named design for a spec on the given outcome scale.
///
/// On the log scale, rows with non-positive outcomes are dropped and
/// counted. The geometric form folds its fixed `-2 log d` spreading term
/// into the outcome, so its residuals stay in log-outcome units and its
/// fit statistics remain comparable with the other log forms.
pub fn build_design(
    rows: &[DecayRow],
    spec: SpecKind,
    scale: OutcomeScale,
    covariate_names: &[String],
) -> Result<Design> {
    if rows.is_empty() {
        return Err(Error::Input("no observations to fit".into()));
    }
    if spec == SpecKind::Geometric && scale == OutcomeScale::Level {
        return Err(Error::Config(
            "geometric form is defined on the log scale".into(),
        ));
    }

    let mut names = vec!["intercept".to_string()];
    match spec {
        SpecKind::Linear | SpecKind::LogLinear | SpecKind::Geometric => {
            names.push("distance".into());
        }
        SpecKind::Quadratic => {
            names.push("distance".into());
            names.push("distance_sq".into());
        }
        SpecKind::Both => {
            names.push("log_distance".into());
            names.push("distance".into());
        }
        SpecKind::Asymmetric => {
            names.push("distance_downwind".into());
            names.push("distance_upwind".into());
        }
        SpecKind::WindInteraction => {
            names.push("distance".into());
            names.push("distance_x_wind".into());
        }
    }
    names.extend(covariate_names.iter().cloned());

    let mut y = Vec::with_capacity(rows.len());
    let mut x = Vec::with_capacity(rows.len());
    let mut dropped_nonpositive = 0usize;

    for row in rows {
        let d = row.distance_km;
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Input(format!(
                "observation {}: distance must be finite and positive, got {d}",
                row.obs_id
            )));
        }
        if !row.outcome.is_finite() {
            return Err(Error::Input(format!(
                "observation {}: outcome must be finite",
                row.obs_id
            )));
        }
        if row.covariates.len() != covariate_names.len() {
            return Err(Error::Input(format!(
                "observation {}: {} covariates but {} covariate names",
                row.obs_id,
                row.covariates.len(),
                covariate_names.len()
            )));
        }

        let outcome = match scale {
            OutcomeScale::Level => row.outcome,
            OutcomeScale::Log => {
                if row.outcome <= 0.0 {
                    dropped_nonpositive += 1;
                    continue;
                }
                let base = row.outcome.ln();
                if spec == SpecKind::Geometric {
                    base + 2.0 * d.ln()
                } else {
                    base
                }
            }
        };

        let mut cols = vec![1.0];
        match spec {
            SpecKind::Linear | SpecKind::LogLinear | SpecKind::Geometric => cols.push(d),
            SpecKind::Quadratic => {
                cols.push(d);
                cols.push(d * d);
            }
            SpecKind::Both => {
                cols.push(d.ln());
                cols.push(d);
            }
            SpecKind::Asymmetric => {
                let theta = row.rel_bearing.ok_or_else(|| {
                    Error::Input(format!(
                        "observation {}: asymmetric form needs a wind-relative bearing",
                        row.obs_id
                    ))
                })?;
                let downwind = theta.cos() > 0.0;
                cols.push(if downwind { d } else { 0.0 });
                cols.push(if downwind { 0.0 } else { d });
            }
            SpecKind::WindInteraction => {
                let w = row.wind_speed.ok_or_else(|| {
                    Error::Input(format!(
                        "observation {}: wind interaction form needs wind speed",
                        row.obs_id
                    ))
                })?;
                cols.push(d);
                cols.push(d * w);
            }
        }
        cols.extend(row.covariates.iter().copied());

        y.push(outcome);
        x.push(cols);
    }

    if y.len() <= names.len() + 1 {
        return Err(Error::Input(format!(
            "{} usable observations cannot identify {} coefficients",
            y.len(),
            names.len()
        )));
    }

    Ok(Design {
        spec,
        scale,
        names,
        y,
        x,
        dropped_nonpositive,
    })
}

/// Builds and fits in one step on the form's default scale.
pub fn fit(rows: &[DecayRow], spec: SpecKind) -> Result<RegressionFit> {
    let design = build_design(rows, spec, spec.default_scale(), &[])?;
    fit_ols(&design)
}

/// Point estimate of the spatial decay rate for one stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    /// Decay rate per km, the negated distance slope.
    pub kappa_s: f64,
    pub se: f64,
    pub t_stat: f64,
    pub n: usize,
    pub stratum: String,
}

impl DecayEstimate {
    /// Builds an estimate from its point value and standard error. A zero
    /// standard error yields t = 0 for a zero rate and signed infinity
    /// otherwise (an exact fit).
    pub fn from_parts(kappa_s: f64, se: f64, n: usize, stratum: String) -> Self {
        let t_stat = if se > 0.0 {
            kappa_s / se
        } else if kappa_s == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(kappa_s)
        };
        DecayEstimate {
            kappa_s,
            se,
            t_stat,
            n,
            stratum,
        }
    }

    pub fn significant(&self) -> bool {
        self.t_stat.abs() >= Z_CRIT_95
    }
}

/// Difference in mean outcome across a distance threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttEstimate {
    pub att: f64,
    /// Two-sample standard error allowing unequal group variances.
    pub se: f64,
    pub threshold_km: f64,
    pub scale: OutcomeScale,
    pub n_near: usize,
    pub n_far: usize,
}

/// Mean outcome difference between observations nearer than `threshold_km`
/// and the rest. Both sides need at least two usable observations.
pub fn att_stage1(
    rows: &[DecayRow],
    threshold_km: f64,
    scale: OutcomeScale,
) -> Result<AttEstimate> {
    if !(threshold_km.is_finite() && threshold_km > 0.0) {
        return Err(Error::Config(format!(
            "threshold must be finite and positive, got {threshold_km}"
        )));
    }
    let mut near = Vec::new();
    let mut far = Vec::new();
    for row in rows {
        let v = match scale {
            OutcomeScale::Level => row.outcome,
            OutcomeScale::Log => {
                if row.outcome <= 0.0 {
                    continue;
                }
                row.outcome.ln()
            }
        };
        if row.distance_km < threshold_km {
            near.push(v);
        } else {
            far.push(v);
        }
    }
    if near.len() < 2 || far.len() < 2 {
        return Err(Error::Input(format!(
            "need at least two observations on each side of {threshold_km} km, got {} near and {} far",
            near.len(),
            far.len()
        )));
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], m: f64| {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (m_near, m_far) = (mean(&near), mean(&far));
    let se =
        (var(&near, m_near) / near.len() as f64 + var(&far, m_far) / far.len() as f64).sqrt();

    Ok(AttEstimate {
        att: m_near - m_far,
        se,
        threshold_km,
        scale,
        n_near: near.len(),
        n_far: far.len(),
    })
}

/// Treatment indicator: strictly inside the boundary. A distance exactly at
/// `d_star` is untreated.
pub fn define_treatment(distances: &[f64], d_star: f64) -> Result<Vec<bool>> {
    if !(d_star.is_finite() && d_star > 0.0) {
        return Err(Error::Config(format!(
            "d_star must be finite and positive, got {d_star}"
        )));
    }
    Ok(distances.iter().map(|&d| d < d_star).collect())
}

/// One stratum's fit, or the reason it was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum StratumOutcome {
    Fitted { estimate: DecayEstimate },
    Skipped { n: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumResult {
    pub stratum: String,
    pub outcome: StratumOutcome,
}

/// Independent fits per stratum label, in the order given (or sorted label
/// order when `strata` is empty). Strata too small to identify the
/// coefficients are skipped with a reason instead of failing the run.
pub fn stratified_decay(
    rows: &[DecayRow],
    strata: &[String],
    spec: SpecKind,
) -> Result<Vec<StratumResult>> {
    let labels: Vec<String> = if strata.is_empty() {
        let mut l: Vec<String> = rows.iter().map(|r| r.stratum.clone()).collect();
        l.sort();
        l.dedup();
        l
    } else {
        let mut seen = std::collections::BTreeSet::new();
        strata
            .iter()
            .filter(|s| seen.insert(s.as_str()))
            .cloned()
            .collect()
    };
    if labels.is_empty() {
        return Err(Error::Input("no strata to fit".into()));
    }

    let mut results = Vec::with_capacity(labels.len());
    for label in labels {
        let subset: Vec<DecayRow> = rows
            .iter()
            .filter(|r| r.stratum == label)
            .cloned()
            .collect();
        let outcome = match fit(&subset, spec) {
            Ok(regression) => {
                let mut est = extract_decay(&regression)?;
                est.stratum = label.clone();
                StratumOutcome::Fitted { estimate: est }
            }
            Err(e) if e.is_usage() => StratumOutcome::Skipped {
                n: subset.len(),
                reason: e.to_string(),
            },
            Err(e) => return Err(e),
        };
        results.push(StratumResult {
            stratum: label,
            outcome,
        });
    }
    Ok(results)
}

/// Per-year decay estimates plus the pooled fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalSplits {
    pub per_year: Vec<StratumResult>,
    pub pooled: DecayEstimate,
    /// Largest pairwise gap among the fitted per-year decay rates.
    pub max_pairwise_gap: f64,
}

/// Splits the rows by calendar year and fits each year plus the pool.
/// `years` empty means every year present in the data; rows without a year
/// join only the pooled fit.
pub fn temporal_splits(
    rows: &[DecayRow],
    years: &[i32],
    spec: SpecKind,
) -> Result<TemporalSplits> {
    let year_list: Vec<i32> = if years.is_empty() {
        let mut l: Vec<i32> = rows.iter().filter_map(|r| r.year).collect();
        l.sort_unstable();
        l.dedup();
        l
    } else {
        let mut l = years.to_vec();
        l.sort_unstable();
        l.dedup();
        l
    };
    if year_list.is_empty() {
        return Err(Error::Input("no years to split on".into()));
    }

    let mut per_year = Vec::with_capacity(year_list.len());
    let mut fitted = Vec::new();
    for year in year_list {
        let subset: Vec<DecayRow> = rows
            .iter()
            .filter(|r| r.year == Some(year))
            .cloned()
            .collect();
        let outcome = match fit(&subset, spec) {
            Ok(regression) => {
                let mut est = extract_decay(&regression)?;
                est.stratum = year.to_string();
                fitted.push(est.kappa_s);
                StratumOutcome::Fitted { estimate: est }
            }
            Err(e) if e.is_usage() => StratumOutcome::Skipped {
                n: subset.len(),
                reason: e.to_string(),
            },
            Err(e) => return Err(e),
        };
        per_year.push(StratumResult {
            stratum: year.to_string(),
            outcome,
        });
    }

    let pooled_fit = fit(rows, spec)?;
    let mut pooled = extract_decay(&pooled_fit)?;
    pooled.stratum = "pooled".into();

    let mut max_gap = 0.0f64;
    for i in 0..fitted.len() {
        for j in i + 1..fitted.len() {
            max_gap = max_gap.max((fitted[i] - fitted[j]).abs());
        }
    }

    Ok(TemporalSplits {
        per_year,
        pooled,
        max_pairwise_gap: max_gap,
    })
}

/// Joins time-averaged observations to sources, producing regression rows.
///
/// The distance is to the nearest source under `Nearest`, otherwise to the
/// weight-dominant source. The stratum combines the coal classification of
/// the row's state (falling back to the assigned source's state when the
/// observation carries none) with the near/far split.
pub fn decay_rows(
    averaged: &[TimeAveraged],
    sources: &[SourceRecord],
    mode: WeightMode,
    year: Option<i32>,
) -> Result<Vec<DecayRow>> {
    let mut rows = Vec::with_capacity(averaged.len());
    for obs in averaged {
        let assignment = assign_sources(&obs.location, sources, mode)?;
        let distance = match mode {
            WeightMode::Nearest => assignment.nearest_distance_km,
            _ => assignment.dominant_distance_km,
        };
        let state = if obs.region_tag.is_empty() {
            sources
                .iter()
                .find(|s| s.source_id == assignment.nearest_id)
                .map(|s| s.region_tag.clone())
                .unwrap_or_default()
        } else {
            obs.region_tag.clone()
        };
        let stratum = match classify_region(&state, distance) {
            Ok(class) => class.label().to_string(),
            Err(_) => String::new(),
        };
        rows.push(DecayRow {
            obs_id: obs.obs_id.clone(),
            distance_km: distance,
            outcome: obs.mean_value,
            rel_bearing: None,
            wind_speed: None,
            covariates: Vec::new(),
            stratum,
            year,
        });
    }
    Ok(rows)
}
