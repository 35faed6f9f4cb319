//! Framework-validity assessment, placebo tests, and robustness checks.
//!
//! A stratum supports a boundary only when its fitted decay rate is
//! positive and significant at the 5% level; everywhere else the framework
//! is rejected and no boundary is reported. The placebo test re-estimates
//! the decay rate against randomly relocated sources, and the robustness
//! check reruns the pipeline under each distance weighting.

use serde::{Deserialize, Serialize};

use crate::boundary::{check_epsilon, spatial_boundary};
use crate::error::{Error, Result};
use crate::estimate::{
    decay_rows, extract_decay, fit, stratified_decay, DecayEstimate, DecayRow, SpecKind,
    StratumOutcome,
};
use crate::geo::{BoundingBox, SourceRecord, WeightMode};
use crate::ingest::TimeAveraged;
use crate::synth::random_sources;

/// Extra observations required beyond the coefficient count before a
/// stratum is considered large enough to assess.
pub const MIN_STRATUM_MARGIN: usize = 10;

/// Fewest placebo draws accepted; below this the rejection rate is too
/// coarse to mean anything.
pub const MIN_PLACEBO_SEEDS: usize = 20;

/// One assessed (data-source label, stratum) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityRow {
    pub label: String,
    pub stratum: String,
    /// Observations in the stratum.
    pub n: usize,
    /// Fitted decay rate; absent when the stratum could not be fitted.
    pub kappa_s: Option<f64>,
    pub se: Option<f64>,
    pub significant: bool,
    /// True only for a positive, significant decay rate.
    pub framework_applies: bool,
    /// Boundary distance; reported only where the framework applies.
    pub d_star_km: Option<f64>,
    /// Reason the cell was not assessed (too small, unfittable).
    pub note: Option<String>,
}

/// Share of a data source's observations sitting in applicable strata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub label: String,
    pub n_total: usize,
    pub n_applicable: usize,
    pub fraction: f64,
}

/// Consolidated per-stratum verdicts with per-source coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub rows: Vec<ValidityRow>,
    pub coverage: Vec<CoverageRow>,
}

impl ValidityReport {
    /// Derives coverage from the rows, grouping by label in first-seen
    /// order.
    fn from_rows(rows: Vec<ValidityRow>) -> Self {
        let mut order: Vec<String> = Vec::new();
        for r in &rows {
            if !order.contains(&r.label) {
                order.push(r.label.clone());
            }
        }
        let coverage = order
            .into_iter()
            .map(|label| {
                let total: usize = rows.iter().filter(|r| r.label == label).map(|r| r.n).sum();
                let applicable: usize = rows
                    .iter()
                    .filter(|r| r.label == label && r.framework_applies)
                    .map(|r| r.n)
                    .sum();
                CoverageRow {
                    label,
                    n_total: total,
                    n_applicable: applicable,
                    fraction: if total > 0 {
                        applicable as f64 / total as f64
                    } else {
                        0.0
                    },
                }
            })
            .collect();
        ValidityReport { rows, coverage }
    }

    /// Fixed-layout text grid; deterministic for identical reports.
    pub fn render_text(&self) -> String {
        let header = [
            "label", "stratum", "n", "kappa", "se", "signif", "applies", "d_star_km", "note",
        ];
        let mut cells: Vec<[String; 9]> = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            cells.push([
                r.label.clone(),
                r.stratum.clone(),
                r.n.to_string(),
                r.kappa_s.map_or_else(|| "-".into(), |v| format!("{v:+.6}")),
                r.se.map_or_else(|| "-".into(), |v| format!("{v:.6}")),
                yes_no(r.significant).into(),
                yes_no(r.framework_applies).into(),
                r.d_star_km.map_or_else(|| "-".into(), |v| format!("{v:.1}")),
                r.note.clone().unwrap_or_default(),
            ]);
        }
        let mut widths: [usize; 9] = header.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let render_row = |row: &[String]| -> String {
            row.iter()
                .zip(widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };

        let mut out = String::new();
        out.push_str(&render_row(&header.map(String::from)));
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
        out.push('\n');
        for row in &cells {
            out.push_str(&render_row(row));
            out.push('\n');
        }
        for c in &self.coverage {
            out.push_str(&format!(
                "{}: {} of {} observations ({:.0}%) in applicable strata\n",
                c.label,
                c.n_applicable,
                c.n_total,
                100.0 * c.fraction
            ));
        }
        out
    }
}

fn yes_no(v: bool) -> &'static str {
    if v {
        "yes"
    } else {
        "no"
    }
}

/// Already-estimated stratum summary, for assessing published results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumInput {
    pub label: String,
    pub stratum: String,
    pub n: usize,
    pub kappa_s: f64,
    pub se: f64,
}

/// Applies the validity rule to precomputed per-stratum estimates.
pub fn assess_precomputed(inputs: &[StratumInput], epsilon: f64) -> Result<ValidityReport> {
    check_epsilon(epsilon)?;
    if inputs.is_empty() {
        return Err(Error::Input("no strata to assess".into()));
    }
    let mut rows = Vec::with_capacity(inputs.len());
    for input in inputs {
        if input.n == 0 {
            return Err(Error::Input(format!(
                "stratum {}/{} has n = 0",
                input.label, input.stratum
            )));
        }
        let estimate = DecayEstimate::from_parts(
            input.kappa_s,
            input.se,
            input.n,
            input.stratum.clone(),
        );
        let boundary = spatial_boundary(&estimate, epsilon)?;
        rows.push(ValidityRow {
            label: input.label.clone(),
            stratum: input.stratum.clone(),
            n: input.n,
            kappa_s: Some(input.kappa_s),
            se: Some(input.se),
            significant: estimate.significant(),
            framework_applies: boundary.valid,
            d_star_km: if boundary.valid { boundary.d_star_km } else { None },
            note: None,
        });
    }
    Ok(ValidityReport::from_rows(rows))
}

/// Fits each stratum, converts to boundaries, and renders the verdicts.
///
/// Strata smaller than the coefficient count plus [`MIN_STRATUM_MARGIN`]
/// are flagged insufficient rather than trusted or failed.
pub fn validity_assessment(
    rows: &[DecayRow],
    label: &str,
    strata: &[String],
    spec: SpecKind,
    epsilon: f64,
) -> Result<ValidityReport> {
    check_epsilon(epsilon)?;
    if rows.is_empty() {
        return Err(Error::Input("no observations to assess".into()));
    }
    let n_coeff = 1 + spec.regressor_count() + rows[0].covariates.len();
    let min_n = n_coeff + MIN_STRATUM_MARGIN;

    let mut out = Vec::new();
    for result in stratified_decay(rows, strata, spec)? {
        let stratum_n = rows.iter().filter(|r| r.stratum == result.stratum).count();
        let row = match result.outcome {
            StratumOutcome::Fitted { estimate } if stratum_n >= min_n => {
                let boundary = spatial_boundary(&estimate, epsilon)?;
                ValidityRow {
                    label: label.to_string(),
                    stratum: result.stratum,
                    n: stratum_n,
                    kappa_s: Some(estimate.kappa_s),
                    se: Some(estimate.se),
                    significant: estimate.significant(),
                    framework_applies: boundary.valid,
                    d_star_km: if boundary.valid { boundary.d_star_km } else { None },
                    note: None,
                }
            }
            StratumOutcome::Fitted { estimate } => ValidityRow {
                label: label.to_string(),
                stratum: result.stratum,
                n: stratum_n,
                kappa_s: Some(estimate.kappa_s),
                se: Some(estimate.se),
                significant: false,
                framework_applies: false,
                d_star_km: None,
                note: Some(format!("insufficient observations (n < {min_n})")),
            },
            StratumOutcome::Skipped { n, reason } => ValidityRow {
                label: label.to_string(),
                stratum: result.stratum,
                n,
                kappa_s: None,
                se: None,
                significant: false,
                framework_applies: false,
                d_star_km: None,
                note: Some(reason),
            },
        };
        out.push(row);
    }
    Ok(ValidityReport::from_rows(out))
}

/// Difference between the actual decay rate and the mean placebo rate,
/// with a two-sample standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceEstimate {
    pub value: f64,
    pub se: f64,
    pub t_stat: f64,
}

/// Placebo study settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceboConfig {
    pub n_seeds: usize,
    pub master_seed: u64,
    pub spec: SpecKind,
    pub weight_mode: WeightMode,
}

/// Outcome of a placebo study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceboResult {
    pub actual: DecayEstimate,
    /// One re-estimate per placebo seed, in seed order.
    pub placebo_kappas: Vec<DecayEstimate>,
    /// Fraction of placebo runs significant at the 5% level.
    pub rejection_rate: f64,
    pub difference: DifferenceEstimate,
}

/// Low-bias 64-bit mixer; decorrelates nearby master seeds.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Re-estimates the decay rate against randomly relocated sources.
///
/// Observation locations and outcomes stay fixed; only the source set is
/// replaced, draw by draw, with uniform random points in `bbox`. A decay
/// pattern that survives this relocation is not anchored to the sources.
pub fn placebo_test(
    averaged: &[TimeAveraged],
    sources: &[SourceRecord],
    bbox: &BoundingBox,
    config: &PlaceboConfig,
) -> Result<PlaceboResult> {
    if config.n_seeds < MIN_PLACEBO_SEEDS {
        return Err(Error::Config(format!(
            "placebo needs at least {MIN_PLACEBO_SEEDS} seeds, got {}",
            config.n_seeds
        )));
    }
    if sources.is_empty() {
        return Err(Error::Input("placebo needs at least one true source".into()));
    }

    let estimate_against = |srcs: &[SourceRecord]| -> Result<DecayEstimate> {
        let rows = decay_rows(averaged, srcs, config.weight_mode, None)?;
        extract_decay(&fit(&rows, config.spec)?)
    };

    let actual = estimate_against(sources)?;
    let mut placebo_kappas = Vec::with_capacity(config.n_seeds);
    for i in 0..config.n_seeds {
        let seed = splitmix64(config.master_seed ^ (i as u64));
        let fake = random_sources(sources.len(), bbox, seed)?;
        placebo_kappas.push(estimate_against(&fake)?);
    }

    let n = placebo_kappas.len() as f64;
    let rejection_rate = placebo_kappas.iter().filter(|e| e.significant()).count() as f64 / n;
    let mean = placebo_kappas.iter().map(|e| e.kappa_s).sum::<f64>() / n;
    let var = placebo_kappas
        .iter()
        .map(|e| (e.kappa_s - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let value = actual.kappa_s - mean;
    let se = (actual.se.powi(2) + var / n).sqrt();
    let t_stat = if se > 0.0 {
        value / se
    } else if value == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(value)
    };

    Ok(PlaceboResult {
        actual,
        placebo_kappas,
        rejection_rate,
        difference: DifferenceEstimate { value, se, t_stat },
    })
}

/// Decay rate and boundary under one distance weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub mode: WeightMode,
    pub estimate: DecayEstimate,
    pub d_star_km: Option<f64>,
}

/// Sensitivity of the decay rate to the source-weighting choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub per_mode: Vec<ModeResult>,
    /// (max - min) decay rate over the mean absolute rate; 0 when all
    /// modes agree exactly.
    pub max_relative_spread: f64,
}

/// Reruns the distance pipeline under each weighting and reports the
/// relative spread of the fitted decay rates.
pub fn distance_measure_robustness(
    averaged: &[TimeAveraged],
    sources: &[SourceRecord],
    spec: SpecKind,
    epsilon: f64,
    modes: &[WeightMode],
) -> Result<RobustnessResult> {
    check_epsilon(epsilon)?;
    let mut seen = Vec::new();
    for &m in modes {
        if !seen.contains(&m) {
            seen.push(m);
        }
    }
    if seen.is_empty() {
        return Err(Error::Config("no weight modes requested".into()));
    }

    let mut per_mode = Vec::with_capacity(seen.len());
    for mode in seen {
        let rows = decay_rows(averaged, sources, mode, None)?;
        let estimate = extract_decay(&fit(&rows, spec)?)?;
        let d_star_km = spatial_boundary(&estimate, epsilon)?.d_star_km;
        per_mode.push(ModeResult {
            mode,
            estimate,
            d_star_km,
        });
    }

    let kappas: Vec<f64> = per_mode.iter().map(|m| m.estimate.kappa_s).collect();
    let max = kappas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = kappas.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean_abs = kappas.iter().map(|k| k.abs()).sum::<f64>() / kappas.len() as f64;
    let max_relative_spread = if max == min {
        0.0
    } else if mean_abs > 0.0 {
        (max - min) / mean_abs
    } else {
        f64::INFINITY
    };

    Ok(RobustnessResult {
        per_mode,
        max_relative_spread,
    })
}
