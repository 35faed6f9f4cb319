//! `diagnose`: dataset plus sources in; validity screen, placebo study,
//! and distance-measure robustness out.

use decaybound::diagnose::{
    distance_measure_robustness, placebo_test, validity_assessment, PlaceboConfig,
};
use decaybound::geo::{BoundingBox, WeightMode};
use decaybound::{Error, Result};

use crate::artifacts;
use crate::commands::{ensure_out_dir, load_pipeline, LoadedData};
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let out = cfg.require_out()?;
    let data = load_pipeline(cfg)?;

    let label = cfg
        .require_input()?
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let strata = cfg.strata.clone().unwrap_or_default();

    let validity = validity_assessment(
        &data.rows,
        &label,
        &strata,
        cfg.primary_spec(),
        cfg.primary_epsilon(),
    )?;

    ensure_out_dir(out)?;
    artifacts::write_json(&out.join("validity.json"), &validity)?;
    artifacts::write_text(&out.join("validity.txt"), &validity.render_text())?;

    let placebo = placebo_test(
        &data.averaged,
        &data.sources,
        &observed_bbox(&data)?,
        &PlaceboConfig {
            n_seeds: cfg.placebo_seeds,
            master_seed: cfg.seed.unwrap_or(0),
            spec: cfg.primary_spec(),
            weight_mode: cfg.weight_mode,
        },
    )?;
    artifacts::write_json(&out.join("placebo.json"), &placebo)?;

    let robustness = distance_measure_robustness(
        &data.averaged,
        &data.sources,
        cfg.primary_spec(),
        cfg.primary_epsilon(),
        &WeightMode::ALL,
    )?;
    artifacts::write_json(&out.join("robustness.json"), &robustness)?;

    let coverage = validity
        .coverage
        .first()
        .map(|c| c.fraction * 100.0)
        .unwrap_or(0.0);
    println!(
        "diagnose: {coverage:.0}% of observations in applicable strata, \
         placebo rejection rate {:.2}, mode spread {:.3} -> {}",
        placebo.rejection_rate,
        robustness.max_relative_spread,
        out.display()
    );
    Ok(())
}

/// Placebo sources are drawn inside the observed extent so the relocated
/// geometry is comparable to the real one.
fn observed_bbox(data: &LoadedData) -> Result<BoundingBox> {
    let (mut lat_min, mut lat_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lon_min, mut lon_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for obs in &data.averaged {
        lat_min = lat_min.min(obs.location.lat());
        lat_max = lat_max.max(obs.location.lat());
        lon_min = lon_min.min(obs.location.lon());
        lon_max = lon_max.max(obs.location.lon());
    }
    BoundingBox::new(lat_min, lat_max, lon_min, lon_max).map_err(|_| {
        Error::Input(format!(
            "observations span no area (lat {lat_min}..{lat_max}, lon {lon_min}..{lon_max}); \
             placebo relocation needs spatial spread"
        ))
    })
}
