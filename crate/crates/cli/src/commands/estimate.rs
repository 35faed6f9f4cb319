//! `estimate`: dataset plus sources in, ranked decay fits out.

use decaybound::estimate::{
    compare_specs, extract_decay, fit, stratified_decay, RankedFit, RegressionFit,
};
use decaybound::Result;

use crate::artifacts::{self, CoefficientRow, FitSummary, FitsArtifact};
use crate::commands::{ensure_out_dir, load_pipeline};
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let out = cfg.require_out()?;
    let data = load_pipeline(cfg)?;

    // A multi-spec request is an AIC race on one shared outcome scale; the
    // leading spec picks that scale. A single spec just fits.
    let ranking: Vec<RankedFit> = if cfg.specs.len() >= 2 {
        compare_specs(&data.rows, &cfg.specs, cfg.primary_spec().default_scale())?
    } else {
        vec![RankedFit {
            fit: fit(&data.rows, cfg.primary_spec())?,
            delta_aic: 0.0,
        }]
    };

    let summaries = ranking
        .iter()
        .map(summarize)
        .collect::<Result<Vec<_>>>()?;

    let best_spec = ranking[0].fit.spec;
    let strata = match &cfg.strata {
        Some(labels) => Some(stratified_decay(&data.rows, labels, best_spec)?),
        None => None,
    };

    let (mut dmin, mut dmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in &data.rows {
        dmin = dmin.min(row.distance_km);
        dmax = dmax.max(row.distance_km);
    }

    let artifact = FitsArtifact {
        input: cfg.require_input()?.display().to_string(),
        schema: data.schema,
        weight_mode: cfg.weight_mode.label().to_string(),
        policy: cfg.policy,
        audit: data.audit,
        n_units: data.averaged.len(),
        distance_min_km: dmin,
        distance_max_km: dmax,
        ranking: summaries,
        strata,
    };

    ensure_out_dir(out)?;
    artifacts::write_json(&out.join("fits.json"), &artifact)?;

    let best = &artifact.ranking[0];
    println!(
        "estimate: best spec {} on {} units, kappa {:+.6}/km (t = {:.2}) -> {}",
        best.spec,
        best.n,
        best.decay.kappa_s,
        best.decay.t_stat,
        out.display()
    );
    Ok(())
}

fn summarize(ranked: &RankedFit) -> Result<FitSummary> {
    let f: &RegressionFit = &ranked.fit;
    let decay = extract_decay(f)?;
    let coefficients = f
        .names
        .iter()
        .zip(&f.coefficients)
        .zip(&f.robust_se)
        .map(|((name, &estimate), &se)| CoefficientRow {
            name: name.clone(),
            estimate,
            se,
        })
        .collect();
    Ok(FitSummary {
        spec: f.spec.label().to_string(),
        scale: scale_label(f.scale),
        n: f.n,
        dropped_nonpositive: f.dropped_nonpositive,
        r2: f.r2,
        aic: f.aic,
        delta_aic: ranked.delta_aic,
        coefficients,
        decay,
    })
}

fn scale_label(scale: decaybound::estimate::OutcomeScale) -> String {
    match scale {
        decaybound::estimate::OutcomeScale::Level => "level".to_string(),
        decaybound::estimate::OutcomeScale::Log => "log".to_string(),
    }
}
