//! `bound`: decay estimate in, detection boundary (and its threshold
//! sensitivity) out.

use decaybound::boundary::{boundary_ratio, epsilon_sensitivity, BoundaryRatioInputs};
use decaybound::estimate::DecayEstimate;
use decaybound::{Error, Result};

use crate::artifacts::{
    self, BoundaryArtifact, FitsArtifact, LenientDecay, TemporalRow, TemporalSection,
};
use crate::commands::ensure_out_dir;
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let input = cfg.require_input()?;
    let out = cfg.require_out()?;

    let decay = read_decay(input)?;
    let boundaries = epsilon_sensitivity(&decay, &cfg.epsilons)?;
    let temporal = temporal_section(cfg, &boundaries)?;

    let artifact = BoundaryArtifact {
        decay,
        boundaries,
        temporal,
    };
    ensure_out_dir(out)?;
    artifacts::write_json(&out.join("boundary.json"), &artifact)?;

    // The leading threshold carries the headline verdict.
    let lead = &artifact.boundaries[0];
    match (lead.d_star_km, lead.valid) {
        (None, _) => println!(
            "bound: no boundary, decay rate {:+.6}/km is not positive; framework rejected",
            artifact.decay.kappa_s
        ),
        (Some(d), false) => println!(
            "bound: d* = {d:.1} km at epsilon {}, but the decay evidence is \
             too weak to certify (t = {:.2})",
            lead.epsilon, artifact.decay.t_stat
        ),
        (Some(d), true) => println!(
            "bound: d* = {d:.1} km (95% CI {:.1} to {:.1}) at epsilon {} -> {}",
            lead.ci_low_km.unwrap_or(f64::NAN),
            lead.ci_high_km.unwrap_or(f64::NAN),
            lead.epsilon,
            out.display()
        ),
    }
    Ok(())
}

/// Accepts either a full fit artifact (the ranking winner's decay is used)
/// or a bare `{kappa_s, se}` object.
fn read_decay(path: &std::path::Path) -> Result<DecayEstimate> {
    let value: serde_json::Value = artifacts::read_json(path)?;
    if value.get("ranking").is_some() {
        let fits: FitsArtifact = serde_json::from_value(value)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        return fits.best_decay().cloned();
    }
    let lenient: LenientDecay = serde_json::from_value(value).map_err(|e| {
        Error::Input(format!(
            "{}: expected a fit artifact or a decay estimate: {e}",
            path.display()
        ))
    })?;
    Ok(lenient.into_estimate())
}

/// Persistence bounds need both physical inputs; asking for one without
/// the other is a config mistake, not a silent skip.
fn temporal_section(
    cfg: &RunConfig,
    boundaries: &[decaybound::boundary::BoundaryEstimate],
) -> Result<Option<TemporalSection>> {
    let inputs = match (cfg.treatment_intensity, cfg.diffusion) {
        (None, None) => return Ok(None),
        (Some(treatment_intensity), Some(diffusion)) => BoundaryRatioInputs {
            treatment_intensity,
            diffusion,
        },
        _ => {
            return Err(Error::Config(
                "temporal bounds need both treatment_intensity and diffusion".into(),
            ))
        }
    };
    let mut rows = Vec::new();
    for b in boundaries {
        if let Some(d_star) = b.d_star_km {
            rows.push(TemporalRow {
                epsilon: b.epsilon,
                tau_star: boundary_ratio(&inputs, d_star)?,
            });
        }
    }
    Ok(Some(TemporalSection {
        treatment_intensity: inputs.treatment_intensity,
        diffusion: inputs.diffusion,
        rows,
    }))
}
