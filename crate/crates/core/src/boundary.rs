//! Spatial boundary distances derived from decay estimates.
//!
//! A positive, significant decay rate maps to the contour distance
//! `d* = ln(1/epsilon) / kappa_s` where the field falls to the fraction
//! `epsilon` of its reference level. Uncertainty propagates by the delta
//! method on `1/kappa`; a non-positive decay rate yields no boundary and
//! marks the framework as rejected for that stratum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{DecayEstimate, Z_CRIT_95};

/// Fixed constant linking the spatial and temporal boundaries:
/// `d* / tau* = 3.32 lambda sqrt(delta)`.
pub const BOUNDARY_RATIO_CONST: f64 = 3.32;

/// A spatial boundary with its confidence band and validity verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEstimate {
    /// Contour distance in km; absent when the decay rate is not positive.
    pub d_star_km: Option<f64>,
    /// Delta-method 95% band, clipped below at 0.
    pub ci_low_km: Option<f64>,
    pub ci_high_km: Option<f64>,
    pub epsilon: f64,
    /// The decay estimate the boundary was derived from.
    pub kappa_source: DecayEstimate,
    /// True only for a positive decay rate significant at the 5% level.
    pub valid: bool,
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && 0.0 < epsilon && epsilon < 1.0) {
        return Err(Error::Config(format!(
            "epsilon must lie strictly between 0 and 1, got {epsilon}"
        )));
    }
    Ok(())
}

/// Converts a decay estimate into a boundary distance.
///
/// The boundary exists whenever `kappa_s > 0`; the `valid` flag
/// additionally requires 5% significance. The confidence band is
/// `d* (1 -+ z se / kappa)` with the lower edge clipped at 0.
pub fn spatial_boundary(decay: &DecayEstimate, epsilon: f64) -> Result<BoundaryEstimate> {
    check_epsilon(epsilon)?;
    if !decay.kappa_s.is_finite() || !decay.se.is_finite() || decay.se < 0.0 {
        return Err(Error::Input(format!(
            "decay estimate must be finite with se >= 0, got kappa {} se {}",
            decay.kappa_s, decay.se
        )));
    }

    if decay.kappa_s <= 0.0 {
        return Ok(BoundaryEstimate {
            d_star_km: None,
            ci_low_km: None,
            ci_high_km: None,
            epsilon,
            kappa_source: decay.clone(),
            valid: false,
        });
    }

    let d_star = (1.0 / epsilon).ln() / decay.kappa_s;
    let half_width = Z_CRIT_95 * decay.se / decay.kappa_s;
    Ok(BoundaryEstimate {
        d_star_km: Some(d_star),
        ci_low_km: Some((d_star * (1.0 - half_width)).max(0.0)),
        ci_high_km: Some(d_star * (1.0 + half_width)),
        epsilon,
        kappa_source: decay.clone(),
        valid: decay.significant(),
    })
}

/// Boundary at each requested contour fraction.
///
/// Smaller fractions always push the boundary outward; the distances obey
/// `d*(e1) / d*(e2) = ln(1/e1) / ln(1/e2)` identically in the decay rate.
pub fn epsilon_sensitivity(
    decay: &DecayEstimate,
    epsilons: &[f64],
) -> Result<Vec<BoundaryEstimate>> {
    if epsilons.is_empty() {
        return Err(Error::Config("epsilon list is empty".into()));
    }
    epsilons
        .iter()
        .map(|&e| spatial_boundary(decay, e))
        .collect()
}

/// Physical inputs of the spatial-to-temporal boundary conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRatioInputs {
    /// Treatment intensity, 1/time.
    pub treatment_intensity: f64,
    /// Diffusion coefficient, km^2/time.
    pub diffusion: f64,
}

impl BoundaryRatioInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.treatment_intensity.is_finite() && self.treatment_intensity > 0.0) {
            return Err(Error::Config(format!(
                "treatment intensity must be finite and positive, got {}",
                self.treatment_intensity
            )));
        }
        if !(self.diffusion.is_finite() && self.diffusion > 0.0) {
            return Err(Error::Config(format!(
                "diffusion must be finite and positive, got {}",
                self.diffusion
            )));
        }
        Ok(())
    }
}

/// Temporal boundary implied by a spatial one:
/// `tau* = d* / (3.32 lambda sqrt(delta))`.
pub fn boundary_ratio(inputs: &BoundaryRatioInputs, d_star_km: f64) -> Result<f64> {
    inputs.validate()?;
    if !(d_star_km.is_finite() && d_star_km > 0.0) {
        return Err(Error::Input(format!(
            "d_star must be finite and positive, got {d_star_km}"
        )));
    }
    Ok(d_star_km / (BOUNDARY_RATIO_CONST * inputs.treatment_intensity * inputs.diffusion.sqrt()))
}
