//! Least squares with named columns, HC1 robust covariance, and AIC
//! ranking across functional forms.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{build_design, DecayEstimate, DecayRow, Design, OutcomeScale, SpecKind};

/// Relative tolerance on pivoted R diagonals when declaring columns
/// collinear.
const RANK_TOL: f64 = 1e-10;

/// Floor on RSS so a perfectly interpolated fit still yields a finite AIC.
const RSS_FLOOR: f64 = 1e-300;

/// A fitted regression with robust uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub spec: SpecKind,
    pub scale: OutcomeScale,
    /// Column names aligned with `coefficients`, `robust_se`, and `cov`.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// HC1 sandwich standard errors.
    pub robust_se: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub n: usize,
    pub k: usize,
    pub rss: f64,
    pub r2: f64,
    /// n ln(RSS/n) + 2 (k + 1): Gaussian concentrated likelihood with the
    /// variance counted as a parameter.
    pub aic: f64,
    pub dropped_nonpositive: usize,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coefficients[i])
    }

    pub fn se(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.robust_se[i])
    }
}

/// Ordinary least squares on a built design.
///
/// Rank deficiency is detected by column-pivoted QR and reported as a
/// singular-design error naming the offending columns. The covariance is
/// the HC1 sandwich `(n/(n-k)) (X'X)^-1 X' diag(e^2) X (X'X)^-1`.
pub fn fit_ols(design: &Design) -> Result<RegressionFit> {
    // The HC1 correction n/(n-k) needs at least one residual degree of
    // freedom. Pipeline callers enforce the stricter n > k + 1 when
    // building designs.
    let n = design.y.len();
    let k = design.names.len();
    if n <= k {
        return Err(Error::Input(format!(
            "need more than {k} observations for {k} coefficients, got {n}"
        )));
    }

    let x = DMatrix::from_fn(n, k, |i, j| design.x[i][j]);
    let y = DVector::from_column_slice(&design.y);

    let qr = x.clone().col_piv_qr();
    let r = qr.r();
    let perm = {
        // Track where each pivoted position came from in the original
        // column order.
        let mut idx = DMatrix::from_fn(1, k, |_, j| j as f64);
        qr.p().permute_columns(&mut idx);
        (0..k).map(|j| idx[(0, j)] as usize).collect::<Vec<usize>>()
    };
    let r00 = r[(0, 0)].abs().max(f64::MIN_POSITIVE);
    let rank = (0..k).take_while(|&j| r[(j, j)].abs() > r00 * RANK_TOL).count();
    if rank < k {
        let mut columns: Vec<String> =
            perm[rank..].iter().map(|&j| design.names[j].clone()).collect();
        columns.sort();
        return Err(Error::SingularDesign { columns });
    }

    // X P = Q R, so the permuted coefficients solve R gamma = Q' y and
    // scatter back through the pivot order.
    let qty = qr.q().transpose() * &y;
    let gamma = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Internal("QR back-substitution failed".into()))?;
    let mut beta = vec![0.0f64; k];
    for j in 0..k {
        beta[perm[j]] = gamma[j];
    }

    let beta_v = DVector::from_column_slice(&beta);
    let e = &y - &x * &beta_v;
    let rss: f64 = e.dot(&e);
    let mean_y = y.sum() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let aic = n as f64 * (rss.max(RSS_FLOOR) / n as f64).ln() + 2.0 * (k as f64 + 1.0);

    // (X'X)^-1 = P R^-1 R^-T P' from the pivoted factorization.
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Internal("R inversion failed".into()))?;
    let bread_perm = &rinv * rinv.transpose();
    let mut bread = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            bread[(perm[i], perm[j])] = bread_perm[(i, j)];
        }
    }

    let mut meat = DMatrix::zeros(k, k);
    for i in 0..n {
        let xi = x.row(i);
        let w = e[i] * e[i];
        for a in 0..k {
            for b in 0..k {
                meat[(a, b)] += w * xi[a] * xi[b];
            }
        }
    }
    let dof_scale = n as f64 / (n - k) as f64;
    let v = dof_scale * (&bread * meat * &bread);

    let robust_se: Vec<f64> = (0..k).map(|j| v[(j, j)].max(0.0).sqrt()).collect();
    let cov: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| v[(i, j)]).collect())
        .collect();

    Ok(RegressionFit {
        spec: design.spec,
        scale: design.scale,
        names: design.names.clone(),
        coefficients: beta,
        robust_se,
        cov,
        n,
        k,
        rss,
        r2,
        aic,
        dropped_nonpositive: design.dropped_nonpositive,
    })
}

/// Pulls the decay rate out of a fit: the negated slope on `distance`, or
/// on `distance_downwind` for the asymmetric form (decay along the wind is
/// the physically transported direction).
pub fn extract_decay(fit: &RegressionFit) -> Result<DecayEstimate> {
    let column = ["distance", "distance_downwind"]
        .into_iter()
        .find(|c| fit.coefficient(c).is_some())
        .ok_or_else(|| {
            Error::Input(format!(
                "fit has no distance coefficient (columns: {:?})",
                fit.names
            ))
        })?;
    let kappa_s = -fit.coefficient(column).expect("column present");
    let se = fit.se(column).expect("column present");
    Ok(DecayEstimate::from_parts(kappa_s, se, fit.n, String::new()))
}

/// One entry of an AIC ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFit {
    pub fit: RegressionFit,
    /// AIC above the best model in the comparison (0 for the winner).
    pub delta_aic: f64,
}

/// Fits every spec on one shared outcome scale and ranks by ascending AIC.
///
/// A single scale keeps the likelihoods comparable; mixing level and log
/// outcomes would make the AIC ordering meaningless.
pub fn compare_specs(
    rows: &[DecayRow],
    specs: &[SpecKind],
    scale: OutcomeScale,
) -> Result<Vec<RankedFit>> {
    if specs.len() < 2 {
        return Err(Error::Config(format!(
            "need at least two specs to compare, got {}",
            specs.len()
        )));
    }
    let mut fits = Vec::with_capacity(specs.len());
    for &spec in specs {
        let design = build_design(rows, spec, scale, &[])?;
        fits.push(fit_ols(&design)?);
    }
    fits.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    let best = fits[0].aic;
    Ok(fits
        .into_iter()
        .map(|fit| RankedFit {
            delta_aic: fit.aic - best,
            fit,
        })
        .collect())
}
