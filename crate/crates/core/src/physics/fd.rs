//! Finite-difference oracle for the steady radial diffusion-decay equation.
//!
//! Solves D(C'' + 2C'/r) - lambda0*C = 0 directly in C (no substitution),
//! so the result is an independent check on the closed-form field. Interior
//! nodes use second-order three-point stencils valid on non-uniform grids.
//! The inner boundary pins the closed-form amplitude; the outer boundary
//! imposes the outgoing-decay condition C' + (kappa_s + 1/r)C = 0, which is
//! how "C -> 0 at infinity" acts on a truncated domain. A hard zero at
//! r_max would contaminate the outer part of the grid with a spurious
//! growing mode of relative size exp(-2 kappa_s (r_max - r)).

use crate::error::{Error, Result};

use super::{helmholtz_field, PhysicalParams};

/// Minimum number of grid nodes accepted by the oracle.
pub const FD_MIN_NODES: usize = 200;

/// Second-order finite-difference solution of the radial diffusion-decay
/// equation on `r_grid`, for comparison against the closed-form field.
///
/// The grid must be strictly ascending, strictly positive, and have at
/// least [`FD_MIN_NODES`] nodes; accuracy statements assume it spans about
/// [0.01/kappa_s, 10/kappa_s].
pub fn helmholtz_fd_oracle(q: f64, params: &PhysicalParams, r_grid: &[f64]) -> Result<Vec<f64>> {
    let n = r_grid.len();
    if n < FD_MIN_NODES {
        return Err(Error::Oracle(format!(
            "grid too coarse: {n} nodes, need at least {FD_MIN_NODES}"
        )));
    }
    if r_grid[0] <= 0.0 || r_grid.iter().any(|r| !r.is_finite()) {
        return Err(Error::Oracle("grid must be positive and finite".into()));
    }
    if r_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Oracle("grid must be strictly ascending".into()));
    }

    let d = params.diffusivity();
    let lambda = params.decay_rate();
    let kappa = params.kappa_s();

    // Tridiagonal rows a_i*C_{i-1} + b_i*C_i + c_i*C_{i+1} = rhs_i.
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    // Inner Dirichlet row: amplitude matched to the closed form.
    b[0] = 1.0;
    rhs[0] = helmholtz_field(q, params, r_grid[0])?;

    for i in 1..n - 1 {
        let hm = r_grid[i] - r_grid[i - 1];
        let hp = r_grid[i + 1] - r_grid[i];
        let r = r_grid[i];
        // Non-uniform three-point stencils for C'' and C'.
        let (d2m, d2c, d2p) = (
            2.0 / (hm * (hm + hp)),
            -2.0 / (hm * hp),
            2.0 / (hp * (hm + hp)),
        );
        let (d1m, d1c, d1p) = (
            -hp / (hm * (hm + hp)),
            (hp - hm) / (hm * hp),
            hm / (hp * (hm + hp)),
        );
        a[i] = d * (d2m + 2.0 / r * d1m);
        b[i] = d * (d2c + 2.0 / r * d1c) - lambda;
        c[i] = d * (d2p + 2.0 / r * d1p);
    }

    // Outgoing-decay row at r_max with a one-sided second-order derivative
    // over the last three nodes: C'(r_max) + (kappa + 1/r_max) C(r_max) = 0.
    let h1 = r_grid[n - 2] - r_grid[n - 3];
    let h2 = r_grid[n - 1] - r_grid[n - 2];
    let alpha = h2 / (h1 * (h1 + h2));
    let beta = -(h1 + h2) / (h1 * h2);
    let gamma = (h1 + 2.0 * h2) / (h2 * (h1 + h2)) + kappa + 1.0 / r_grid[n - 1];

    // Thomas forward sweep over rows 0..n-2, expressing C_i = p_i - q_i*C_{i+1}.
    let mut p = vec![0.0; n - 1];
    let mut qq = vec![0.0; n - 1];
    p[0] = rhs[0];
    qq[0] = 0.0;
    for i in 1..n - 1 {
        let denom = b[i] - a[i] * qq[i - 1];
        if denom == 0.0 {
            return Err(Error::Oracle("singular tridiagonal system".into()));
        }
        qq[i] = c[i] / denom;
        p[i] = (rhs[i] - a[i] * p[i - 1]) / denom;
    }

    // Fold the three-entry boundary row into the swept relations.
    let beta_eff = beta - alpha * qq[n - 3];
    let denom = gamma - beta_eff * qq[n - 2];
    if denom == 0.0 {
        return Err(Error::Oracle("singular boundary row".into()));
    }
    let mut sol = vec![0.0; n];
    sol[n - 1] = (-alpha * p[n - 3] - beta_eff * p[n - 2]) / denom;
    for i in (0..n - 1).rev() {
        sol[i] = p[i] - qq[i] * sol[i + 1];
    }
    Ok(sol)
}
