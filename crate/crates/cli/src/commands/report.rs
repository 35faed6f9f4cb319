//! `report`: consolidates whatever artifacts a run directory holds into
//! one JSON, a plain-text summary, and tidy per-plot CSVs.

use std::fmt::Write as _;
use std::path::Path;

use decaybound::{Error, Result};

use crate::artifacts::{self, FitSummary, ReportArtifact};
use crate::commands::ensure_out_dir;
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let input = cfg.require_input()?;
    if !input.is_dir() {
        return Err(Error::Input(format!(
            "{} is not a run directory",
            input.display()
        )));
    }
    let out = cfg.require_out()?;

    let report = ReportArtifact {
        truth: artifacts::read_json_opt(&input.join("truth.json"))?,
        fits: artifacts::read_json_opt(&input.join("fits.json"))?,
        boundary: artifacts::read_json_opt(&input.join("boundary.json"))?,
        validity: artifacts::read_json_opt(&input.join("validity.json"))?,
        placebo: artifacts::read_json_opt(&input.join("placebo.json"))?,
        robustness: artifacts::read_json_opt(&input.join("robustness.json"))?,
    };
    let sections = [
        report.truth.is_some(),
        report.fits.is_some(),
        report.boundary.is_some(),
        report.validity.is_some(),
        report.placebo.is_some(),
        report.robustness.is_some(),
    ]
    .iter()
    .filter(|&&s| s)
    .count();
    if sections == 0 {
        return Err(Error::Input(format!(
            "no artifacts found in {}",
            input.display()
        )));
    }

    ensure_out_dir(out)?;
    artifacts::write_json(&out.join("report.json"), &report)?;
    artifacts::write_text(&out.join("report.txt"), &render_text(&report))?;

    if let Some(boundary) = &report.boundary {
        write_boundary_plot(&out.join("plot_boundary_sensitivity.csv"), boundary)?;
    }
    if let Some(fits) = &report.fits {
        write_curve_plot(&out.join("plot_decay_curve.csv"), fits)?;
    }
    if let Some(validity) = &report.validity {
        write_validity_plot(&out.join("plot_validity_grid.csv"), validity)?;
    }

    println!(
        "report: {sections} of 6 sections available -> {}",
        out.display()
    );
    Ok(())
}

fn render_text(report: &ReportArtifact) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "run report");
    let _ = writeln!(s, "==========");

    section(&mut s, "decay fits");
    match &report.fits {
        None => missing(&mut s),
        Some(fits) => {
            let _ = writeln!(
                s,
                "{:<17} {:<6} {:>6} {:>8} {:>12} {:>10} {:>12} {:>11} {:>8}",
                "spec", "scale", "n", "r2", "aic", "delta_aic", "kappa_per_km", "se", "t"
            );
            for f in &fits.ranking {
                let _ = writeln!(
                    s,
                    "{:<17} {:<6} {:>6} {:>8.4} {:>12.2} {:>10.2} {:>+12.6} {:>11.6} {:>8.2}",
                    f.spec,
                    f.scale,
                    f.n,
                    f.r2,
                    f.aic,
                    f.delta_aic,
                    f.decay.kappa_s,
                    f.decay.se,
                    f.decay.t_stat
                );
            }
            let dropped: usize = fits.ranking.iter().map(|f| f.dropped_nonpositive).sum();
            if dropped > 0 {
                let _ = writeln!(s, "note: {dropped} non-positive outcomes dropped on the log scale");
            }
            if let Some(strata) = &fits.strata {
                let _ = writeln!(s, "strata:");
                if strata.is_empty() {
                    let _ = writeln!(s, "  none found in the data");
                }
                for r in strata {
                    use decaybound::estimate::StratumOutcome;
                    match &r.outcome {
                        StratumOutcome::Fitted { estimate } => {
                            let _ = writeln!(
                                s,
                                "  {}: kappa {:+.6}/km (se {:.6}, n {})",
                                r.stratum, estimate.kappa_s, estimate.se, estimate.n
                            );
                        }
                        StratumOutcome::Skipped { n, reason } => {
                            let _ = writeln!(s, "  {}: skipped (n {}): {}", r.stratum, n, reason);
                        }
                    }
                }
            }
        }
    }

    section(&mut s, "detection boundary");
    match &report.boundary {
        None => missing(&mut s),
        Some(b) => {
            let _ = writeln!(
                s,
                "{:<9} {:>10} {:>10} {:>11} {:>6}",
                "epsilon", "d_star_km", "ci_low_km", "ci_high_km", "valid"
            );
            for row in &b.boundaries {
                match row.d_star_km {
                    None => {
                        let _ = writeln!(
                            s,
                            "{:<9} {:>10} {:>10} {:>11} {:>6}",
                            row.epsilon, "-", "-", "-", "no"
                        );
                    }
                    Some(d) => {
                        let _ = writeln!(
                            s,
                            "{:<9} {:>10.1} {:>10.1} {:>11.1} {:>6}",
                            row.epsilon,
                            d,
                            row.ci_low_km.unwrap_or(f64::NAN),
                            row.ci_high_km.unwrap_or(f64::NAN),
                            if row.valid { "yes" } else { "no" }
                        );
                    }
                }
            }
            if b.boundaries.iter().all(|r| r.d_star_km.is_none()) {
                let _ = writeln!(s, "note: decay rate is not positive; framework rejected");
            }
            if let Some(t) = &b.temporal {
                let _ = writeln!(
                    s,
                    "temporal bounds (treatment intensity {}, diffusion {}):",
                    t.treatment_intensity, t.diffusion
                );
                for row in &t.rows {
                    let _ = writeln!(s, "  epsilon {}: tau* {:.2}", row.epsilon, row.tau_star);
                }
            }
        }
    }

    section(&mut s, "validity screen");
    match &report.validity {
        None => missing(&mut s),
        Some(v) => {
            s.push_str(&v.render_text());
            if !v.rows.iter().any(|r| r.framework_applies) {
                let _ = writeln!(s, "note: no stratum passes the validity screen");
            }
            let noted = v.rows.iter().filter(|r| r.note.is_some()).count();
            if noted > 0 {
                let _ = writeln!(s, "note: {noted} strata carried insufficiency notes");
            }
        }
    }

    section(&mut s, "placebo study");
    match &report.placebo {
        None => missing(&mut s),
        Some(p) => {
            let _ = writeln!(
                s,
                "actual kappa {:+.6}/km (t {:.2}); rejection rate {:.3} over {} relocations; \
                 difference t {:.2}",
                p.actual.kappa_s,
                p.actual.t_stat,
                p.rejection_rate,
                p.placebo_kappas.len(),
                p.difference.t_stat
            );
        }
    }

    section(&mut s, "weighting robustness");
    match &report.robustness {
        None => missing(&mut s),
        Some(r) => {
            for m in &r.per_mode {
                match m.d_star_km {
                    Some(d) => {
                        let _ = writeln!(
                            s,
                            "{:<10} kappa {:+.6}/km, d* {:.1} km",
                            m.mode.label(),
                            m.estimate.kappa_s,
                            d
                        );
                    }
                    None => {
                        let _ = writeln!(
                            s,
                            "{:<10} kappa {:+.6}/km, no boundary",
                            m.mode.label(),
                            m.estimate.kappa_s
                        );
                    }
                }
            }
            let _ = writeln!(s, "max relative spread {:.4}", r.max_relative_spread);
        }
    }

    section(&mut s, "ground truth");
    match &report.truth {
        None => missing(&mut s),
        Some(t) => {
            match t.d_star_km {
                Some(d) => {
                    let _ = writeln!(
                        s,
                        "kappa {:+.6}/km, d* {:.1} km at epsilon {}",
                        t.kappa_s, d, t.epsilon
                    );
                }
                None => {
                    let _ = writeln!(s, "kappa {:+.6}/km, no decay boundary", t.kappa_s);
                }
            }
            if t.weak_signal {
                let _ = writeln!(s, "note: every source sits beyond detectable range");
            }
            if let Some(fits) = &report.fits {
                if let Ok(best) = fits.best_decay() {
                    if t.kappa_s != 0.0 {
                        let rel = (best.kappa_s - t.kappa_s) / t.kappa_s;
                        let _ = writeln!(
                            s,
                            "best fit kappa {:+.6}/km, relative error {:+.2}%",
                            best.kappa_s,
                            rel * 100.0
                        );
                    }
                }
            }
        }
    }

    s
}

fn section(s: &mut String, title: &str) {
    let _ = writeln!(s);
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "{}", "-".repeat(title.len()));
}

fn missing(s: &mut String) {
    let _ = writeln!(s, "not available");
}

fn write_boundary_plot(
    path: &Path,
    boundary: &crate::artifacts::BoundaryArtifact,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(&mut w, path, &["epsilon", "d_star_km", "ci_low_km", "ci_high_km"])?;
    for b in &boundary.boundaries {
        let row = [
            b.epsilon.to_string(),
            opt(b.d_star_km),
            opt(b.ci_low_km),
            opt(b.ci_high_km),
        ];
        write_row(&mut w, path, &row)?;
    }
    finish(w, path)
}

/// The winning fit evaluated over the observed distance range, at the
/// baseline of every non-distance regressor (zero wind, upwind branch off,
/// covariates at zero).
fn write_curve_plot(path: &Path, fits: &crate::artifacts::FitsArtifact) -> Result<()> {
    let Some(best) = fits.ranking.first() else {
        return Ok(());
    };
    // Log-distance terms need d > 0; the ingest pipeline guarantees
    // positive distances, so the observed minimum is a safe floor.
    let lo = fits.distance_min_km.max(f64::MIN_POSITIVE);
    let hi = fits.distance_max_km.max(lo);
    let n = 101usize;

    let mut w = csv_writer(path)?;
    write_row(&mut w, path, &["distance_km", "fitted_value"])?;
    for i in 0..n {
        let d = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let row = [d.to_string(), predict(best, d).to_string()];
        write_row(&mut w, path, &row)?;
        if hi == lo {
            break;
        }
    }
    finish(w, path)
}

fn predict(fit: &FitSummary, d: f64) -> f64 {
    let mut pred = 0.0;
    for c in &fit.coefficients {
        let x = match c.name.as_str() {
            "intercept" => 1.0,
            "distance" | "distance_downwind" => d,
            "distance_sq" => d * d,
            "log_distance" => d.ln(),
            _ => 0.0,
        };
        pred += c.estimate * x;
    }
    if fit.scale == "log" {
        // The geometric form absorbs 2 ln d into the regressand, so the
        // fitted outcome puts it back.
        let offset = if fit.spec == "geometric" { -2.0 * d.ln() } else { 0.0 };
        (pred + offset).exp()
    } else {
        pred
    }
}

fn write_validity_plot(path: &Path, validity: &decaybound::diagnose::ValidityReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(
        &mut w,
        path,
        &[
            "label",
            "stratum",
            "n",
            "kappa_s",
            "se",
            "significant",
            "framework_applies",
            "d_star_km",
        ],
    )?;
    for r in &validity.rows {
        let row = [
            r.label.clone(),
            r.stratum.clone(),
            r.n.to_string(),
            opt(r.kappa_s),
            opt(r.se),
            r.significant.to_string(),
            r.framework_applies.to_string(),
            opt(r.d_star_km),
        ];
        write_row(&mut w, path, &row)?;
    }
    finish(w, path)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path)
        .map_err(|e| Error::Input(format!("cannot create {}: {e}", path.display())))
}

fn write_row<S: AsRef<[u8]>>(
    w: &mut csv::Writer<std::fs::File>,
    path: &Path,
    row: &[S],
) -> Result<()> {
    w.write_record(row)
        .map_err(|e| Error::Internal(format!("csv write {}: {e}", path.display())))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush()
        .map_err(|e| Error::Internal(format!("csv flush {}: {e}", path.display())))
}
