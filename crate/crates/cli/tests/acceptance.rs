//! Acceptance suite: the release gate for this workspace. Each test checks
//! one criterion end to end at its stated tolerance and prints a single
//! PASS line (visible with `--nocapture`); a failed assertion is the FAIL
//! line. Expected numbers are frozen reference values, recomputed here
//! from scratch rather than imported from the library under test.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use decaybound::boundary::spatial_boundary;
use decaybound::diagnose::{
    assess_precomputed, placebo_test, validity_assessment, PlaceboConfig, StratumInput,
};
use decaybound::estimate::{
    decay_rows, extract_decay, fit, fit_superposition, superposition_init, DecayEstimate,
    SpecKind, SuperpositionObs,
};
use decaybound::geo::{haversine, BoundingBox, GeoPoint, SourceRecord, WeightMode};
use decaybound::ingest::time_average;
use decaybound::physics::{helmholtz_fd_oracle, helmholtz_field, PhysicalParams};
use decaybound::synth::{generate, BackgroundMode, ScenarioSpec, UrbanCenter};

// ---------------------------------------------------------------------
// Shared fixtures and small deterministic RNG (independent of the
// library's generators).

fn xorshift(state: &mut u64) -> f64 {
    *state ^= *state << 13;
    *state ^= *state >> 7;
    *state ^= *state << 17;
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

fn gaussian(state: &mut u64) -> f64 {
    let u1 = xorshift(state).max(1e-12);
    let u2 = xorshift(state);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn test_bbox() -> BoundingBox {
    BoundingBox::new(37.0, 41.0, -84.0, -78.0).unwrap()
}

fn source(id: &str, lat: f64, lon: f64, capacity: f64, emissions: f64) -> SourceRecord {
    SourceRecord {
        source_id: id.into(),
        location: GeoPoint::new(lat, lon).unwrap(),
        capacity_mw: capacity,
        emission_rate: emissions,
        region_tag: "WV".into(),
    }
}

/// Single strong source, clean decay; the workhorse recovery scenario.
fn signal_scenario(seed: u64, noise: f64, n_obs: usize) -> ScenarioSpec {
    ScenarioSpec {
        sources: vec![source("p1", 39.0, -81.0, 1000.0, 1.0)],
        params: PhysicalParams::new(1.0, 1e-4).unwrap(),
        n_obs,
        noise_sigma: noise,
        background_mode: BackgroundMode::None,
        background_level: 0.0,
        urban_centers: Vec::new(),
        seed,
        bbox: test_bbox(),
    }
}

/// Faint source outside the west edge, strong urban hub outside the east
/// edge: outcomes rise with source distance, the opposite of decay.
fn urban_scenario(seed: u64) -> ScenarioSpec {
    let mut spec = signal_scenario(seed, 0.2, 250);
    spec.sources[0].location = GeoPoint::new(39.0, -86.0).unwrap();
    spec.sources[0].emission_rate = 1e-6;
    spec.background_mode = BackgroundMode::UrbanGradient;
    spec.urban_centers = vec![UrbanCenter {
        location: GeoPoint::new(39.0, -76.5).unwrap(),
        amplitude: 30.0,
    }];
    spec
}

/// Several mid-strength sources over a constant background, so the decay
/// signal stays local to each source and relocated sources find mostly
/// flat outcomes.
fn multi_source_scenario(seed: u64) -> ScenarioSpec {
    let mut spec = signal_scenario(seed, 0.3, 800);
    spec.sources = vec![
        source("p0", 37.7, -83.0, 750.0, 150.0),
        source("p1", 37.9, -79.2, 750.0, 150.0),
        source("p2", 39.1, -81.1, 750.0, 150.0),
        source("p3", 40.2, -83.2, 750.0, 150.0),
        source("p4", 40.4, -79.0, 750.0, 150.0),
    ];
    spec.params = PhysicalParams::new(1.0, 0.0016).unwrap();
    spec.background_mode = BackgroundMode::Constant;
    spec.background_level = 1.0;
    spec
}

// ---------------------------------------------------------------------

#[test]
fn criterion_01_reference_boundaries_within_two_percent() {
    let start = Instant::now();
    let cases = [
        (0.00200, 1_153.0),
        (0.00112, 2_062.0),
        (0.00088, 2_631.0),
        (0.00020, 11_352.0),
    ];
    for (kappa, expected) in cases {
        let decay = DecayEstimate::from_parts(kappa, 1e-5, 1_000, String::new());
        let b = spatial_boundary(&decay, 0.1).unwrap();
        let d = b.d_star_km.expect("positive rate has a boundary");
        let rel = (d - expected).abs() / expected;
        assert!(
            rel < 0.02,
            "criterion 1: FAIL kappa {kappa}: d* {d:.1} vs {expected} (rel {rel:.4})"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "criterion 1: FAIL took {elapsed:?}");
    println!("criterion 1: PASS four reference boundaries within 2% in {elapsed:?}");
}

#[test]
fn criterion_02_threshold_sensitivity_and_exact_ratio() {
    let decay = DecayEstimate::from_parts(0.00200, 1e-5, 1_000, String::new());
    let d01 = spatial_boundary(&decay, 0.01).unwrap().d_star_km.unwrap();
    let d10 = spatial_boundary(&decay, 0.1).unwrap().d_star_km.unwrap();

    assert!(
        (d01 - 2_302.6).abs() < 0.05,
        "criterion 2: FAIL d*(0.01) = {d01:.2}, expected 2302.6"
    );
    let rel = (d01 - 2_300.0).abs() / 2_300.0;
    assert!(rel < 0.002, "criterion 2: FAIL {d01:.1} vs 2300 (rel {rel:.5})");

    // ln(100)/ln(10) rounds to exactly 2 in 64-bit floats, and the shared
    // division by kappa preserves it, so this holds with equality.
    assert_eq!(d01 / d10, 2.0, "criterion 2: FAIL ratio {}", d01 / d10);
    println!("criterion 2: PASS d*(0.01) = {d01:.1} km, d*(0.01)/d*(0.1) exactly 2");
}

#[test]
fn criterion_03_validity_grid_eight_for_eight() {
    // (label, stratum, n, kappa, se, expected verdict)
    let rows = [
        ("no2", "coal_near", 15_017, 0.00112, 0.00012, true),
        ("no2", "coal_far", 46_336, -0.00123, 0.00002, false),
        ("no2", "noncoal_near", 24_309, 0.00020, 0.00009, true),
        ("no2", "noncoal_far", 103_902, -0.00080, 0.00001, false),
        ("pm25", "coal_near", 131, 0.00200, 0.00092, true),
        ("pm25", "coal_far", 58, -0.00021, 0.00033, false),
        ("pm25", "noncoal_near", 398, 0.00088, 0.00031, true),
        ("pm25", "noncoal_far", 204, -0.00076, 0.00026, false),
    ];
    let inputs: Vec<StratumInput> = rows
        .iter()
        .map(|&(label, stratum, n, kappa_s, se, _)| StratumInput {
            label: label.into(),
            stratum: stratum.into(),
            n,
            kappa_s,
            se,
        })
        .collect();
    let report = assess_precomputed(&inputs, 0.1).unwrap();
    let mut hits = 0;
    for (row, &(label, stratum, .., expected)) in report.rows.iter().zip(&rows) {
        assert_eq!(
            row.framework_applies, expected,
            "criterion 3: FAIL {label}/{stratum}: applies {} vs {expected}",
            row.framework_applies
        );
        hits += 1;
    }
    assert_eq!(hits, 8);
    println!("criterion 3: PASS validity verdicts 8/8");
}

#[test]
fn criterion_04_closed_form_matches_fd_oracle() {
    let start = Instant::now();
    let params = PhysicalParams::new(1.0, 4e-6).unwrap();
    let kappa = params.kappa_s();
    let q = 120.0;
    let (lo, hi) = (0.01 / kappa, 10.0 / kappa);

    let max_rel = |n: usize| -> f64 {
        let grid: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let fd = helmholtz_fd_oracle(q, &params, &grid).unwrap();
        grid.iter()
            .zip(&fd)
            .map(|(&r, &c_fd)| {
                let c = helmholtz_field(q, &params, r).unwrap();
                ((c - c_fd) / c).abs()
            })
            .fold(0.0, f64::max)
    };

    let coarse = max_rel(1_000);
    assert!(coarse < 0.01, "criterion 4: FAIL max rel error {coarse:.5} at 1000 nodes");

    // 2n-1 nodes halve the step; a second-order scheme cuts the error ~4x.
    let fine = max_rel(1_999);
    let ratio = coarse / fine;
    assert!(
        (3.0..=5.0).contains(&ratio),
        "criterion 4: FAIL error ratio {ratio:.2} ({coarse:.2e} -> {fine:.2e})"
    );

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(5), "criterion 4: FAIL took {elapsed:?}");
    println!(
        "criterion 4: PASS max rel error {coarse:.2e} at 1000 nodes, \
         doubling ratio {ratio:.2}, in {elapsed:?}"
    );
}

#[test]
fn criterion_05_estimator_recovery_bias_and_coverage() {
    let start = Instant::now();
    let n_seeds = 200;
    let mut kappas = Vec::with_capacity(n_seeds);
    let mut covered = 0usize;
    let mut kappa_true = 0.0;

    for seed in 0..n_seeds as u64 {
        let scenario = signal_scenario(seed, 0.3, 1_000);
        let data = generate(&scenario).unwrap();
        kappa_true = data.truth.kappa_s;
        let averaged = time_average(&data.observations).unwrap();
        let rows =
            decay_rows(&averaged, &scenario.sources, WeightMode::Nearest, None).unwrap();
        let est = extract_decay(&fit(&rows, SpecKind::Both).unwrap()).unwrap();
        if (est.kappa_s - kappa_true).abs() <= 1.96 * est.se {
            covered += 1;
        }
        kappas.push(est.kappa_s);
    }

    let mean = kappas.iter().sum::<f64>() / n_seeds as f64;
    let bias = (mean - kappa_true) / kappa_true;
    let coverage = covered as f64 / n_seeds as f64;
    let elapsed = start.elapsed();

    assert!(bias.abs() < 0.02, "criterion 5: FAIL bias {bias:+.4}");
    assert!(
        (0.90..=0.99).contains(&coverage),
        "criterion 5: FAIL coverage {coverage:.3}"
    );
    assert!(elapsed < Duration::from_secs(60), "criterion 5: FAIL took {elapsed:?}");
    println!(
        "criterion 5: PASS bias {bias:+.4}, coverage {coverage:.3} \
         over {n_seeds} seeds in {elapsed:?}"
    );
}

#[test]
fn criterion_06_diagnostic_discrimination() {
    let n_seeds = 100;
    let mut plume_ok = 0usize;
    let mut urban_ok = 0usize;

    for seed in 0..n_seeds as u64 {
        let scenario = signal_scenario(seed, 0.2, 250);
        let data = generate(&scenario).unwrap();
        let averaged = time_average(&data.observations).unwrap();
        let rows =
            decay_rows(&averaged, &scenario.sources, WeightMode::Nearest, None).unwrap();
        let report = validity_assessment(&rows, "plume", &[], SpecKind::LogLinear, 0.1).unwrap();
        if !report.rows.is_empty() && report.rows.iter().all(|r| r.framework_applies) {
            plume_ok += 1;
        }

        let scenario = urban_scenario(seed);
        let data = generate(&scenario).unwrap();
        let averaged = time_average(&data.observations).unwrap();
        let rows =
            decay_rows(&averaged, &scenario.sources, WeightMode::Nearest, None).unwrap();
        let report = validity_assessment(&rows, "urban", &[], SpecKind::LogLinear, 0.1).unwrap();
        if report.rows.iter().all(|r| !r.framework_applies) {
            urban_ok += 1;
        }
    }

    let plume_rate = plume_ok as f64 / n_seeds as f64;
    let urban_rate = urban_ok as f64 / n_seeds as f64;
    assert!(
        plume_rate >= 0.95,
        "criterion 6: FAIL source-dominated applies in only {plume_rate:.2}"
    );
    assert!(
        urban_rate >= 0.95,
        "criterion 6: FAIL urban-gradient rejected in only {urban_rate:.2}"
    );
    println!(
        "criterion 6: PASS source-dominated applies {plume_rate:.2}, \
         urban-gradient rejected {urban_rate:.2} over {n_seeds} seeds"
    );
}

#[test]
fn criterion_07_placebo_rejection_stays_low() {
    let scenario = multi_source_scenario(12);
    let data = generate(&scenario).unwrap();
    let averaged = time_average(&data.observations).unwrap();

    let config = PlaceboConfig {
        n_seeds: 50,
        master_seed: 20_200_615,
        spec: SpecKind::LogLinear,
        weight_mode: WeightMode::Nearest,
    };
    let result = placebo_test(&averaged, &scenario.sources, &scenario.bbox, &config).unwrap();

    assert!(
        result.actual.t_stat.abs() > 1.96,
        "criterion 7: FAIL actual t {:.2}",
        result.actual.t_stat
    );
    assert!(
        result.rejection_rate <= 0.10,
        "criterion 7: FAIL placebo rejection rate {:.3}",
        result.rejection_rate
    );
    println!(
        "criterion 7: PASS actual t {:.2}, placebo rejection {:.3} over 50 seeds",
        result.actual.t_stat, result.rejection_rate
    );
}

#[test]
fn criterion_08_superposition_recovery() {
    let sources = [
        GeoPoint::new(38.1, -82.6).unwrap(),
        GeoPoint::new(39.4, -80.2).unwrap(),
        GeoPoint::new(40.3, -82.9).unwrap(),
    ];
    let scales = [150.0, 90.0, 200.0];
    let kappa_true = 0.01;

    // Scattered points, at least 5 km from every source so the 1/d pole
    // stays out of the sample.
    let sample = |state: &mut u64, n: usize| -> Vec<Vec<f64>> {
        let mut all = Vec::with_capacity(n);
        while all.len() < n {
            let lat = 37.0 + 4.0 * xorshift(state);
            let lon = -84.0 + 6.0 * xorshift(state);
            let p = GeoPoint::new(lat, lon).unwrap();
            let d: Vec<f64> = sources.iter().map(|s| haversine(s, &p)).collect();
            if d.iter().all(|&x| x > 5.0) {
                all.push(d);
            }
        }
        all
    };
    let field = |d: &[f64]| -> f64 {
        d.iter()
            .zip(scales)
            .map(|(&x, s)| s * (-kappa_true * x).exp() / x)
            .sum()
    };

    // Noiseless: the fit must land on the generating rate.
    let mut state = 0x5eed1u64;
    let obs: Vec<SuperpositionObs> = sample(&mut state, 150)
        .into_iter()
        .map(|d| SuperpositionObs {
            outcome: field(&d),
            distances_km: d,
        })
        .collect();
    let kappa0 = superposition_init(&obs).unwrap();
    let fit = fit_superposition(&obs, kappa0).unwrap();
    let rel = (fit.kappa_s - kappa_true).abs() / kappa_true;
    assert!(
        rel <= 1e-4,
        "criterion 8: FAIL noiseless kappa {} (rel {rel:.2e})",
        fit.kappa_s
    );

    // Lognormal noise, sigma = 0.2: within 5% in at least 90% of seeds.
    let n_seeds = 50;
    let mut hits = 0usize;
    for seed in 0..n_seeds as u64 {
        let mut state = 0x9e3779b97f4a7c15u64 ^ (seed + 1);
        let obs: Vec<SuperpositionObs> = sample(&mut state, 150)
            .into_iter()
            .map(|d| SuperpositionObs {
                outcome: field(&d) * (0.2 * gaussian(&mut state)).exp(),
                distances_km: d,
            })
            .collect();
        let kappa0 = superposition_init(&obs).unwrap();
        let fit = fit_superposition(&obs, kappa0).unwrap();
        if (fit.kappa_s - kappa_true).abs() / kappa_true <= 0.05 {
            hits += 1;
        }
    }
    let rate = hits as f64 / n_seeds as f64;
    assert!(rate >= 0.90, "criterion 8: FAIL noisy recovery rate {rate:.2}");
    println!(
        "criterion 8: PASS noiseless rel err {rel:.1e}, \
         noisy within 5% in {rate:.2} of {n_seeds} seeds"
    );
}

#[test]
fn criterion_09_hc1_matches_brute_force_sandwich() {
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    for spec_kind in [SpecKind::LogLinear, SpecKind::Both, SpecKind::Quadratic] {
        for n in [8usize, 12, 20, 35, 50] {
            for seed in 1..=3u64 {
                if n <= spec_kind.regressor_count() + 2 {
                    continue;
                }
                let rows = noisy_rows(n, seed);
                let fitted = fit(&rows, spec_kind).unwrap();

                // Oracle: explicit normal equations and sandwich, built
                // from the raw data without the library's linear algebra.
                let (x, y) = design_for(&rows, spec_kind);
                let oracle = brute_force_hc1(&x, &y);

                for (i, (cov_row, oracle_row)) in fitted.cov.iter().zip(&oracle).enumerate() {
                    for (j, (&a, &b)) in cov_row.iter().zip(oracle_row).enumerate() {
                        let rel = (a - b).abs() / a.abs().max(b.abs());
                        worst = worst.max(rel);
                        assert!(
                            rel < 1e-10,
                            "criterion 9: FAIL {} n={n} seed={seed} cov[{i}][{j}]: \
                             {a:e} vs {b:e} (rel {rel:.2e})",
                            spec_kind.label()
                        );
                    }
                }
                checked += 1;
            }
        }
    }
    assert!(checked >= 40, "only {checked} datasets checked");
    println!(
        "criterion 9: PASS HC1 matches brute-force sandwich on {checked} \
         datasets (worst rel {worst:.1e})"
    );
}

/// Heteroskedastic decay data: noise grows with distance so the robust and
/// classical covariances genuinely differ.
fn noisy_rows(n: usize, seed: u64) -> Vec<decaybound::estimate::DecayRow> {
    let mut state = seed | 1;
    (0..n)
        .map(|i| {
            let d = 5.0 + 45.0 * xorshift(&mut state);
            let sigma = 0.1 + 0.02 * d;
            let y = (3.0 - 0.03 * d + sigma * gaussian(&mut state)).exp();
            decaybound::estimate::DecayRow::new(&format!("o{i:03}"), d, y)
        })
        .collect()
}

/// Rebuilds the design matrix from first principles for the regression
/// forms used in criterion 9 (all on their default scales).
fn design_for(
    rows: &[decaybound::estimate::DecayRow],
    spec_kind: SpecKind,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut x = Vec::with_capacity(rows.len());
    let mut y = Vec::with_capacity(rows.len());
    for r in rows {
        let d = r.distance_km;
        match spec_kind {
            SpecKind::LogLinear => {
                x.push(vec![1.0, d]);
                y.push(r.outcome.ln());
            }
            SpecKind::Both => {
                x.push(vec![1.0, d.ln(), d]);
                y.push(r.outcome.ln());
            }
            SpecKind::Quadratic => {
                x.push(vec![1.0, d, d * d]);
                y.push(r.outcome);
            }
            _ => unreachable!("criterion 9 uses three fixed specs"),
        }
    }
    (x, y)
}

/// n/(n-k) (X'X)^-1 (sum e_i^2 x_i x_i') (X'X)^-1 with column
/// equilibration and Gauss-Jordan inversion: same formula, different
/// algorithm from the QR path under test.
fn brute_force_hc1(x: &[Vec<f64>], y: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let k = x[0].len();

    // Column scales tame the conditioning of the normal equations.
    let scale: Vec<f64> = (0..k)
        .map(|j| {
            let norm = x.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
            if norm > 0.0 {
                1.0 / norm
            } else {
                1.0
            }
        })
        .collect();

    // A = S X'X S, g = S X'y in scaled coordinates.
    let mut a = vec![vec![0.0; k]; k];
    let mut g = vec![0.0; k];
    for row in 0..k {
        for col in 0..k {
            let mut s = 0.0;
            for r in x {
                s += r[row] * r[col];
            }
            a[row][col] = s * scale[row] * scale[col];
        }
        let mut s = 0.0;
        for (r, &yi) in x.iter().zip(y) {
            s += r[row] * yi;
        }
        g[row] = s * scale[row];
    }

    let a_inv = gauss_jordan(a);

    // beta = S (A^-1 g); residuals from the oracle's own coefficients.
    let mut beta = vec![0.0; k];
    for i in 0..k {
        let mut s = 0.0;
        for j in 0..k {
            s += a_inv[i][j] * g[j];
        }
        beta[i] = s * scale[i];
    }
    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(r, &yi)| yi - r.iter().zip(&beta).map(|(xi, bi)| xi * bi).sum::<f64>())
        .collect();

    // M = S (sum e^2 x x') S, sandwich = S A^-1 M A^-1 S (scales cancel
    // back out to the original coordinates).
    let mut m = vec![vec![0.0; k]; k];
    for (r, &e) in x.iter().zip(&residuals) {
        for i in 0..k {
            for j in 0..k {
                m[i][j] += e * e * r[i] * r[j] * scale[i] * scale[j];
            }
        }
    }
    let dof = n as f64 / (n - k) as f64;
    let mut cov = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for p in 0..k {
                for q in 0..k {
                    s += a_inv[i][p] * m[p][q] * a_inv[q][j];
                }
            }
            cov[i][j] = dof * s * scale[i] * scale[j];
        }
    }
    cov
}

fn gauss_jordan(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut inv: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for col in 0..k {
        // Partial pivot.
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-14, "singular oracle matrix");
        for j in 0..k {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..k {
            if i != col {
                let f = a[i][col];
                for j in 0..k {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

#[test]
fn criterion_10_byte_identical_reruns() {
    let bin = env!("CARGO_BIN_EXE_decaybound");
    let dir = tempfile::tempdir().unwrap();

    let scenario_path = dir.path().join("scenario.json");
    let scenario = serde_json::json!({
        "sources": [{
            "source_id": "p1",
            "location": { "lat": 39.0, "lon": -81.0 },
            "capacity_mw": 1000.0,
            "emission_rate": 120.0,
            "region_tag": "WV",
        }],
        "params": { "diffusivity": 1.0, "decay_rate": 0.0001 },
        "n_obs": 300,
        "noise_sigma": 0.25,
        "background_mode": "none",
        "seed": 11,
        "bbox": { "lat_min": 37.0, "lat_max": 41.0, "lon_min": -84.0, "lon_max": -78.0 },
    });
    std::fs::write(&scenario_path, serde_json::to_string_pretty(&scenario).unwrap()).unwrap();
    let config_path = dir.path().join("run.conf");
    std::fs::write(&config_path, "placebo_seeds = 20\n").unwrap();

    let run_all = |tag: &str| -> PathBuf {
        let work = dir.path().join(tag);
        let ok = |args: &[&str]| {
            let out = Command::new(bin).args(args).output().expect("binary runs");
            assert!(
                out.status.success(),
                "criterion 10: FAIL {:?}: {}",
                args,
                String::from_utf8_lossy(&out.stderr)
            );
        };
        let w = |p: &Path| p.to_str().unwrap().to_string();
        ok(&["simulate", "--input", &w(&scenario_path), "--out", &w(&work)]);
        // Feed each stage from its own pass so the whole chain, not just
        // the final step, must be reproducible.
        let dataset = work.join("dataset.csv");
        let sources = work.join("sources.csv");
        ok(&[
            "estimate",
            "--input",
            &w(&dataset),
            "--sources",
            &w(&sources),
            "--spec",
            "log_linear,both,linear",
            "--strata",
            "auto",
            "--out",
            &w(&work),
        ]);
        ok(&[
            "bound",
            "--input",
            &w(&work.join("fits.json")),
            "--epsilon",
            "0.1,0.01",
            "--out",
            &w(&work),
        ]);
        ok(&[
            "diagnose",
            "--input",
            &w(&dataset),
            "--sources",
            &w(&sources),
            "--seed",
            "3",
            "--config",
            &w(&config_path),
            "--out",
            &w(&work),
        ]);
        ok(&[
            "report",
            "--input",
            &w(&work),
            "--out",
            &w(&work.join("summary")),
        ]);
        work
    };

    let a = run_all("a");
    let b = run_all("b");

    let mut compared = 0usize;
    for name in [
        "dataset.csv",
        "sources.csv",
        "truth.json",
        "validity.json",
        "validity.txt",
        "placebo.json",
        "robustness.json",
        "summary/report.txt",
        "summary/plot_boundary_sensitivity.csv",
        "summary/plot_decay_curve.csv",
        "summary/plot_validity_grid.csv",
    ] {
        let fa = std::fs::read(a.join(name)).unwrap();
        let fb = std::fs::read(b.join(name)).unwrap();
        assert_eq!(fa, fb, "criterion 10: FAIL {name} differs between reruns");
        compared += 1;
    }
    // Path-bearing artifacts (fits.json embeds the input path, and
    // report.json embeds fits) are compared after erasing the one
    // tempdir-dependent field.
    for name in ["fits.json", "boundary.json", "summary/report.json"] {
        let mut va: serde_json::Value =
            serde_json::from_slice(&std::fs::read(a.join(name)).unwrap()).unwrap();
        let mut vb: serde_json::Value =
            serde_json::from_slice(&std::fs::read(b.join(name)).unwrap()).unwrap();
        for v in [&mut va, &mut vb] {
            if let Some(o) = v.get_mut("input") {
                *o = serde_json::Value::Null;
            }
            if let Some(o) = v.pointer_mut("/fits/input") {
                *o = serde_json::Value::Null;
            }
        }
        assert_eq!(va, vb, "criterion 10: FAIL {name} differs between reruns");
        compared += 1;
    }
    println!("criterion 10: PASS {compared} artifacts byte-identical across reruns");
}
