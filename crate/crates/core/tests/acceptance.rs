//! Acceptance criteria A1–A10. Each test prints one PASS/FAIL line, written straight to stderr so
//! that it shows up even when output capture is on.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::families::*;
use hodge_curvature::curvature::{evaluate, harmonic_frame, wp_suite, CurvatureReport, Evaluator};
use hodge_curvature::dolbeault::bkn_defect;
use hodge_curvature::family::identities::identity_suite;
use hodge_curvature::family::FamilyDescriptor;
use hodge_curvature::forms::PQForm;
use hodge_curvature::harness::{bundled, relative_gap, run, BUNDLED};
use hodge_curvature::linalg::{c, max_abs, CMat};
use hodge_curvature::oracle::{chern_curvature_fd, curvature_by_differences, richardson, GramStencil, DEFAULT_STEP};

fn verdict(id: &str, passed: bool, detail: String) {
    let line = format!("{id} {} {detail}\n", if passed { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(passed, "{id}: {detail}");
}

fn normalized(family: &FamilyDescriptor, evaluator: Evaluator, p: usize, q: usize) -> f64 {
    let point = family.at(family.base_point()).unwrap();
    evaluate(evaluator, &point, p, q).unwrap().normalized.unwrap()
}

/// Main, Griffiths and the oracle on the elliptic family at τ = i, K = 8.
fn elliptic_three_way(id: &str, p: usize, q: usize, expected: f64) {
    let start = Instant::now();
    let family = elliptic(8, 0.0);
    let main = normalized(&family, Evaluator::Main, p, q);
    let griffiths = normalized(&family, Evaluator::Griffiths, p, q);
    let oracle = curvature_by_differences(&family, family.base_point(), DEFAULT_STEP, p, q).unwrap().normalized.unwrap();
    let elapsed = start.elapsed();
    let values = [main, griffiths, oracle];
    let off_target = values.iter().map(|v| (v - expected).abs()).fold(0.0, f64::max);
    let pairwise = [(main - griffiths).abs(), (main - oracle).abs(), (griffiths - oracle).abs()].into_iter().fold(0.0, f64::max);
    let passed = off_target <= 1e-5 && pairwise <= 1e-5 && elapsed < Duration::from_secs(5);
    verdict(
        id,
        passed,
        format!("({p},{q}) main {main:.10} griffiths {griffiths:.10} oracle {oracle:.10}; |R-({expected})| {off_target:.1e}, pairwise {pairwise:.1e}, {elapsed:.2?}"),
    );
}

#[test]
fn a1_elliptic_holomorphic_forms() {
    elliptic_three_way("A1", 1, 0, 0.25);
}

#[test]
fn a2_elliptic_antiholomorphic_forms() {
    elliptic_three_way("A2", 0, 1, -0.25);
}

#[test]
fn a3_identity_suite_on_fourier_families() {
    let families = [
        ("elliptic", elliptic(8, 0.0)),
        ("elliptic+beta", elliptic(8, 0.7)),
        ("skewed", skewed_curve(6, 0.5)),
        ("surface", abelian_surface(3, 1.0)),
        ("characters", characters(6, 1.0, false)),
        ("characters_end", characters(4, 1.0, true)),
        ("static", static_character(3, 1.0)),
    ];
    let start = Instant::now();
    let mut worst = (0.0f64, String::new());
    let mut failures = Vec::new();
    let mut applied = 0;
    for (label, family) in &families {
        for seed in 0..20u64 {
            let report = identity_suite(family, family.base_point(), seed).unwrap();
            for check in &report.checks {
                if let Some(defect) = check.defect {
                    applied += 1;
                    // Defects are relative for form identities and absolute for checks on ω.
                    if !(defect <= check.tolerance.min(1e-8)) {
                        failures.push(format!("{label}/{seed}/{} {defect:.1e}", check.name));
                    }
                    if defect > worst.0 {
                        worst = (defect, format!("{label}/{}", check.name));
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let passed = failures.is_empty() && elapsed < Duration::from_secs(30);
    verdict(
        "A3",
        passed,
        format!("{applied} applicable defects over 7 families x 20 seeds; worst {:.1e} ({}); {elapsed:.2?}; failures {failures:?}", worst.0, worst.1),
    );
}

#[test]
fn a4_bochner_kodaira_nakano() {
    let mut flat_worst = 0.0f64;
    for family in [elliptic(6, 0.0), abelian_surface(2, 0.0), characters(6, 0.0, false), static_character(2, 0.0)] {
        let point = family.at(family.base_point()).unwrap();
        let n = point.dim();
        for p in 0..=n {
            for q in 0..=n {
                let psi = PQForm::random(point.space(), p, q, 17).unwrap();
                flat_worst = flat_worst.max(bkn_defect(&psi).unwrap());
            }
        }
    }
    let grid_worst = |resolution: usize| -> f64 {
        let point = theta(1, resolution).at(c(0.0, 1.0)).unwrap();
        let mut worst = 0.0f64;
        for (p, q) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            for seed in [5, 6] {
                worst = worst.max(bkn_defect(&PQForm::random(point.space(), p, q, seed).unwrap()).unwrap());
            }
        }
        worst
    };
    let (coarse, fine) = (grid_worst(64), grid_worst(128));
    let passed = flat_worst <= 1e-10 && coarse <= 5e-4 && coarse / fine >= 4.0;
    verdict("A4", passed, format!("flat bundles {flat_worst:.1e}; degree one N=64 {coarse:.2e}, N=128 {fine:.2e}, improvement {:.1}x", coarse / fine));
}

#[test]
fn a5_theta_sections_against_the_oracle() {
    let start = Instant::now();
    let family = theta(1, 64);
    let point = family.at(family.base_point()).unwrap();
    let report = evaluate(Evaluator::LineP0, &point, 1, 0).unwrap();
    let line = report.normalized.unwrap();
    let oracle = curvature_by_differences(&family, family.base_point(), DEFAULT_STEP, 1, 0).unwrap().normalized.unwrap();
    let elapsed = start.elapsed();
    let relative = ((line - oracle) / oracle).abs();
    let passed = relative <= 1e-3 && elapsed < Duration::from_secs(180);
    verdict("A5", passed, format!("line_p0 {line:.8} oracle {oracle:.8} relative {relative:.1e}, {elapsed:.2?}"));
}

#[test]
fn a6_evaluator_agreement_matrix() {
    let families = [
        ("elliptic", elliptic(8, 0.0), 1e-7),
        ("elliptic+beta", elliptic(8, 2.0), 1e-7),
        ("skewed", skewed_curve(8, 0.0), 1e-7),
        ("surface", abelian_surface(3, 0.5), 1e-7),
        ("characters", characters(6, 0.0, false), 1e-7),
        ("characters_end", characters(6, 0.0, true), 1e-7),
        ("static", static_character(3, 0.0), 1e-7),
        ("theta", theta(1, 64), 1e-3),
        ("theta_dual", theta(-1, 64), 1e-3),
    ];
    let mut pairs = 0;
    let mut worst = (0.0f64, String::new());
    let mut failures = Vec::new();
    for (label, family, tolerance) in &families {
        let point = family.at(family.base_point()).unwrap();
        let n = point.dim();
        for p in 0..=n {
            for q in 0..=n {
                let frame = match harmonic_frame(&point, p, q) {
                    Ok(f) => f,
                    Err(hodge_curvature::Error::RankZero { .. }) => continue,
                    Err(e) => panic!("{label} ({p},{q}): {e}"),
                };
                let data = point.horizontal_data().unwrap();
                let reports: Vec<CurvatureReport> = Evaluator::ALL
                    .into_iter()
                    .filter(|ev| ev.applicability(&point, p, q).is_ok())
                    .map(|ev| hodge_curvature::curvature::evaluate_with(ev, &point, &data, &frame).unwrap())
                    .collect();
                for (i, a) in reports.iter().enumerate() {
                    for b in &reports[i + 1..] {
                        pairs += 1;
                        let gap = relative_gap(&a.value_matrix(), &b.value_matrix(), &frame.gram);
                        let name = format!("{label} ({p},{q}) {}~{}", a.evaluator, b.evaluator);
                        if gap > *tolerance {
                            failures.push(format!("{name} {gap:.1e}"));
                        }
                        if gap > worst.0 {
                            worst = (gap, name);
                        }
                    }
                }
            }
        }
    }
    verdict("A6", failures.is_empty(), format!("{pairs} evaluator pairs; worst {:.1e} ({}); failures {failures:?}", worst.0, worst.1));
}

#[test]
fn a7_weil_petersson_suite_on_character_families() {
    let mut worst_norm = 0.0f64;
    let mut worst_flat = 0.0f64;
    let mut worst_harmonic = 0.0f64;
    let mut semi_positive = true;
    for family in [characters(6, 0.0, true), characters(6, 0.0, false), static_character(3, 0.0)] {
        let report = wp_suite(&family, family.base_point()).unwrap();
        worst_norm = worst_norm.max((report.wp_norm - report.direct_norm).abs());
        for power in &report.flat_powers {
            worst_flat = worst_flat.max(power.value.abs());
            worst_harmonic = worst_harmonic.max(power.harmonicity_defect);
        }
        semi_positive &= report.semi_positive;
    }
    let passed = worst_norm <= 1e-12 && worst_flat <= 1e-10 && worst_harmonic <= 1e-10 && semi_positive;
    verdict(
        "A7",
        passed,
        format!("|wp - direct| {worst_norm:.1e}; flat-power curvature {worst_flat:.1e}; harmonicity {worst_harmonic:.1e}; semi-positive {semi_positive}"),
    );
}

#[test]
fn a8_gauge_invariance() {
    let cases: [(&str, FamilyDescriptor); 5] = [
        ("elliptic", elliptic(8, 0.0)),
        ("skewed", skewed_curve(6, 0.0)),
        ("surface", abelian_surface(3, 0.0)),
        ("characters_end", characters(6, 0.0, true)),
        ("theta", theta(1, 32)),
    ];
    let mut value_worst = 0.0f64;
    let mut channel_worst = 0.0f64;
    let mut compared = 0;
    for (label, family) in &cases {
        let point = family.at(family.base_point()).unwrap();
        let n = point.dim();
        let c0 = point.horizontal_data().unwrap().geodesic_curvature;
        for beta in [1.0, -1.0, 10.0, -10.0] {
            let gauged_family = family.with_kaehler_shift(family.kaehler_shift() + beta).unwrap();
            let gauged = gauged_family.at(gauged_family.base_point()).unwrap();
            channel_worst = channel_worst.max((gauged.horizontal_data().unwrap().geodesic_curvature - c0 - beta).abs());
            for p in 0..=n {
                for q in 0..=n {
                    for ev in Evaluator::ALL {
                        if ev.applicability(&gauged, p, q).is_err() || ev.applicability(&point, p, q).is_err() {
                            continue;
                        }
                        let before = match evaluate(ev, &point, p, q) {
                            Ok(r) => r.value_matrix(),
                            Err(hodge_curvature::Error::RankZero { .. }) => continue,
                            Err(e) => panic!("{label} {ev} ({p},{q}): {e}"),
                        };
                        let after: CMat = evaluate(ev, &gauged, p, q).unwrap().value_matrix();
                        value_worst = value_worst.max(max_abs(&(after - before)));
                        compared += 1;
                    }
                }
            }
        }
    }
    let passed = compared > 0 && value_worst <= 1e-8 && channel_worst <= 1e-12;
    verdict("A8", passed, format!("{compared} reports under beta in {{+-1, +-10}}: max change {value_worst:.1e}; c(omega) shift defect {channel_worst:.1e}"));
}

#[test]
fn a9_oracle_self_test() {
    let gram = |s: hodge_curvature::linalg::C64| Ok(CMat::from_element(1, 1, c(s.norm_sqr().exp(), 0.0)));
    let center = c(0.0, 0.0);
    let coarse = GramStencil::from_fn(center, DEFAULT_STEP, gram).unwrap();
    let fine = GramStencil::from_fn(center, DEFAULT_STEP / 2.0, gram).unwrap();
    let (rc, rf) = (chern_curvature_fd(&coarse).unwrap(), chern_curvature_fd(&fine).unwrap());
    let result = richardson((&coarse, &rc), (&fine, &rf)).unwrap();
    let value = result.value[(0, 0)];
    let passed = (value - c(-1.0, 0.0)).norm() <= 1e-6;
    verdict("A9", passed, format!("H = exp(|s|^2): R = {:.10} (error estimate {:.1e})", value.re, result.error));
}

#[test]
fn a10_bundled_configs_are_deterministic() {
    let mut mismatched = Vec::new();
    let mut failing = Vec::new();
    for (name, _) in BUNDLED {
        let config = bundled(name).unwrap();
        let first = run(&config).unwrap();
        let second = run(&config).unwrap();
        if first.to_json().unwrap() != second.to_json().unwrap() || first.to_csv().unwrap() != second.to_csv().unwrap() {
            mismatched.push(name);
        }
        if !first.passed {
            failing.push(name);
        }
    }
    verdict(
        "A10",
        mismatched.is_empty(),
        format!("{} bundled configs run twice; byte mismatches {mismatched:?}; configs with failing checks {failing:?}", BUNDLED.len()),
    );
}
