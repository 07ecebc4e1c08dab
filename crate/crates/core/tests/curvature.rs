mod common;

use common::families::*;
use common::rel;
use hodge_curvature::curvature::*;
use hodge_curvature::dolbeault::{harmonic_projection, inverse_on_complement, shifted_inverse};
use hodge_curvature::error::Error;
use hodge_curvature::family::FamilyDescriptor;
use hodge_curvature::linalg::{c, max_abs, CMat};
use hodge_curvature::oracle::{curvature_by_differences, DEFAULT_STEP};
use proptest::prelude::*;

fn run(family: &FamilyDescriptor, evaluator: Evaluator, p: usize, q: usize) -> CurvatureReport {
    let point = family.at(family.base_point()).unwrap();
    evaluate(evaluator, &point, p, q).unwrap_or_else(|e| panic!("{evaluator} ({p},{q}): {e}"))
}

fn normalized(report: &CurvatureReport) -> f64 {
    report.normalized.expect("rank-one frame")
}

/// Entrywise disagreement relative to the larger tensor.
fn relative_gap(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b)) / max_abs(a).max(max_abs(b)).max(1e-300)
}

#[test]
fn elliptic_hodge_line_has_quarter_curvature() {
    let family = elliptic(8, 0.0);
    for (p, q, expected) in [(1, 0, 0.25), (0, 1, -0.25)] {
        let main = run(&family, Evaluator::Main, p, q);
        let griffiths = run(&family, Evaluator::Griffiths, p, q);
        let oracle = curvature_by_differences(&family, family.base_point(), DEFAULT_STEP, p, q).unwrap();
        let fd = oracle.normalized.unwrap();
        for (label, value) in [("main", normalized(&main)), ("griffiths", normalized(&griffiths)), ("oracle", fd)] {
            assert!((value - expected).abs() <= 1e-5, "({p},{q}) {label}: {value}");
        }
        assert!((normalized(&main) - normalized(&griffiths)).abs() <= 1e-9);
        assert!((normalized(&main) - fd).abs() <= 1e-5);
    }
}

#[test]
fn elliptic_griffiths_terms_split_by_bidegree() {
    let family = elliptic(8, 0.0);
    let holomorphic = run(&family, Evaluator::Griffiths, 1, 0);
    assert_eq!(holomorphic.term("harmonic_cup_sbar").unwrap().values.get(0, 0).norm(), 0.0);
    let antiholomorphic = run(&family, Evaluator::Griffiths, 0, 1);
    assert_eq!(antiholomorphic.term("harmonic_cup_s").unwrap().values.get(0, 0).norm(), 0.0);
}

#[test]
fn surface_evaluators_agree_with_the_oracle_in_every_bidegree() {
    let family = abelian_surface(4, 0.0);
    for (p, q) in [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (1, 2)] {
        let main = run(&family, Evaluator::Main, p, q).value_matrix();
        let griffiths = run(&family, Evaluator::Griffiths, p, q).value_matrix();
        let flat = run(&family, Evaluator::Flat, p, q).value_matrix();
        assert!(relative_gap(&main, &griffiths) <= 1e-8, "({p},{q}) griffiths");
        assert!(relative_gap(&main, &flat) <= 1e-8, "({p},{q}) flat");
        let oracle = curvature_by_differences(&family, family.base_point(), DEFAULT_STEP, p, q).unwrap();
        assert!(relative_gap(&main, &oracle.value_matrix()) <= 1e-6, "({p},{q}) oracle");
    }
}

#[test]
fn top_and_bottom_degrees_on_the_surface_are_dual() {
    let family = abelian_surface(4, 0.0);
    let top = normalized(&run(&family, Evaluator::Main, 2, 0));
    let bottom = normalized(&run(&family, Evaluator::Main, 0, 2));
    assert!(top > 0.0);
    assert!((top + bottom).abs() <= 1e-12);
}

#[test]
fn theta_sections_match_the_oracle() {
    let family = theta(1, 64);
    let line = run(&family, Evaluator::LineP0, 1, 0);
    let main = run(&family, Evaluator::Main, 1, 0);
    let oracle = curvature_by_differences(&family, family.base_point(), DEFAULT_STEP, 1, 0).unwrap();
    let fd = oracle.normalized.unwrap();
    assert!(((normalized(&line) - fd) / fd).abs() <= 1e-3, "line {} vs {fd}", normalized(&line));
    assert!(((normalized(&main) - fd) / fd).abs() <= 1e-3, "main {} vs {fd}", normalized(&main));
    assert!(((normalized(&line) - normalized(&main)) / fd).abs() <= 1e-3);
    // ∂ψ vanishes by degree, leaving the two-term form.
    assert_eq!(line.term("c_del_psi").unwrap().values.get(0, 0).norm(), 0.0);
    assert_eq!(line.term("green_cup_del").unwrap().values.get(0, 0).norm(), 0.0);
}

#[test]
fn theta_functions_match_the_oracle() {
    let family = theta(1, 64);
    let line = normalized(&run(&family, Evaluator::LineP0, 0, 0));
    let main = normalized(&run(&family, Evaluator::Main, 0, 0));
    let fd = curvature_by_differences(&family, family.base_point(), DEFAULT_STEP, 0, 0).unwrap().normalized.unwrap();
    assert!(fd < 0.0);
    assert!(((line - fd) / fd).abs() <= 1e-3);
    assert!(((main - fd) / fd).abs() <= 1e-3);
}

#[test]
fn wrong_shift_in_the_line_formula_is_detected() {
    let family = theta(1, 64);
    let point = family.at(family.base_point()).unwrap();
    let frame = harmonic_frame(&point, 1, 0).unwrap();
    let data = point.horizontal_data().unwrap();
    let fd = curvature_by_differences(&family, family.base_point(), DEFAULT_STEP, 1, 0).unwrap().normalized.unwrap();
    let right = normalized(&curvature_line_p0_with_shift(&point, &data, &frame, 1.0).unwrap());
    let wrong = normalized(&curvature_line_p0_with_shift(&point, &data, &frame, 2.0).unwrap());
    assert!(((right - fd) / fd).abs() <= 1e-3);
    assert!(((wrong - fd) / fd).abs() >= 1e-2, "corrupted shift still agrees: {wrong} vs {fd}");
}

#[test]
fn dual_theta_cohomology_matches_the_oracle_and_serre_duality() {
    let dual = theta(-1, 64);
    let line = run(&dual, Evaluator::LineNq, 1, 1);
    let main = run(&dual, Evaluator::Main, 1, 1);
    let fd = curvature_by_differences(&dual, dual.base_point(), DEFAULT_STEP, 1, 1).unwrap().normalized.unwrap();
    assert!(((normalized(&line) - fd) / fd).abs() <= 1e-3);
    assert!(((normalized(&main) - fd) / fd).abs() <= 1e-3);
    let sections = normalized(&run(&theta(1, 64), Evaluator::LineP0, 0, 0));
    assert!(((normalized(&line) + sections) / sections).abs() <= 1e-3);
    // q − 1 = 0 kills the first term.
    assert_eq!(line.term("c_psi").unwrap().values.get(0, 0).norm(), 0.0);
}

#[test]
fn character_families_have_flat_direct_images() {
    for family in [characters(6, 0.0, true), characters(6, 0.0, false)] {
        for (p, q) in [(0, 1), (1, 0)] {
            for evaluator in [Evaluator::Main, Evaluator::Flat, Evaluator::HermiteEinstein] {
                let report = run(&family, evaluator, p, q);
                assert!(max_abs(&report.value_matrix()) <= 1e-10, "{evaluator} ({p},{q})");
            }
            // Without the End twist the cohomology jumps off s = 0, so only the End family has a
            // direct image to differentiate.
            if family.end_valued() {
                let oracle = curvature_by_differences(&family, family.base_point(), DEFAULT_STEP, p, q).unwrap();
                assert!(max_abs(&oracle.value_matrix()) <= 1e-10);
            }
        }
    }
}

#[test]
fn gauge_term_changes_geodesic_curvature_but_not_curvature() {
    let cases: Vec<(FamilyDescriptor, Vec<(usize, usize)>)> = vec![
        (elliptic(8, 0.0), vec![(1, 0), (0, 1)]),
        (abelian_surface(3, 0.0), vec![(1, 1), (2, 0)]),
        (characters(6, 0.0, true), vec![(0, 1)]),
        (theta(1, 32), vec![(1, 0)]),
    ];
    for (family, bidegrees) in cases {
        let base = family.at(family.base_point()).unwrap().horizontal_data().unwrap().geodesic_curvature;
        for beta in [1.0, -1.0, 10.0, -10.0] {
            let shifted = family.with_kaehler_shift(beta).unwrap();
            let point = shifted.at(shifted.base_point()).unwrap();
            let moved = point.horizontal_data().unwrap().geodesic_curvature;
            assert!((moved - base - beta).abs() <= 1e-12, "c(ω) moved by {} for β = {beta}", moved - base);
            for &(p, q) in &bidegrees {
                for evaluator in Evaluator::ALL {
                    if evaluator.applicability(&point, p, q).is_err() {
                        continue;
                    }
                    let reference = run(&family, evaluator, p, q).value_matrix();
                    let gauged = evaluate(evaluator, &point, p, q).unwrap().value_matrix();
                    assert!(max_abs(&(&gauged - &reference)) <= 1e-8, "{evaluator} ({p},{q}) β = {beta}");
                }
            }
        }
    }
}

#[test]
fn line_evaluators_refuse_a_kaehler_shift() {
    let family = theta(1, 32).with_kaehler_shift(1.0).unwrap();
    let point = family.at(family.base_point()).unwrap();
    assert!(matches!(evaluate(Evaluator::LineP0, &point, 1, 0), Err(Error::Precondition(_))));
}

#[test]
fn reports_are_hermitian_and_sum_their_terms() {
    let family = abelian_surface(4, 0.0);
    for (p, q) in [(1, 0), (1, 1), (2, 1)] {
        for evaluator in [Evaluator::Main, Evaluator::Griffiths, Evaluator::Flat] {
            let report = run(&family, evaluator, p, q);
            assert!(report.hermitian_defect() <= 1e-10, "{evaluator} ({p},{q})");
            assert!(report.bookkeeping_defect() <= 1e-12, "{evaluator} ({p},{q})");
        }
    }
    let report = run(&theta(1, 32), Evaluator::Main, 1, 0);
    assert!(report.hermitian_defect() <= 1e-10);
    assert!(report.bookkeeping_defect() <= 1e-12);
}

#[test]
fn non_parallel_atiyah_form_is_refused() {
    let family = characters(6, 0.0, true);
    let point = family.at(family.base_point()).unwrap();
    let frame = harmonic_frame(&point, 0, 1).unwrap();
    let mut data = point.horizontal_data().unwrap();
    assert!(curvature_flat(&point, &data, &frame).is_ok());
    data.atiyah_variation = 1e-6;
    assert!(matches!(curvature_flat(&point, &data, &frame), Err(Error::NotParallel { .. })));
}

#[test]
fn evaluators_refuse_families_outside_their_hypotheses() {
    let twisted = characters(6, 0.0, false);
    let point = twisted.at(twisted.base_point()).unwrap();
    assert!(matches!(evaluate(Evaluator::Griffiths, &point, 0, 1), Err(Error::NotUntwisted)));

    let moving = elliptic(8, 0.0);
    let point = moving.at(moving.base_point()).unwrap();
    assert!(matches!(evaluate(Evaluator::HermiteEinstein, &point, 1, 0), Err(Error::NotProductFamily)));
    assert!(matches!(evaluate(Evaluator::LineP0, &point, 1, 0), Err(Error::Precondition(_))));
    assert!(matches!(wp_suite(&moving, moving.base_point()), Err(Error::NotProductFamily)));

    let positive = theta(1, 32);
    let point = positive.at(positive.base_point()).unwrap();
    assert!(matches!(evaluate(Evaluator::Flat, &point, 1, 0), Err(Error::NotFiberwiseFlat)));
    assert!(matches!(evaluate(Evaluator::LineNq, &point, 1, 0), Err(Error::Precondition(_))));
    assert!(matches!(evaluate(Evaluator::LineP0, &point, 1, 1), Err(Error::Precondition(_))));
}

#[test]
fn vanishing_cohomology_is_reported_as_rank_zero() {
    let family = characters(6, 0.0, false);
    // Away from s = 0 both characters are nontrivial, so H^{0,0} vanishes.
    let point = family.at(c(0.5, 0.0)).unwrap();
    assert!(matches!(evaluate(Evaluator::Main, &point, 0, 0), Err(Error::RankZero { p: 0, q: 0 })));
}

#[test]
fn inverse_laplacian_refuses_harmonic_arguments() {
    let family = elliptic(8, 0.0);
    let point = family.at(family.base_point()).unwrap();
    let form = common::random(point.space(), 0, 1, 3);
    let harmonic = harmonic_projection(&form).unwrap();
    assert!(matches!(inverse_on_complement(&harmonic, LEAK_TOLERANCE), Err(Error::HarmonicLeak { .. })));
    let complement = form.minus(&harmonic).unwrap();
    assert!(inverse_on_complement(&complement, LEAK_TOLERANCE).is_ok());
}

#[test]
fn shifted_inverse_refuses_an_eigenvalue() {
    let family = elliptic(8, 0.0);
    let point = family.at(family.base_point()).unwrap();
    let space = point.space();
    let eigenvalue = (0..space.samples()).filter_map(|k| space.mode_eigenvalue(0, k)).find(|&lam| lam > 1.0).unwrap();
    let form = common::random(space, 0, 1, 5);
    assert!(matches!(shifted_inverse(&form, -eigenvalue), Err(Error::SingularShift { .. })));
    assert!(shifted_inverse(&form, -eigenvalue - 0.5).is_ok());
}

#[test]
fn weil_petersson_suite_on_character_families() {
    for family in [characters(6, 0.0, true), characters(6, 0.0, false)] {
        let report = wp_suite(&family, family.base_point()).unwrap();
        assert!(report.wp_norm > 0.0);
        assert!((report.wp_norm - report.direct_norm).abs() <= 1e-12 * report.direct_norm.max(1.0));
        assert!((report.reversed_ordering + report.wp_norm).abs() <= 1e-12 * report.wp_norm);
        assert!(report.sectional_curvature.abs() <= 1e-10);
        assert!(!report.flat_powers.is_empty());
        for power in &report.flat_powers {
            assert!(power.value.abs() <= 1e-10, "q = {}", power.q);
            assert!(power.harmonicity_defect <= 1e-10, "q = {}", power.q);
        }
        assert!(report.harmonic_drop.abs() <= 1e-10);
        assert!(report.semi_positive);
    }
}

#[test]
fn weil_petersson_norm_vanishes_for_a_static_character() {
    let family = static_character(4, 0.0);
    let report = wp_suite(&family, family.base_point()).unwrap();
    assert_eq!(report.wp_norm, 0.0);
    assert_eq!(report.flat_powers.len(), 2);
}

#[test]
fn report_roundtrips_through_json() {
    let report = run(&abelian_surface(3, 0.0), Evaluator::Main, 1, 1);
    let text = serde_json::to_string(&report).unwrap();
    let back: CurvatureReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(serde_json::to_value(Evaluator::HermiteEinstein).unwrap(), "hermite_einstein");
}

#[test]
fn skewed_curve_matches_the_closed_form() {
    // R/‖dz‖² = |τ'|²/(4 (Im τ)²) along τ(s) = 0.3 + 1.1i + (0.4 − 0.2i)s + …
    let family = skewed_curve(8, 0.0);
    let expected = c(0.4, -0.2).norm_sqr() / (4.0 * 1.1 * 1.1);
    assert!((normalized(&run(&family, Evaluator::Main, 1, 0)) - expected).abs() <= 1e-12);
}

#[test]
fn elliptic_frame_is_harmonic() {
    let family = elliptic(8, 0.0);
    let point = family.at(family.base_point()).unwrap();
    let frame = harmonic_frame(&point, 0, 1).unwrap();
    assert_eq!(frame.rank(), 1);
    assert!(frame.residual <= harmonic_tolerance(family.backend()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn elliptic_curvature_is_a_quarter_over_im_tau_squared(re in -0.5f64..0.5, im in 0.5f64..2.5, beta in -5.0f64..5.0) {
        let family = elliptic(6, beta);
        let point = family.at(c(re, im)).unwrap();
        let expected = 0.25 / (im * im);
        for (p, q, sign) in [(1, 0, 1.0), (0, 1, -1.0)] {
            let main = evaluate(Evaluator::Main, &point, p, q).unwrap();
            let griffiths = evaluate(Evaluator::Griffiths, &point, p, q).unwrap();
            prop_assert!((main.normalized.unwrap() - sign * expected).abs() <= 1e-12);
            prop_assert!(rel(main.values.get(0, 0), griffiths.values.get(0, 0)) <= 1e-12);
        }
    }

    #[test]
    fn surface_reports_stay_hermitian(re in -0.2f64..0.2, im in -0.2f64..0.2) {
        let family = abelian_surface(3, 0.0);
        let point = family.at(c(re, im)).unwrap();
        let report = evaluate(Evaluator::Main, &point, 1, 1).unwrap();
        prop_assert!(report.hermitian_defect() <= 1e-10);
        prop_assert!(report.bookkeeping_defect() <= 1e-12);
        let griffiths = evaluate(Evaluator::Griffiths, &point, 1, 1).unwrap();
        prop_assert!(relative_gap(&report.value_matrix(), &griffiths.value_matrix()) <= 1e-8);
    }
}
