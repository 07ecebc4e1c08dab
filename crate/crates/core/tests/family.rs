mod common;

use common::families;
use hodge_curvature::dolbeault::dbar;
use hodge_curvature::family::frames::{analytic_frame, exact_jet, expected_rank, FrameJet};
use hodge_curvature::family::geometric::{closedness_defect, semmes_defect};
use hodge_curvature::family::identities::{identity_suite, FORM_IDENTITIES, GEOMETRIC_IDENTITIES};
use hodge_curvature::family::lie::lie_components;
use hodge_curvature::family::{horizontal_lift, sample_points, FamilyDescriptor, FamilyPoint};
use hodge_curvature::forms::algebra::cup;
use hodge_curvature::linalg::{self, c, C64, I};
use proptest::prelude::*;

fn point(family: &FamilyDescriptor) -> FamilyPoint {
    family.at(family.base_point()).unwrap()
}

fn fourier_families() -> Vec<(&'static str, FamilyDescriptor)> {
    vec![
        ("elliptic", families::elliptic(4, 0.0)),
        ("elliptic_shifted", families::elliptic(4, 0.7)),
        ("skewed", families::skewed_curve(4, 0.5)),
        ("surface", families::abelian_surface(2, 1.0)),
        ("characters", families::characters(4, 1.0, false)),
        ("characters_end", families::characters(3, 1.0, true)),
        ("static", families::static_character(2, 1.0)),
    ]
}

#[test]
fn elliptic_kodaira_spencer_matches_period_derivative() {
    let family = families::elliptic(4, 0.0);
    let s = family.base_point();
    let p = point(&family);
    let data = p.horizontal_data().unwrap();
    // Independent route: A = −τ'/(τ − τ̄) with τ' from a central difference of the period map.
    let h = 1e-4;
    let tau = |z: C64| family.period(z)[(0, 0)];
    let tau_prime = (tau(s + h) - tau(s - h)) / (2.0 * h);
    let expected = -tau_prime / (tau(s) - tau(s).conj());
    let got = data.kodaira_spencer.coeffs()[(0, 0)];
    assert!((got - expected).norm() < 1e-9, "{got} vs {expected}");
    assert!((got - c(0.0, 0.5)).norm() < 1e-12);

    let metric = p.fiber().metric();
    let inverse = linalg::inverse(metric).unwrap();
    let volume = p.fiber().volume();
    assert!((volume - 1.0).abs() < 1e-12);
    let norm_sqr = data.kodaira_spencer.pointwise_norm_sqr(metric, &inverse) * volume;
    assert!((norm_sqr - 0.25).abs() < 1e-12, "{norm_sqr}");
}

#[test]
fn lift_is_orthogonal_to_vertical_vectors() {
    for (label, family) in fourier_families() {
        let p = point(&family);
        let n = p.dim();
        for (x, y) in sample_points(n) {
            let z = p.fiber().complex_coordinate(&x, &y);
            let h = family.kaehler_hessian(&z, p.parameter()).unwrap();
            let a = horizontal_lift(&h).unwrap();
            for b in 0..n {
                let pairing = h[(n, b)] + (0..n).map(|al| a[al] * h[(al, b)]).sum::<C64>();
                assert!(pairing.norm() < 1e-10, "{label}: ω(v, ∂̄_{b}) = {pairing}");
            }
        }
    }
}

#[test]
fn total_kaehler_form_is_closed() {
    let mut all = fourier_families();
    all.push(("theta", families::theta(1, 32)));
    for (label, family) in all {
        let defect = closedness_defect(&point(&family)).unwrap();
        assert!(defect <= 1e-8, "{label}: {defect:.3e}");
    }
}

#[test]
fn product_family_has_trivial_horizontal_data() {
    for shift in [0.0, 0.4, 2.5] {
        let family = families::characters(3, shift, false);
        let data = point(&family).horizontal_data().unwrap();
        assert!(data.lift_matrix.norm() == 0.0);
        assert!(data.kodaira_spencer.coeffs().norm() == 0.0);
        assert!((data.geodesic_curvature - shift).abs() < 1e-12);
        assert!(data.geodesic_variation < 1e-12);
    }
}

#[test]
fn theta_family_has_vanishing_atiyah_forms() {
    for degree in [1, 2, -1] {
        let data = point(&families::theta(degree, 32)).horizontal_data().unwrap();
        assert!(data.atiyah.max_abs() < 1e-10, "d={degree}: η_s = {:.3e}", data.atiyah.max_abs());
        assert!(data.atiyah_conjugate.max_abs() < 1e-10);
        assert!(data.atiyah_variation < 1e-10);
    }
}

#[test]
fn semmes_identity_and_its_sensitivity() {
    let product = families::static_character(2, 1.3);
    assert!(semmes_defect(&point(&product), 0.0).unwrap() < 1e-12);

    let elliptic = point(&families::elliptic(4, 0.0));
    assert!(semmes_defect(&elliptic, 0.0).unwrap() <= 1e-9);
    let volume = elliptic.fiber().volume();
    assert!(semmes_defect(&elliptic, 1.0).unwrap() >= volume * (1.0 - 1e-9));

    let surface = point(&families::abelian_surface(2, 0.3));
    assert!(semmes_defect(&surface, 0.0).unwrap() <= 1e-9);
    assert!(semmes_defect(&surface, 1.0).unwrap() >= surface.fiber().volume() * (1.0 - 1e-9));
}

#[test]
fn moving_part_of_dz_is_a_multiple_of_dzbar() {
    let p = point(&families::elliptic(4, 0.0));
    let data = p.horizontal_data().unwrap();
    let frame = analytic_frame(&p, 1, 0).unwrap();
    assert_eq!(frame.len(), 1);
    let parts = lie_components(&data, &frame[0]).unwrap();
    let moved = parts.along_moved.unwrap();
    let expected = cup(&data.kodaira_spencer, &frame[0].value).unwrap();
    assert!(moved.minus(&expected).unwrap().norm() < 1e-12 * expected.norm());
    // Constant coefficient: only the zero mode is populated.
    let field = moved.field(0, 0);
    let total: f64 = field.iter().map(|z| z.norm_sqr()).sum();
    let peak = field.iter().map(|z| z.norm_sqr()).fold(0.0f64, f64::max);
    assert!((total - peak).abs() <= 1e-24 * total.max(1.0));
}

#[test]
fn product_family_lie_derivative_is_the_coefficient_derivative() {
    let family = families::characters(3, 1.0, true);
    let p = point(&family);
    let data = p.horizontal_data().unwrap();
    for (pp, q) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        for jet in analytic_frame(&p, pp, q).unwrap().iter().filter(|j| j.ds.is_some()) {
            let parts = lie_components(&data, jet).unwrap();
            assert!(parts.along.minus(jet.ds.as_ref().unwrap()).unwrap().norm() < 1e-14);
            assert!(parts.along_moved.map_or(0.0, |m| m.norm()) < 1e-14);
        }
    }
}

#[test]
fn frame_ranks_follow_hodge_numbers() {
    let surface = point(&families::abelian_surface(2, 0.0));
    assert_eq!(expected_rank(&surface, 1, 1).unwrap(), 4);
    assert_eq!(expected_rank(&surface, 2, 1).unwrap(), 2);
    let theta = point(&families::theta(2, 32));
    assert_eq!(expected_rank(&theta, 1, 0).unwrap(), 2);
    assert_eq!(expected_rank(&theta, 1, 1).unwrap(), 0);
    let twisted = point(&families::characters(3, 0.0, false).with_kaehler_shift(0.0).unwrap());
    assert_eq!(expected_rank(&twisted, 0, 0).unwrap(), 1);
}

/// Wirtinger derivatives in s of coefficient arrays at fixed real coordinates.
fn jet_by_differences(family: &FamilyDescriptor, value: impl Fn(&FamilyPoint) -> Vec<C64>) -> (Vec<C64>, Vec<C64>) {
    let s = family.base_point();
    let h = 1e-4;
    let at = |ds: C64| value(&family.at(s + ds).unwrap());
    let central = |dir: C64| -> Vec<C64> {
        let (m2, m1, p1, p2) = (at(-dir * 2.0 * h), at(-dir * h), at(dir * h), at(dir * 2.0 * h));
        (0..m1.len()).map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h)).collect()
    };
    let (dx, dy) = (central(c(1.0, 0.0)), central(I));
    let ds = dx.iter().zip(&dy).map(|(a, b)| (a - I * b) * 0.5).collect();
    let dsbar = dx.iter().zip(&dy).map(|(a, b)| (a + I * b) * 0.5).collect();
    (ds, dsbar)
}

fn max_gap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn assert_jet_matches(label: &str, jet: &FrameJet, fd: &(Vec<C64>, Vec<C64>), tolerance: f64) {
    let ds = jet.ds.as_ref().unwrap().coeffs();
    let dsbar = jet.dsbar.as_ref().unwrap().coeffs();
    let scale = ds.iter().chain(dsbar).map(|z| z.norm()).fold(1.0, f64::max);
    assert!(max_gap(ds, &fd.0) <= tolerance * scale, "{label}: ∂_s off by {:.3e}", max_gap(ds, &fd.0));
    assert!(max_gap(dsbar, &fd.1) <= tolerance * scale, "{label}: ∂_s̄ off by {:.3e}", max_gap(dsbar, &fd.1));
}

#[test]
fn analytic_frame_jets_match_difference_quotients() {
    let cases = [
        ("elliptic", families::elliptic(3, 0.0), vec![(1, 0), (0, 1), (1, 1)]),
        ("skewed", families::skewed_curve(3, 0.0), vec![(1, 0), (0, 1)]),
        ("surface", families::abelian_surface(2, 0.0), vec![(1, 0), (1, 1), (2, 1)]),
        ("theta", families::theta(1, 24), vec![(0, 0), (1, 0)]),
    ];
    for (label, family, bidegrees) in cases {
        let p = point(&family);
        for (pp, q) in bidegrees {
            let frame = analytic_frame(&p, pp, q).unwrap();
            for (k, jet) in frame.iter().enumerate() {
                let fd = jet_by_differences(&family, |at| analytic_frame(at, pp, q).unwrap()[k].value.coeffs().to_vec());
                assert_jet_matches(&format!("{label} ({pp},{q})#{k}"), jet, &fd, 1e-7);
            }
        }
    }
}

#[test]
fn exact_jets_are_dbar_exact_and_match_difference_quotients() {
    let family = families::abelian_surface(2, 0.0);
    let p = point(&family);
    let data = p.horizontal_data().unwrap();
    for (pp, q) in [(0, 1), (1, 1), (0, 2), (1, 2)] {
        let jet = exact_jet(&p, pp, q, 11).unwrap();
        if q < p.dim() {
            assert!(dbar(&jet.value).unwrap().norm() < 1e-10 * jet.value.norm(), "({pp},{q}) not ∂̄-closed");
        }
        let fd = jet_by_differences(&family, |at| exact_jet(at, pp, q, 11).unwrap().value.coeffs().to_vec());
        assert_jet_matches(&format!("exact ({pp},{q})"), &jet, &fd, 1e-7);
        // The moving-frame construction makes the conjugate Lie derivative vanish identically.
        let parts = lie_components(&data, &jet).unwrap();
        assert!(parts.conjugate.norm() < 1e-12 * jet.value.norm().max(1.0), "({pp},{q})");
    }
}

#[test]
fn identity_suite_passes_on_fourier_families_across_seeds() {
    for (label, family) in fourier_families() {
        for seed in 0..20u64 {
            let report = identity_suite(&family, family.base_point(), seed).unwrap();
            assert_eq!(report.checks.len(), FORM_IDENTITIES.len() + GEOMETRIC_IDENTITIES.len());
            let failures: Vec<_> = report.failures().map(|c| format!("{} {:?}", c.name, c.defect)).collect();
            assert!(failures.is_empty(), "{label} seed {seed}: {failures:?}");
        }
    }
}

#[test]
fn identity_suite_passes_on_theta_families() {
    for degree in [1, -1] {
        let family = families::theta(degree, 48);
        let report = identity_suite(&family, family.base_point(), 3).unwrap();
        let failures: Vec<_> = report.failures().map(|c| format!("{} {:?}", c.name, c.defect)).collect();
        assert!(failures.is_empty(), "d={degree}: {failures:?}");
    }
}

#[test]
fn identity_suite_exercises_the_lie_identities() {
    // A suite that silently skips everything would pass; make sure the core checks ran.
    let family = families::abelian_surface(2, 1.0);
    let report = identity_suite(&family, family.base_point(), 5).unwrap();
    for name in ["lie_moved_along", "lie_conjugate_vanishes", "dbar_of_lie_along", "del_star_of_cup_del", "lie_commutator_pairing"] {
        let check = report.check(name).unwrap();
        assert!(!check.is_skipped(), "{name} skipped: {:?}", check.skip_reason);
    }
    let theta = families::theta(1, 32);
    let report = identity_suite(&theta, theta.base_point(), 5).unwrap();
    assert!(!report.check("dbar_of_lie_along").unwrap().is_skipped());
}

#[test]
fn identity_report_roundtrips_through_json() {
    let family = families::elliptic(3, 0.0);
    let report = identity_suite(&family, family.base_point(), 1).unwrap();
    let text = serde_json::to_string(&report).unwrap();
    let back: hodge_curvature::family::identities::IdentityReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back.checks.len(), report.checks.len());
    assert_eq!(back.passed(), report.passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn identity_suite_passes_along_the_elliptic_family(re in -0.5f64..0.5, im in 0.6f64..2.0, seed in any::<u64>()) {
        let family = families::elliptic(3, 0.2);
        let report = identity_suite(&family, c(re, im), seed).unwrap();
        let failures: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
        prop_assert!(failures.is_empty(), "{:?}", failures);
    }

    #[test]
    fn geodesic_curvature_tracks_the_kaehler_shift(shift in 0.0f64..5.0) {
        let base = point(&families::skewed_curve(3, 0.0)).horizontal_data().unwrap().geodesic_curvature;
        let shifted = point(&families::skewed_curve(3, shift)).horizontal_data().unwrap().geodesic_curvature;
        prop_assert!((shifted - base - shift).abs() < 1e-10);
    }

    #[test]
    fn kodaira_spencer_is_symmetric_after_lowering(re in -0.3f64..0.3, im in -0.3f64..0.3) {
        let family = families::abelian_surface(2, 0.0);
        let p = family.at(c(re, im)).unwrap();
        let data = p.horizontal_data().unwrap();
        prop_assert!(data.kodaira_spencer.symmetry_defect(p.fiber().metric()) < 1e-12);
    }
}
