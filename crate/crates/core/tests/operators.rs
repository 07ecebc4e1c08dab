mod common;

use common::{curve, fourier, random, rel, surface, theta_grid};
use hodge_curvature::bundles::BundleData;
use hodge_curvature::dolbeault::{
    bkn_defect, curvature_commutator, curvature_commutator_composed, dbar, dbar_star, del, del_star, green,
    harmonic_projection, lambda, laplacian, laplacian_by_composition, lefschetz, shifted_inverse, Which,
};
use hodge_curvature::forms::algebra::{cup, cup_conjugate, TangentValuedForm};
use hodge_curvature::forms::l2_inner;
use hodge_curvature::linalg::{c, CMat};
use hodge_curvature::Error;

fn bidegrees(n: usize) -> Vec<(usize, usize)> {
    (0..=n).flat_map(|p| (0..=n).map(move |q| (p, q))).collect()
}

#[test]
fn dbar_and_del_adjoints_fourier() {
    for (fiber, bundle) in [
        (curve(), BundleData::trivial()),
        (surface(), BundleData::trivial()),
        (surface(), BundleData::character(vec![0.1, -0.2, 0.3, 0.05])),
    ] {
        let space = fourier(fiber, bundle, 1);
        let n = space.dim();
        for (p, q) in bidegrees(n) {
            let seed = (10 * p + q) as u64;
            if q < n {
                let psi = random(&space, p, q, seed);
                let phi = random(&space, p, q + 1, seed + 100);
                let lhs = l2_inner(&dbar(&psi).unwrap(), &phi).unwrap();
                let rhs = l2_inner(&psi, &dbar_star(&phi).unwrap()).unwrap();
                assert!(rel(lhs, rhs) < 1e-10, "dbar ({p},{q}) {lhs} {rhs}");
            }
            if p < n {
                let chi = random(&space, p, q, seed + 200);
                let phi = random(&space, p + 1, q, seed + 300);
                let lhs = l2_inner(&del(&chi).unwrap(), &phi).unwrap();
                let rhs = l2_inner(&chi, &del_star(&phi).unwrap()).unwrap();
                assert!(rel(lhs, rhs) < 1e-10, "del ({p},{q}) {lhs} {rhs}");
            }
            if p < n && q < n {
                let chi = random(&space, p, q, seed + 400);
                let psi = random(&space, p + 1, q + 1, seed + 500);
                let lhs = l2_inner(&lefschetz(&chi).unwrap(), &psi).unwrap();
                let rhs = l2_inner(&chi, &lambda(&psi).unwrap()).unwrap();
                assert!(rel(lhs, rhs) < 1e-12, "L/Λ ({p},{q}) {lhs} {rhs}");
            }
        }
    }
}

#[test]
fn squares_vanish() {
    let space = fourier(surface(), BundleData::character(vec![0.1, -0.2, 0.3, 0.05]), 2);
    let psi = random(&space, 0, 0, 7);
    let dd = dbar(&dbar(&psi).unwrap()).unwrap();
    assert!(dd.max_abs() < 1e-10 * psi.max_abs().max(1.0) * 1e3);
    let hh = del(&del(&psi).unwrap()).unwrap();
    assert!(hh.max_abs() < 1e-8);
}

#[test]
fn lefschetz_commutator_is_degree_shift() {
    for fiber in [curve(), surface()] {
        let space = fourier(fiber, BundleData::trivial(), 1);
        let n = space.dim();
        for (p, q) in bidegrees(n) {
            let psi = random(&space, p, q, 3);
            let mut comm = psi.zeros_like();
            if p > 0 && q > 0 {
                comm.add_assign(&lefschetz(&lambda(&psi).unwrap()).unwrap()).unwrap();
            }
            if p < n && q < n {
                comm.axpy(c(-1.0, 0.0), &lambda(&lefschetz(&psi).unwrap()).unwrap()).unwrap();
            }
            let expected = psi.scaled(c(p as f64 + q as f64 - n as f64, 0.0));
            assert!(comm.minus(&expected).unwrap().max_abs() < 1e-10, "({p},{q})");
        }
    }
}

#[test]
fn kaehler_identity() {
    // −i∂* = [Λ, ∂̄] on (p,q)-forms.
    let space = fourier(surface(), BundleData::trivial(), 1);
    for (p, q) in [(1, 0), (1, 1), (2, 1), (2, 0)] {
        let psi = random(&space, p, q, 11);
        let lhs = del_star(&psi).unwrap().scaled(c(0.0, -1.0));
        let mut rhs = lambda(&dbar(&psi).unwrap()).unwrap();
        if q > 0 {
            rhs.axpy(c(-1.0, 0.0), &dbar(&lambda(&psi).unwrap()).unwrap()).unwrap();
        }
        assert!(lhs.minus(&rhs).unwrap().max_abs() < 1e-9 * lhs.max_abs(), "({p},{q})");
    }
}

#[test]
fn closed_form_laplacian_matches_composition() {
    for (fiber, bundle) in [(curve(), BundleData::trivial()), (surface(), BundleData::character(vec![0.1, -0.2, 0.3, 0.05]))] {
        let space = fourier(fiber, bundle, 2);
        for (p, q) in bidegrees(space.dim()) {
            let psi = random(&space, p, q, 5);
            let a = laplacian(&psi, Which::Dbar).unwrap();
            for which in [Which::Dbar, Which::Del] {
                let b = laplacian_by_composition(&psi, which).unwrap();
                assert!(a.minus(&b).unwrap().max_abs() < 1e-9 * a.max_abs(), "({p},{q}) {which:?}");
            }
        }
    }
}

#[test]
fn flat_bkn_defect_vanishes() {
    for bundle in [BundleData::trivial(), BundleData::character(vec![0.1, -0.2, 0.3, 0.05])] {
        let space = fourier(surface(), bundle, 1);
        for (p, q) in bidegrees(2) {
            let psi = random(&space, p, q, 21);
            assert!(bkn_defect(&psi).unwrap() < 1e-10);
            assert_eq!(curvature_commutator(&psi).unwrap().max_abs(), 0.0);
        }
    }
}

#[test]
fn green_and_harmonic_projection_fourier() {
    let space = fourier(curve(), BundleData::trivial(), 3);
    let psi = random(&space, 0, 1, 9);
    let h = harmonic_projection(&psi).unwrap();
    let hh = harmonic_projection(&h).unwrap();
    assert!(h.minus(&hh).unwrap().max_abs() < 1e-14);
    let g = green(&psi, Which::Dbar).unwrap();
    let recon = laplacian(&g, Which::Dbar).unwrap().plus(&h).unwrap();
    assert!(recon.minus(&psi).unwrap().max_abs() < 1e-10);
    assert!(harmonic_projection(&g).unwrap().max_abs() < 1e-14);

    let twisted = fourier(curve(), BundleData::character(vec![0.25, 0.4]), 3);
    let psi = random(&twisted, 0, 1, 9);
    assert!(harmonic_projection(&psi).unwrap().max_abs() < 1e-10);
}

#[test]
fn constant_dzbar_is_harmonic() {
    let space = fourier(curve(), BundleData::trivial(), 2);
    let form = hodge_curvature::forms::PQForm::constant(&space, 0, 1, &[vec![c(1.0, 0.0)]]).unwrap();
    let h = harmonic_projection(&form).unwrap();
    assert!(h.minus(&form).unwrap().max_abs() < 1e-15);
}

#[test]
fn dbar_star_rejects_functions() {
    let space = fourier(curve(), BundleData::trivial(), 1);
    let f = random(&space, 0, 0, 1);
    assert!(matches!(dbar_star(&f), Err(Error::DegreeError(_))));
}

/// Tangent-valued form whose lowered coefficients A_{β̄δ̄} are symmetric.
fn symmetric_tangent_form(metric_inv: &CMat) -> TangentValuedForm {
    let sym = CMat::from_row_slice(2, 2, &[c(0.3, 0.1), c(-0.2, 0.5), c(-0.2, 0.5), c(0.1, 0.2)]);
    let coeffs = CMat::from_fn(2, 2, |alpha, beta| (0..2).map(|e| metric_inv[(e, alpha)] * sym[(beta, e)]).sum());
    TangentValuedForm::new(coeffs).unwrap()
}

#[test]
fn cup_products_are_adjoint() {
    let fiber = surface();
    let a = symmetric_tangent_form(fiber.metric_inv());
    assert!(a.symmetry_defect(fiber.metric()) < 1e-14);
    let space = fourier(fiber, BundleData::trivial(), 1);
    for (p, q) in [(1, 0), (1, 1), (2, 0), (2, 1)] {
        let chi = random(&space, p, q, 31);
        let psi = random(&space, p - 1, q + 1, 32);
        let lhs = l2_inner(&cup(&a, &chi).unwrap(), &psi).unwrap();
        // L''_v̄ = (−1)^{p−1} A_s̄∪ on (p−1,q+1)-forms is the adjoint of A∪.
        let rhs = l2_inner(&chi, &cup_conjugate(&a, &psi).unwrap()).unwrap() * if p % 2 == 1 { 1.0 } else { -1.0 };
        assert!(rel(lhs, rhs) < 1e-12, "({p},{q}) {lhs} {rhs}");
    }
}

#[test]
fn grid_adjoints_and_bkn() {
    for degree in [1, -1, 2] {
        let space = theta_grid(degree, 32);
        for (p, q) in bidegrees(1) {
            let psi = random(&space, p, q, 41);
            if q == 0 {
                let phi = random(&space, p, 1, 42);
                let lhs = l2_inner(&dbar(&psi).unwrap(), &phi).unwrap();
                let rhs = l2_inner(&psi, &dbar_star(&phi).unwrap()).unwrap();
                assert!(rel(lhs, rhs) < 1e-10, "grid dbar d={degree} ({p},{q})");
            }
            if p == 0 {
                let phi = random(&space, 1, q, 43);
                let lhs = l2_inner(&del(&psi).unwrap(), &phi).unwrap();
                let rhs = l2_inner(&psi, &del_star(&phi).unwrap()).unwrap();
                assert!(rel(lhs, rhs) < 1e-10, "grid del d={degree} ({p},{q})");
            }
            let displayed = curvature_commutator(&psi).unwrap();
            let composed = curvature_commutator_composed(&psi).unwrap();
            assert!(displayed.minus(&composed).unwrap().max_abs() < 1e-12 * psi.max_abs().max(1.0));
            // ω = ±iΘ: [iΘ,Λ] = ±(p+q−1).
            let sign = degree.signum() as f64;
            let expected = psi.scaled(c(sign * (p as f64 + q as f64 - 1.0), 0.0));
            assert!(displayed.minus(&expected).unwrap().max_abs() < 1e-12 * psi.max_abs().max(1.0));
            // The grid identity holds up to the truncation error of the difference quotients.
            let defect = bkn_defect(&psi).unwrap();
            // Measured at N=32: ~6.6e-3 for |d|=1 and ~2.4e-2 for d=2 on (0,0) and (1,1).
            assert!(defect < 3e-2, "grid BKN d={degree} ({p},{q}) defect {defect}");
        }
    }
}

#[test]
fn grid_green_operator() {
    for degree in [1, -1] {
        let space = theta_grid(degree, 64);
        for q in [0, 1] {
            let psi = random(&space, 0, q, 51);
            let h = harmonic_projection(&psi).unwrap();
            let g = green(&psi, Which::Dbar).unwrap();
            let recon = laplacian(&g, Which::Dbar).unwrap().plus(&h).unwrap();
            let err = recon.minus(&psi).unwrap().norm() / psi.norm();
            assert!(err < 1e-7, "d={degree} q={q} green residual {err}");
            let shifted = shifted_inverse(&psi, 1.0).unwrap();
            let mut back = laplacian(&shifted, Which::Dbar).unwrap();
            back.add_assign(&shifted).unwrap();
            assert!(back.minus(&psi).unwrap().norm() < 1e-7 * psi.norm());
        }
    }
}
