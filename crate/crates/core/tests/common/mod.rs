#![allow(dead_code)]

use std::sync::Arc;

use hodge_curvature::bundles::BundleData;
use hodge_curvature::forms::{FormSpace, PQForm};
use hodge_curvature::geometry::{build_fiber, FiberChart, Lattice};
use hodge_curvature::linalg::{c, CMat, C64};

/// A skewed elliptic curve with a non-unit metric.
pub fn curve() -> FiberChart {
    let lattice = Lattice::new(CMat::from_element(1, 1, c(0.3, 1.1))).unwrap();
    build_fiber(lattice, CMat::from_element(1, 1, c(0.7, 0.0))).unwrap()
}

/// A non-product abelian surface with a non-diagonal hermitian metric.
pub fn surface() -> FiberChart {
    let tau = CMat::from_row_slice(2, 2, &[c(0.2, 1.3), c(0.1, 0.2), c(0.1, 0.2), c(-0.3, 0.9)]);
    let metric = CMat::from_row_slice(2, 2, &[c(1.2, 0.0), c(0.3, 0.1), c(0.3, -0.1), c(0.8, 0.0)]);
    build_fiber(Lattice::new(tau).unwrap(), metric).unwrap()
}

pub fn fourier(fiber: FiberChart, bundle: BundleData, cutoff: usize) -> Arc<FormSpace> {
    FormSpace::fourier(fiber, bundle, cutoff).unwrap()
}

/// Degree-d bundle on the curve τ = i·t with metric π|d|/t, so that ω = ±iΘ.
pub fn theta_grid(degree: i32, resolution: usize) -> Arc<FormSpace> {
    let tau = c(0.2, 1.0);
    let lattice = Lattice::new(CMat::from_element(1, 1, tau)).unwrap();
    let g = std::f64::consts::PI * degree.abs() as f64 / tau.im;
    let fiber = build_fiber(lattice, CMat::from_element(1, 1, c(g, 0.0))).unwrap();
    FormSpace::grid(fiber, BundleData::automorphy(degree), resolution).unwrap()
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

pub fn random(space: &Arc<FormSpace>, p: usize, q: usize, seed: u64) -> PQForm {
    PQForm::random(space, p, q, seed).unwrap()
}

pub mod families {
    use hodge_curvature::family::{Backend, CharacterLine, FamilyDescriptor, FamilyKind, TauPath};
    use hodge_curvature::linalg::{c, CMat, C64};

    pub fn scalar(z: C64) -> CMat {
        CMat::from_element(1, 1, z)
    }

    /// τ(s) = s over the elliptic curve at s = i.
    pub fn elliptic(cutoff: usize, shift: f64) -> FamilyDescriptor {
        let tau = TauPath::linear(scalar(c(0.0, 0.0)), scalar(c(1.0, 0.0))).unwrap();
        FamilyDescriptor::new(FamilyKind::ComplexStructure { tau }, Backend::Fourier { cutoff }, shift, c(0.0, 1.0)).unwrap()
    }

    /// A skewed quadratic path through a non-product period matrix at s = 0.
    pub fn skewed_curve(cutoff: usize, shift: f64) -> FamilyDescriptor {
        let tau = TauPath::new(vec![scalar(c(0.3, 1.1)), scalar(c(0.4, -0.2)), scalar(c(0.1, 0.05))]).unwrap();
        FamilyDescriptor::new(FamilyKind::ComplexStructure { tau }, Backend::Fourier { cutoff }, shift, c(0.0, 0.0)).unwrap()
    }

    /// An abelian surface whose period matrix moves along a symmetric direction.
    pub fn abelian_surface(cutoff: usize, shift: f64) -> FamilyDescriptor {
        let offset = CMat::from_row_slice(2, 2, &[c(0.2, 1.3), c(0.1, 0.2), c(0.1, 0.2), c(-0.3, 0.9)]);
        let slope = CMat::from_row_slice(2, 2, &[c(0.5, 0.1), c(0.2, -0.3), c(0.2, -0.3), c(-0.4, 0.2)]);
        let tau = TauPath::linear(offset, slope).unwrap();
        FamilyDescriptor::new(FamilyKind::ComplexStructure { tau }, Backend::Fourier { cutoff }, shift, c(0.0, 0.0)).unwrap()
    }

    /// Flat bundles over a fixed curve: the first summand starts trivial, the second is twisted.
    pub fn characters(cutoff: usize, shift: f64, end_bundle: bool) -> FamilyDescriptor {
        let characters = vec![
            CharacterLine { offset: vec![c(0.0, 0.0)], slope: vec![c(0.3, -0.2)] },
            CharacterLine { offset: vec![c(0.17, 0.11)], slope: vec![c(-0.1, 0.25)] },
        ];
        let kind = FamilyKind::CharacterPath { tau: scalar(c(0.3, 1.1)), characters, end_bundle };
        FamilyDescriptor::new(kind, Backend::Fourier { cutoff }, shift, c(0.0, 0.0)).unwrap()
    }

    /// A single character line, constant in s, over an abelian surface.
    pub fn static_character(cutoff: usize, shift: f64) -> FamilyDescriptor {
        let tau = CMat::from_row_slice(2, 2, &[c(0.2, 1.3), c(0.1, 0.2), c(0.1, 0.2), c(-0.3, 0.9)]);
        let characters = vec![CharacterLine { offset: vec![c(0.0, 0.0); 2], slope: vec![c(0.0, 0.0); 2] }];
        let kind = FamilyKind::CharacterPath { tau, characters, end_bundle: false };
        FamilyDescriptor::new(kind, Backend::Fourier { cutoff }, shift, c(0.0, 0.0)).unwrap()
    }

    /// Degree-d bundle over τ(s) = s at s = i.
    pub fn theta(degree: i32, resolution: usize) -> FamilyDescriptor {
        let tau = TauPath::linear(scalar(c(0.0, 0.0)), scalar(c(1.0, 0.0))).unwrap();
        FamilyDescriptor::new(FamilyKind::Theta { degree, tau }, Backend::Grid { resolution }, 0.0, c(0.0, 1.0)).unwrap()
    }
}
