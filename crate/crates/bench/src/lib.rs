//! Shared fixtures for the operator benchmarks.

use hodge_curvature::family::{Backend, FamilyDescriptor, FamilyKind, FamilyPoint, TauPath};
use hodge_curvature::linalg::{c, CMat};

/// τ(s) = s over the elliptic curve, at s = i.
pub fn elliptic(cutoff: usize) -> FamilyDescriptor {
    let tau = TauPath::linear(CMat::from_element(1, 1, c(0.0, 0.0)), CMat::from_element(1, 1, c(1.0, 0.0))).expect("valid path");
    FamilyDescriptor::new(FamilyKind::ComplexStructure { tau }, Backend::Fourier { cutoff }, 0.0, c(0.0, 1.0)).expect("valid family")
}

/// A non-product abelian surface moving along a symmetric direction, at s = 0.
pub fn abelian_surface(cutoff: usize) -> FamilyDescriptor {
    let offset = CMat::from_row_slice(2, 2, &[c(0.2, 1.3), c(0.1, 0.2), c(0.1, 0.2), c(-0.3, 0.9)]);
    let slope = CMat::from_row_slice(2, 2, &[c(0.5, 0.1), c(0.2, -0.3), c(0.2, -0.3), c(-0.4, 0.2)]);
    let tau = TauPath::linear(offset, slope).expect("valid path");
    FamilyDescriptor::new(FamilyKind::ComplexStructure { tau }, Backend::Fourier { cutoff }, 0.0, c(0.0, 0.0)).expect("valid family")
}

/// Degree-d bundle over τ(s) = s on the grid backend, at s = i.
pub fn theta(degree: i32, resolution: usize) -> FamilyDescriptor {
    let tau = TauPath::linear(CMat::from_element(1, 1, c(0.0, 0.0)), CMat::from_element(1, 1, c(1.0, 0.0))).expect("valid path");
    FamilyDescriptor::new(FamilyKind::Theta { degree, tau }, Backend::Grid { resolution }, 0.0, c(0.0, 1.0)).expect("valid family")
}

pub fn base(family: &FamilyDescriptor) -> FamilyPoint {
    family.at(family.base_point()).expect("fiber at the base point")
}
