//! Covariant Lie derivatives of fiber forms along the horizontal lift.
//!
//! In the real-coordinate gauge ∇_v acts on coefficients as ∂_s at fixed (x, y). The
//! differentials move: L_v dz^γ = Σ_α B_{γα} dz^α + Σ_β A^γ_β dz̄^β and L_v dz̄ = 0, where
//! B = ∂_α a and A is the Kodaira–Spencer form. L_v̄ is the conjugate substitution on
//! antiholomorphic slots. The type-preserving part is L' and the type-changing part L''.

use crate::error::{Error, Result};
use crate::forms::algebra::slot_derivation;
use crate::forms::PQForm;
use crate::linalg::conj_mat;

use super::frames::FrameJet;
use super::HorizontalData;

#[derive(Clone, Debug)]
pub struct LieComponents {
    /// L'_v ψ, bidegree (p,q).
    pub along: PQForm,
    /// L''_v ψ, bidegree (p−1,q+1); `None` when that bidegree does not exist.
    pub along_moved: Option<PQForm>,
    /// L'_v̄ ψ, bidegree (p,q).
    pub conjugate: PQForm,
    /// L''_v̄ ψ, bidegree (p+1,q−1).
    pub conjugate_moved: Option<PQForm>,
}

/// Splits L_v ψ and L_v̄ ψ by bidegree for a representative known to first order in s.
pub fn lie_components(data: &HorizontalData, jet: &FrameJet) -> Result<LieComponents> {
    let ds = jet.ds.as_ref().ok_or(Error::MissingSDerivative)?;
    let dsbar = jet.dsbar.as_ref().ok_or(Error::MissingSDerivative)?;
    let psi = &jet.value;
    let b = &data.lift_gradient;
    let a = data.kodaira_spencer.coeffs();
    let (same, along_moved) = slot_derivation(psi, true, b, a)?;
    let along = same.plus(ds)?;
    let (same_bar, conjugate_moved) = slot_derivation(psi, false, &conj_mat(a), &conj_mat(b))?;
    let conjugate = same_bar.plus(dsbar)?;
    Ok(LieComponents { along, along_moved, conjugate, conjugate_moved })
}
