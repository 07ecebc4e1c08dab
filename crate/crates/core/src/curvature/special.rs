//! Line-bundle specializations where ω is ±iΘ on fibers.

use crate::dolbeault::{del, del_star, inverse_on_complement, shifted_inverse};
use crate::error::{Error, Result};
use crate::family::{FamilyPoint, HorizontalData};
use crate::forms::PQForm;
use crate::linalg::CMat;

use super::general::{cup_against, cup_along};
use super::{images, pair_optional, Assembly, CurvatureReport, Evaluator, HarmonicFrame, LEAK_TOLERANCE};

fn require_line(point: &FamilyPoint, positive: bool) -> Result<()> {
    let family = point.descriptor();
    match family.degree() {
        Some(d) if (d > 0) == positive => {}
        _ => {
            let sign = if positive { "positive" } else { "negative" };
            return Err(Error::Precondition(format!("needs a line bundle {sign} on fibers")));
        }
    }
    if family.kaehler_shift() != 0.0 {
        return Err(Error::Precondition("ω must equal ±iΘ on fibers; the family carries a Kähler shift".into()));
    }
    Ok(())
}

/// ⟨op(x_k), x_l⟩ for optional images.
fn solved_pairs(xs: &[Option<PQForm>], op: impl Fn(&PQForm) -> Result<PQForm> + Sync) -> Result<CMat> {
    use rayon::prelude::*;
    let solved: Vec<Option<PQForm>> = xs.par_iter().map(|x| x.as_ref().map(&op).transpose()).collect::<Result<_>>()?;
    pair_optional(&solved, xs)
}

fn some_members(frame: &HarmonicFrame) -> Vec<Option<PQForm>> {
    frame.values().map(|v| Some(v.clone())).collect()
}

/// Curvature of f_*Ω^p(L) for L positive on fibers and ω = iΘ:
/// (n−p+1)⟨cψ,ψ⟩ − ⟨c∂ψ,∂ψ⟩ + (n−p+1)⟨(□+1)⁻¹(A∪ψ), A∪ψ⟩ − ⟨□⁻¹(A∪∂ψ), A∪∂ψ⟩.
pub fn curvature_line_p0(point: &FamilyPoint, data: &HorizontalData, frame: &HarmonicFrame) -> Result<CurvatureReport> {
    curvature_line_p0_with_shift(point, data, frame, 1.0)
}

/// [`curvature_line_p0`] with (□+1)⁻¹ replaced by (□+shift)⁻¹; any shift other than 1 is a
/// deliberately wrong formula used as a sensitivity control.
pub fn curvature_line_p0_with_shift(point: &FamilyPoint, data: &HorizontalData, frame: &HarmonicFrame, shift: f64) -> Result<CurvatureReport> {
    require_line(point, true)?;
    if frame.q != 0 {
        return Err(Error::Precondition(format!("needs q = 0, got q = {}", frame.q)));
    }
    let n = point.dim();
    let weight = (n - frame.p + 1) as f64;
    let c = data.geodesic_curvature;
    let members = some_members(frame);
    let derivatives = images(frame, |psi| if psi.p() < n { del(psi).map(Some) } else { Ok(None) })?;

    let mut out = Assembly::new(frame.rank());
    out.add("c_psi", weight * c, pair_optional(&members, &members)?);
    out.add("c_del_psi", -c, pair_optional(&derivatives, &derivatives)?);
    let cupped = images(frame, |psi| cup_along(data, psi))?;
    out.add("shifted_cup", weight, solved_pairs(&cupped, |x| shifted_inverse(x, shift))?);
    let cupped_derivatives: Vec<Option<PQForm>> =
        derivatives.iter().map(|d| d.as_ref().map(|d| cup_along(data, d)).transpose().map(Option::flatten)).collect::<Result<_>>()?;
    out.add("green_cup_del", -1.0, solved_pairs(&cupped_derivatives, |x| inverse_on_complement(x, LEAK_TOLERANCE))?);
    Ok(out.finish(Evaluator::LineP0, point, frame))
}

/// Curvature of R^qf_*Ω^n(L) for L negative on fibers and ω = −iΘ:
/// (q−1)⟨cψ,ψ⟩ + ⟨c∂*ψ,∂*ψ⟩ − (q+1)⟨(□−1)⁻¹(A∪ψ), A∪ψ⟩ + ⟨□⁻¹(A_s̄∪∂*ψ), A_s̄∪∂*ψ⟩.
pub fn curvature_line_nq(point: &FamilyPoint, data: &HorizontalData, frame: &HarmonicFrame) -> Result<CurvatureReport> {
    require_line(point, false)?;
    let n = point.dim();
    if frame.p != n {
        return Err(Error::Precondition(format!("needs p = n = {n}, got p = {}", frame.p)));
    }
    let q = frame.q as f64;
    let c = data.geodesic_curvature;
    let members = some_members(frame);
    let adjoints = images(frame, |psi| if psi.p() > 0 { del_star(psi).map(Some) } else { Ok(None) })?;

    let mut out = Assembly::new(frame.rank());
    out.add("c_psi", (q - 1.0) * c, pair_optional(&members, &members)?);
    out.add("c_del_star_psi", c, pair_optional(&adjoints, &adjoints)?);
    let cupped = images(frame, |psi| cup_along(data, psi))?;
    out.add("shifted_cup", -(q + 1.0), solved_pairs(&cupped, |x| shifted_inverse(x, -1.0))?);
    let cupped_adjoints: Vec<Option<PQForm>> =
        adjoints.iter().map(|d| d.as_ref().map(|d| cup_against(data, d)).transpose().map(Option::flatten)).collect::<Result<_>>()?;
    out.add("green_cup_del_star", 1.0, solved_pairs(&cupped_adjoints, |x| inverse_on_complement(x, LEAK_TOLERANCE))?);
    Ok(out.finish(Evaluator::LineNq, point, frame))
}
