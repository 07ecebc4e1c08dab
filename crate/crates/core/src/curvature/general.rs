//! The general curvature formula and its untwisted specialization.

use rayon::prelude::*;

use crate::dolbeault::{del_star, green, harmonic_projection, Which};
use crate::error::{Error, Result};
use crate::family::identities::{commutator_pairing, derivative_cup, lambda_bracket};
use crate::family::{FamilyPoint, HorizontalData};
use crate::forms::algebra::{cup, cup_conjugate, wedge_end};
use crate::forms::PQForm;
use crate::linalg::{c, CMat};

use super::{images, pair_optional, Assembly, Evaluator, HarmonicFrame, CurvatureReport};

fn parity(p: usize) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A∪ψ where it lands in range.
pub(crate) fn cup_along(data: &HorizontalData, psi: &PQForm) -> Result<Option<PQForm>> {
    if psi.p() >= 1 && psi.q() < psi.dim() {
        cup(&data.kodaira_spencer, psi).map(Some)
    } else {
        Ok(None)
    }
}

/// A_s̄∪ψ where it lands in range.
pub(crate) fn cup_against(data: &HorizontalData, psi: &PQForm) -> Result<Option<PQForm>> {
    if psi.q() >= 1 && psi.p() < psi.dim() {
        cup_conjugate(&data.kodaira_spencer, psi).map(Some)
    } else {
        Ok(None)
    }
}

/// Right-hand sides of ∂̄(L'_vψ) and ∂̄*(L'_v̄ψ) for a harmonic ψ; `None` where the target
/// bidegree leaves the range.
///
/// The first is A contracted into the derivative slot of ∂ψ plus η_s∧ψ, which with the slot
/// convention of [`cup`] equals A∪∂ψ − ∂(A∪ψ) + η_s∧ψ. The second is
/// (−1)^p∂*(A_s̄∪ψ) + (−1)^pA_s̄∪∂*ψ + [Λ, iη_s̄]ψ.
pub fn w_vectors(data: &HorizontalData, psi: &PQForm) -> Result<(Option<PQForm>, Option<PQForm>)> {
    let n = psi.dim();
    let (p, q) = (psi.p(), psi.q());
    let along = if q < n {
        let mut w = derivative_cup(data, psi)?;
        w.add_assign(&wedge_end(&data.atiyah_action(), psi)?)?;
        Some(w)
    } else {
        None
    };
    let against = if q >= 1 {
        let sign = c(parity(p), 0.0);
        let mut w = lambda_bracket(&data.atiyah_conjugate_action(), psi)?;
        if let Some(cupped) = cup_against(data, psi)? {
            w.axpy(sign, &del_star(&cupped)?)?;
        }
        if p >= 1 {
            if let Some(cupped) = cup_against(data, &del_star(psi)?)? {
                w.axpy(sign, &cupped)?;
            }
        }
        Some(w)
    } else {
        None
    };
    Ok((along, against))
}

/// ⟨Gw^(k), w^(l)⟩ for optional images.
fn green_pairs(ws: &[Option<PQForm>]) -> Result<CMat> {
    let solved: Vec<Option<PQForm>> = ws.iter().map(|w| w.as_ref().map(|w| green(w, Which::Dbar)).transpose()).collect::<Result<_>>()?;
    pair_optional(&solved, ws)
}

/// R = ⟨L_{[v,v̄]}ψ,ψ⟩ + ⟨Θ(v,v̄)ψ,ψ⟩ − ⟨Gw_s,w_s⟩ + ⟨Gw_s̄,w_s̄⟩ + ‖A∪ψ‖² − ‖A_s̄∪ψ‖², with the
/// first pairing expanded into fiber operators weighted by c(ω).
pub fn curvature_main(point: &FamilyPoint, data: &HorizontalData, frame: &HarmonicFrame) -> Result<CurvatureReport> {
    let rank = frame.rank();
    let values: Vec<&PQForm> = frame.values().collect();
    let mut out = Assembly::new(rank);

    let mut commutator = CMat::zeros(rank, rank);
    let curvature = c(data.geodesic_curvature, 0.0);
    // Every term of the pairing carries c(ω) or its derivative.
    if curvature.norm() > 0.0 {
        let field = PQForm::constant(point.scalar_space(), 0, 0, &[vec![curvature]])?;
        let conjugate = PQForm::constant(point.scalar_space(), 0, 0, &[vec![curvature.conj()]])?;
        for (k, chi) in values.iter().enumerate() {
            for (l, psi) in values.iter().enumerate() {
                commutator[(k, l)] = commutator_pairing(&field, &conjugate, chi, psi)?.iter().sum();
            }
        }
    }
    out.add("lie_commutator", 1.0, commutator);

    let theta = images(frame, |psi| wedge_end(&data.theta_vv_action(), psi).map(Some))?;
    let members: Vec<Option<PQForm>> = values.iter().map(|&v| Some(v.clone())).collect();
    out.add("theta_vv", 1.0, pair_optional(&theta, &members)?);

    let (ws, wsbar): (Vec<_>, Vec<_>) =
        frame.members.par_iter().map(|m| w_vectors(data, &m.value)).collect::<Result<Vec<_>>>()?.into_iter().unzip();
    out.add("green_ws", -1.0, green_pairs(&ws)?);
    out.add("green_wsbar", 1.0, green_pairs(&wsbar)?);

    let along = images(frame, |psi| cup_along(data, psi))?;
    let against = images(frame, |psi| cup_against(data, psi))?;
    out.add("cup_s", 1.0, pair_optional(&along, &along)?);
    out.add("cup_sbar", -1.0, pair_optional(&against, &against)?);
    Ok(out.finish(Evaluator::Main, point, frame))
}

/// R = ‖H(A∪ψ)‖² − ‖H(A_s̄∪ψ)‖² for untwisted families.
pub fn curvature_griffiths(point: &FamilyPoint, data: &HorizontalData, frame: &HarmonicFrame) -> Result<CurvatureReport> {
    if !point.descriptor().is_untwisted() {
        return Err(Error::NotUntwisted);
    }
    let mut out = Assembly::new(frame.rank());
    let project = |x: Option<PQForm>| x.map(|x| harmonic_projection(&x)).transpose();
    let along = images(frame, |psi| project(cup_along(data, psi)?))?;
    let against = images(frame, |psi| project(cup_against(data, psi)?))?;
    out.add("harmonic_cup_s", 1.0, pair_optional(&along, &along)?);
    out.add("harmonic_cup_sbar", -1.0, pair_optional(&against, &against)?);
    Ok(out.finish(Evaluator::Griffiths, point, frame))
}
