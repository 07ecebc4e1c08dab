//! Fiberwise flat and product families: End-valued Green terms, the Weil–Petersson norm and its
//! curvature.
//!
//! The Atiyah forms are constant in the periodic gauge, so Green and harmonic operators applied to
//! End(E)-valued functions built from them are evaluated on the End(E) form space and read back as
//! constant endomorphisms; a result that is not constant is refused.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dolbeault::{dbar_star, del_star, green, harmonic_projection, lambda, laplacian, Which};
use crate::error::{Error, Result};
use crate::family::identities::{atiyah_space, lambda_bracket};
use crate::family::{FamilyDescriptor, FamilyPoint, HorizontalData};
use crate::forms::algebra::{cup, cup_conjugate, wedge_end, EndForm};
use crate::forms::{l2_inner, FormSpace, PQForm};
use crate::linalg::{c, CMat, C64, I};

use super::general::{cup_against, cup_along};
use super::{images, pair_optional, Assembly, CurvatureReport, Evaluator, HarmonicFrame};

/// Largest sampled deviation of η_s from a constant form accepted as parallel.
pub const PARALLEL_TOLERANCE: f64 = 1e-9;

/// Relative residual accepted when reading an endomorphism field back as a constant.
const CONSTANT_TOLERANCE: f64 = 1e-9;

/// The End(E)-valued function `form` as a constant endomorphism.
fn read_constant(form: &PQForm, rank: usize) -> Result<EndForm> {
    let n = form.dim();
    let mut out = EndForm::zeros(n, 0, 0, rank);
    let mut rebuilt = form.zeros_like();
    for i in 0..rank {
        for j in 0..rank {
            let mut unit = EndForm::zeros(n, 0, 0, rank);
            unit.matrices_mut()[0][(i, j)] = c(1.0, 0.0);
            let basis = match unit.to_form(form.space()) {
                Ok(b) => b,
                // Twisted summands carry no constants.
                Err(Error::Unsupported(_)) | Err(Error::RankMismatch(_)) => continue,
                Err(e) => return Err(e),
            };
            let coeff = l2_inner(form, &basis)? / l2_inner(&basis, &basis)?;
            out.matrices_mut()[0][(i, j)] = coeff;
            rebuilt.axpy(coeff, &basis)?;
        }
    }
    let residual = rebuilt.minus(form)?.norm();
    if residual > CONSTANT_TOLERANCE * form.norm().max(1.0) {
        return Err(Error::Unsupported(format!("endomorphism field is not constant (residual {residual:.2e})")));
    }
    Ok(out)
}

/// An endomorphism of E acting on the forms of `data` (by commutator on End(E)-valued forms).
fn acting(data: &HorizontalData, form: &EndForm) -> EndForm {
    if data.is_end_valued() {
        form.adjoint_lift()
    } else {
        form.clone()
    }
}

/// Shared End(E)-valued quantities at one fiber.
struct EndContext {
    space: Arc<FormSpace>,
    rank: usize,
    eta: PQForm,
    eta_conjugate: PQForm,
}

impl EndContext {
    fn new(point: &FamilyPoint, data: &HorizontalData) -> Result<Self> {
        let space = atiyah_space(point, data)?;
        Ok(Self {
            eta: data.atiyah.to_form(&space)?,
            eta_conjugate: data.atiyah_conjugate.to_form(&space)?,
            rank: data.atiyah.rank(),
            space,
        })
    }

    fn form(&self, x: &EndForm) -> Result<PQForm> {
        x.to_form(&self.space)
    }

    /// iΛ[α, β] for constant End-valued forms whose commutator has bidegree (≥1, ≥1).
    fn lambda_commutator(&self, a: &EndForm, b: &EndForm) -> Result<PQForm> {
        let bracket = self.form(&a.graded_commutator(b)?)?;
        Ok(lambda(&bracket)?.scaled(I))
    }

    /// iΛ[η_s, η_s̄], the fiber Laplacian of Θ_ss̄ on Hermite–Einstein fibers.
    fn curvature_variation(&self, data: &HorizontalData) -> Result<PQForm> {
        self.lambda_commutator(&data.atiyah, &data.atiyah_conjugate)
    }

    fn harmonic_constant(&self, x: &EndForm) -> Result<EndForm> {
        read_constant(&harmonic_projection(&self.form(x)?)?, self.rank)
    }

    fn green_constant(&self, f: &PQForm) -> Result<EndForm> {
        read_constant(&green(f, Which::Dbar)?, self.rank)
    }
}

/// ⟨Xψ_k, ψ_l⟩ for a constant endomorphism X.
fn endomorphism_pairs(data: &HorizontalData, frame: &HarmonicFrame, x: &EndForm) -> Result<CMat> {
    let action = acting(data, x);
    let moved = images(frame, |psi| wedge_end(&action, psi).map(Some))?;
    let members: Vec<Option<PQForm>> = frame.values().map(|v| Some(v.clone())).collect();
    pair_optional(&moved, &members)
}

fn green_pairs(xs: &[Option<PQForm>]) -> Result<CMat> {
    let solved: Vec<Option<PQForm>> = xs.iter().map(|x| x.as_ref().map(|x| green(x, Which::Dbar)).transpose()).collect::<Result<_>>()?;
    pair_optional(&solved, xs)
}

/// Curvature for families flat on fibers with parallel η_s:
/// ⟨H(Θ(v,v̄))ψ,ψ⟩ + ⟨G(iΛ[η_s,η_s̄] + ∂̄*(A∪η_s̄) + ∂*(A_s̄∪η_s))ψ,ψ⟩ + ‖H(A∪ψ)‖² − ‖H(A_s̄∪ψ)‖².
pub fn curvature_flat(point: &FamilyPoint, data: &HorizontalData, frame: &HarmonicFrame) -> Result<CurvatureReport> {
    if !point.base_bundle().is_flat() {
        return Err(Error::NotFiberwiseFlat);
    }
    if data.atiyah_variation > PARALLEL_TOLERANCE {
        return Err(Error::NotParallel { defect: data.atiyah_variation });
    }
    let ctx = EndContext::new(point, data)?;
    let mut source = ctx.curvature_variation(data)?;
    source.add_assign(&dbar_star(&cup(&data.kodaira_spencer, &ctx.eta_conjugate)?)?)?;
    source.add_assign(&del_star(&cup_conjugate(&data.kodaira_spencer, &ctx.eta)?)?)?;

    let mut out = Assembly::new(frame.rank());
    out.add("harmonic_theta_vv", 1.0, endomorphism_pairs(data, frame, &ctx.harmonic_constant(&data.theta_vv)?)?);
    out.add("green_curvature_variation", 1.0, endomorphism_pairs(data, frame, &ctx.green_constant(&source)?)?);
    let project = |x: Option<PQForm>| x.map(|x| harmonic_projection(&x)).transpose();
    let along = images(frame, |psi| project(cup_along(data, psi)?))?;
    let against = images(frame, |psi| project(cup_against(data, psi)?))?;
    out.add("harmonic_cup_s", 1.0, pair_optional(&along, &along)?);
    out.add("harmonic_cup_sbar", -1.0, pair_optional(&against, &against)?);
    Ok(out.finish(Evaluator::Flat, point, frame))
}

/// Curvature for product families of Hermite–Einstein bundles:
/// ⟨H(Θ_ss̄)ψ,ψ⟩ + ⟨G(iΛ[η_s,η_s̄])ψ,ψ⟩ − ⟨G(η_s∧ψ), η_s∧ψ⟩ + ⟨G([Λ,iη_s̄]ψ), [Λ,iη_s̄]ψ⟩.
pub fn curvature_he(point: &FamilyPoint, data: &HorizontalData, frame: &HarmonicFrame) -> Result<CurvatureReport> {
    if !point.descriptor().is_product() {
        return Err(Error::NotProductFamily);
    }
    let n = point.dim();
    let ctx = EndContext::new(point, data)?;
    let mut out = Assembly::new(frame.rank());
    // On a product family the horizontal lift is ∂_s itself, so Θ(v,v̄) = Θ_ss̄.
    out.add("harmonic_theta_ss", 1.0, endomorphism_pairs(data, frame, &ctx.harmonic_constant(&data.theta_vv)?)?);
    out.add("green_curvature_variation", 1.0, endomorphism_pairs(data, frame, &ctx.green_constant(&ctx.curvature_variation(data)?)?)?);
    let wedged = images(frame, |psi| if psi.q() < n { wedge_end(&data.atiyah_action(), psi).map(Some) } else { Ok(None) })?;
    out.add("green_eta_wedge", -1.0, green_pairs(&wedged)?);
    let contracted = images(frame, |psi| if psi.q() >= 1 { lambda_bracket(&data.atiyah_conjugate_action(), psi).map(Some) } else { Ok(None) })?;
    out.add("green_lambda_eta", 1.0, green_pairs(&contracted)?);
    Ok(out.finish(Evaluator::HermiteEinstein, point, frame))
}

/// Curvature of R^qf_*End(E) along the wedge power η^q_s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatPowerTerm {
    pub q: usize,
    /// ⟨G(iΛ[η_s,η_s̄])η^q, η^q⟩ with the endomorphism acting by commutator.
    pub green_curvature_variation: f64,
    /// ⟨G(iΛ[η_s̄,η^q]), iΛ[η_s̄,η^q]⟩.
    pub green_lambda_bracket: f64,
    pub value: f64,
    /// ‖□η^q_s‖.
    pub harmonicity_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WpReport {
    pub parameter: [f64; 2],
    /// ∫ tr(iΛ(η_s^* ∧ η_s)) dV.
    pub wp_norm: f64,
    /// The same integrand with the factors in the order η_s ∧ η_s^*.
    pub reversed_ordering: f64,
    /// ‖η_s‖² by the L² inner product of End(E)-valued forms.
    pub direct_norm: f64,
    /// 2⟨G(iΛ[η_s,η_s̄]), iΛ[η_s,η_s̄]⟩ − ⟨G([η_s,η_s]), [η_s,η_s]⟩.
    pub sectional_curvature: f64,
    pub flat_powers: Vec<FlatPowerTerm>,
    /// ⟨[H(Θ_ss̄), η_s], η_s⟩, which vanishes for End(E)-valued forms.
    pub harmonic_drop: f64,
    pub semi_positive: bool,
}

fn re_inner(a: &PQForm, b: &PQForm) -> Result<f64> {
    Ok(l2_inner(a, b)?.re)
}

/// ⟨Gx, x⟩.
fn green_energy(x: &PQForm) -> Result<f64> {
    re_inner(&green(x, Which::Dbar)?, x)
}

/// Weil–Petersson norm of ∂_s and the curvature of the End(E)-valued direct images along η_s.
pub fn wp_suite(family: &FamilyDescriptor, s: C64) -> Result<WpReport> {
    if !family.is_product() {
        return Err(Error::NotProductFamily);
    }
    let point = family.at(s)?;
    if !point.base_bundle().is_flat() {
        return Err(Error::NotFiberwiseFlat);
    }
    let data = point.horizontal_data()?;
    let ctx = EndContext::new(&point, &data)?;
    let n = point.dim();
    let eta = &data.atiyah;
    let eta_conjugate = &data.atiyah_conjugate;
    let volume = point.fiber().volume();

    let integral = |form: &EndForm| -> Result<f64> {
        let density = read_constant(&lambda(&ctx.form(form)?)?.scaled(I), ctx.rank)?;
        Ok(density.trace()[0].re * volume)
    };
    let adjoint = eta.adjoint();
    let wp_norm = integral(&adjoint.wedge(eta)?)?;
    let reversed_ordering = integral(&eta.wedge(&adjoint)?)?;
    let direct_norm = re_inner(&ctx.eta, &ctx.eta)?;

    let variation = ctx.curvature_variation(&data)?;
    let mut sectional_curvature = 2.0 * green_energy(&variation)?;
    if n >= 2 {
        sectional_curvature -= green_energy(&ctx.form(&eta.graded_commutator(eta)?)?)?;
    }

    let variation_constant = ctx.green_constant(&variation)?.adjoint_lift();
    let mut flat_powers = Vec::with_capacity(n);
    let mut power = eta.clone();
    for q in 1..=n {
        if q > 1 {
            power = power.wedge(eta)?;
        }
        // η^q as an End(E)-valued form, acted on by commutator.
        let psi = ctx.form(&power)?;
        let green_curvature_variation = re_inner(&wedge_end(&variation_constant, &psi)?, &psi)?;
        let green_lambda_bracket = green_energy(&ctx.lambda_commutator(eta_conjugate, &power)?)?;
        flat_powers.push(FlatPowerTerm {
            q,
            green_curvature_variation,
            green_lambda_bracket,
            value: green_curvature_variation + green_lambda_bracket,
            harmonicity_defect: laplacian(&psi, Which::Dbar)?.norm(),
        });
    }

    let harmonic_theta = ctx.harmonic_constant(&data.theta_vv)?.adjoint_lift();
    let harmonic_drop = l2_inner(&wedge_end(&harmonic_theta, &ctx.eta)?, &ctx.eta)?.norm();

    let floor = -1e-10 * direct_norm.max(1.0);
    let semi_positive = sectional_curvature >= floor && flat_powers.iter().all(|t| t.value >= floor);
    Ok(WpReport { parameter: [s.re, s.im], wp_norm, reversed_ordering, direct_norm, sectional_curvature, flat_powers, harmonic_drop, semi_positive })
}
