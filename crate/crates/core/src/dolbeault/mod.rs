//! Fiberwise operators: ∂̄, ∂, their formal adjoints, Lefschetz L and Λ, Laplacians, harmonic
//! projection, Green operators and the curvature commutator [iΘ, Λ].
//!
//! Component conventions (0-based positions in increasing multi-indices, p = degree of the input):
//!   (∂̄ψ)_{A,B}   = (−1)^p Σ_ν (−1)^ν D̄_{B_ν} ψ_{A, B∖B_ν}
//!   (∂χ)_{A,B}    = Σ_μ (−1)^μ D_{A_μ} χ_{A∖A_μ, B}
//!   (∂̄*ψ)_{A,B'} = (−1)^{p+1} g^{β̄α} D_α ψ_{A, βB'}
//!   (∂*χ)_{A',B}  = −g^{β̄α} D̄_β χ_{αA', B}
//!   (Λψ)_{A',B'}  = (−1)^p i g^{β̄α} ψ_{αA', βB'}

pub mod harmonic;
pub mod krylov;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bundles::theta_section;
use crate::error::{Error, Result};
use crate::forms::algebra::{kaehler_form, wedge_end, EndForm};
use crate::forms::index::{canonicalize, insert_front, members, word_of, Slot};
use crate::forms::{l2_inner, Discretization, FormSpace, PQForm};
use crate::linalg::{c, C64};
use krylov::{conjugate_gradient, CgSettings};

/// Eigenvalues below this are treated as harmonic (Fourier backend).
pub const HARMONIC_CUTOFF: f64 = 1e-10;
/// A shift closer than this to an eigenvalue of □ on the orthogonal complement is singular.
pub const SHIFT_GAP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Dbar,
    Del,
}

fn sign_pow(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn dbar(psi: &PQForm) -> Result<PQForm> {
    let (p, q, n) = (psi.p(), psi.q(), psi.dim());
    if q >= n {
        return Err(Error::DegreeError(format!("∂̄ of a ({p},{q})-form in dimension {n}")));
    }
    let space = Arc::clone(psi.space());
    let mut out = PQForm::zeros(&space, p, q + 1)?;
    let src = psi.layout().clone();
    let dst = out.layout().clone();
    for (comp, a, b) in dst.components() {
        for (nu, beta) in members(b).into_iter().enumerate() {
            let sc = src.component(a, b & !(1 << beta));
            let scale = real(sign_pow(p) * sign_pow(nu));
            for r in 0..space.rank() {
                space.apply_anti(beta, r, psi.field(sc, r), out.field_mut(comp, r), scale);
            }
        }
    }
    Ok(out)
}

/// The (1,0)-part ∂_h of the Chern connection.
pub fn del(chi: &PQForm) -> Result<PQForm> {
    let (p, q, n) = (chi.p(), chi.q(), chi.dim());
    if p >= n {
        return Err(Error::DegreeError(format!("∂ of a ({p},{q})-form in dimension {n}")));
    }
    let space = Arc::clone(chi.space());
    let mut out = PQForm::zeros(&space, p + 1, q)?;
    let src = chi.layout().clone();
    let dst = out.layout().clone();
    for (comp, a, b) in dst.components() {
        for (mu, alpha) in members(a).into_iter().enumerate() {
            let sc = src.component(a & !(1 << alpha), b);
            for r in 0..space.rank() {
                space.apply_holo(alpha, r, chi.field(sc, r), out.field_mut(comp, r), real(sign_pow(mu)));
            }
        }
    }
    Ok(out)
}

pub fn dbar_star(psi: &PQForm) -> Result<PQForm> {
    let (p, q) = (psi.p(), psi.q());
    if q == 0 {
        return Err(Error::DegreeError(format!("∂̄* of a ({p},0)-form")));
    }
    let space = Arc::clone(psi.space());
    let n = space.dim();
    let mut out = PQForm::zeros(&space, p, q - 1)?;
    let src = psi.layout().clone();
    let dst = out.layout().clone();
    let pre = sign_pow(p + 1);
    for (comp, a, b) in dst.components() {
        for beta in 0..n {
            let Some((sign, full)) = insert_front(b, beta) else { continue };
            let sc = src.component(a, full);
            for alpha in 0..n {
                let g = space.fiber().raised(beta, alpha);
                if g.norm() == 0.0 {
                    continue;
                }
                for r in 0..space.rank() {
                    space.apply_holo(alpha, r, psi.field(sc, r), out.field_mut(comp, r), g * (pre * sign));
                }
            }
        }
    }
    Ok(out)
}

pub fn del_star(chi: &PQForm) -> Result<PQForm> {
    let (p, q) = (chi.p(), chi.q());
    if p == 0 {
        return Err(Error::DegreeError(format!("∂* of a (0,{q})-form")));
    }
    let space = Arc::clone(chi.space());
    let n = space.dim();
    let mut out = PQForm::zeros(&space, p - 1, q)?;
    let src = chi.layout().clone();
    let dst = out.layout().clone();
    for (comp, a, b) in dst.components() {
        for alpha in 0..n {
            let Some((sign, full)) = insert_front(a, alpha) else { continue };
            let sc = src.component(full, b);
            for beta in 0..n {
                let g = space.fiber().raised(beta, alpha);
                if g.norm() == 0.0 {
                    continue;
                }
                for r in 0..space.rank() {
                    space.apply_anti(beta, r, chi.field(sc, r), out.field_mut(comp, r), -g * sign);
                }
            }
        }
    }
    Ok(out)
}

/// L = ω∧ with the fiber Kähler form ω = i g_{αβ̄} dz^α∧dz̄^β.
pub fn lefschetz(chi: &PQForm) -> Result<PQForm> {
    let space = chi.space();
    let omega = kaehler_form(space.fiber().metric(), space.rank());
    wedge_end(&omega, chi)
}

pub fn lambda(psi: &PQForm) -> Result<PQForm> {
    let (p, q) = (psi.p(), psi.q());
    if p == 0 || q == 0 {
        return Err(Error::DegreeError(format!("Λ of a ({p},{q})-form")));
    }
    let space = Arc::clone(psi.space());
    let n = space.dim();
    let mut out = PQForm::zeros(&space, p - 1, q - 1)?;
    let src = psi.layout().clone();
    let dst = out.layout().clone();
    let pre = c(0.0, sign_pow(p));
    for (comp, a, b) in dst.components() {
        for alpha in 0..n {
            let Some((sa, fa)) = insert_front(a, alpha) else { continue };
            for beta in 0..n {
                let Some((sb, fb)) = insert_front(b, beta) else { continue };
                let g = space.fiber().raised(beta, alpha);
                if g.norm() == 0.0 {
                    continue;
                }
                let sc = src.component(fa, fb);
                let factor = pre * g * (sa * sb);
                for r in 0..space.rank() {
                    let input = psi.field(sc, r).to_vec();
                    for (o, v) in out.field_mut(comp, r).iter_mut().zip(&input) {
                        *o += factor * v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Λ extended by zero to bidegrees where it has nothing to contract.
pub fn lambda_or_zero(psi: &PQForm) -> Result<Option<PQForm>> {
    if psi.p() == 0 || psi.q() == 0 {
        Ok(None)
    } else {
        lambda(psi).map(Some)
    }
}

/// DD* + D*D by composing the first-order operators (terms that leave the bidegree range vanish).
pub fn laplacian_by_composition(psi: &PQForm, which: Which) -> Result<PQForm> {
    let n = psi.dim();
    let (lower, raise) = match which {
        Which::Dbar => (psi.q() > 0, psi.q() < n),
        Which::Del => (psi.p() > 0, psi.p() < n),
    };
    let (op, adj): (fn(&PQForm) -> Result<PQForm>, fn(&PQForm) -> Result<PQForm>) = match which {
        Which::Dbar => (dbar, dbar_star),
        Which::Del => (del, del_star),
    };
    let mut out = psi.zeros_like();
    if lower {
        out.add_assign(&op(&adj(psi)?)?)?;
    }
    if raise {
        out.add_assign(&adj(&op(psi)?)?)?;
    }
    Ok(out)
}

/// Multiplies every mode coefficient by `factor(eigenvalue)` (Fourier backend, flat bundles).
fn mode_multiplier(psi: &PQForm, factor: impl Fn(f64) -> f64) -> Result<PQForm> {
    let space = Arc::clone(psi.space());
    if !matches!(space.discretization(), Discretization::Fourier(_)) {
        return Err(Error::Unsupported("mode multipliers need the Fourier backend".into()));
    }
    let eigen: Vec<Vec<f64>> = (0..space.rank())
        .map(|r| (0..space.samples()).map(|k| space.mode_eigenvalue(r, k).unwrap_or(0.0)).collect())
        .collect();
    let mut out = psi.clone();
    for comp in 0..psi.layout().len() {
        for (r, lams) in eigen.iter().enumerate() {
            for (v, &lam) in out.field_mut(comp, r).iter_mut().zip(lams) {
                *v *= factor(lam);
            }
        }
    }
    Ok(out)
}

/// □ on flat fibers acts componentwise by −g^{β̄α}D_αD̄_β, diagonal on modes; here □_∂̄ = □_∂.
pub fn laplacian_closed_form(psi: &PQForm) -> Result<PQForm> {
    mode_multiplier(psi, |lam| lam)
}

/// □_∂̄ or □_∂: closed form on the Fourier backend, composition on the grid.
pub fn laplacian(psi: &PQForm, which: Which) -> Result<PQForm> {
    if psi.space().is_grid() {
        laplacian_by_composition(psi, which)
    } else {
        laplacian_closed_form(psi)
    }
}

fn require_dbar_or_flat(space: &FormSpace, which: Which) -> Result<()> {
    if which == Which::Del && space.is_grid() && !space.bundle().is_flat() {
        return Err(Error::Unsupported("∂-Green operator on a curved grid bundle".into()));
    }
    Ok(())
}

/// Orthogonal projection onto ker □_∂̄ (grid: onto the discrete near-kernel, see [`harmonic`]).
pub fn harmonic_projection(psi: &PQForm) -> Result<PQForm> {
    if !psi.space().is_grid() {
        return mode_multiplier(psi, |lam| if lam < HARMONIC_CUTOFF { 1.0 } else { 0.0 });
    }
    let basis = harmonic::grid_harmonic_basis(psi.space(), psi.p(), psi.q())?;
    harmonic::project(&basis.forms, psi)
}

/// Relative size ‖Hψ‖/‖ψ‖ of the harmonic component.
pub fn harmonic_fraction(psi: &PQForm) -> Result<f64> {
    let norm = psi.norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(harmonic_projection(psi)?.norm() / norm)
}

/// Green operator: □G = id − H and GH = 0.
pub fn green(psi: &PQForm, which: Which) -> Result<PQForm> {
    require_dbar_or_flat(psi.space(), which)?;
    if !psi.space().is_grid() {
        return mode_multiplier(psi, |lam| if lam < HARMONIC_CUTOFF { 0.0 } else { 1.0 / lam });
    }
    let kernel = harmonic::grid_harmonic_basis(psi.space(), psi.p(), psi.q())?.near_kernel();
    let rhs = harmonic::deflate(&kernel, psi)?;
    let deflated = |x: &PQForm| -> Result<PQForm> {
        let y = harmonic::deflate(&kernel, x)?;
        harmonic::deflate(&kernel, &laplacian_by_composition(&y, which)?)
    };
    let (u, _) = conjugate_gradient(deflated, &rhs, CgSettings::for_form(psi))?;
    harmonic::deflate(&kernel, &u)
}

/// □⁻¹ on forms that must already be orthogonal to the harmonic space.
pub fn inverse_on_complement(psi: &PQForm, leak_tolerance: f64) -> Result<PQForm> {
    let leak = harmonic_fraction(psi)?;
    if leak > leak_tolerance {
        return Err(Error::HarmonicLeak { leak });
    }
    green(psi, Which::Dbar)
}

/// (□_∂̄ + shift)⁻¹. Positive shifts are always regular. For other shifts the harmonic part is
/// divided by the shift and the orthogonal part solved separately; a shift within
/// [`SHIFT_GAP`] of a nonzero eigenvalue is rejected.
pub fn shifted_inverse(psi: &PQForm, shift: f64) -> Result<PQForm> {
    if psi.coeffs().iter().all(|z| z.norm() == 0.0) {
        return Ok(psi.zeros_like());
    }
    if !psi.space().is_grid() {
        let space = psi.space();
        let mut closest = f64::INFINITY;
        for r in 0..space.rank() {
            for k in 0..space.samples() {
                let lam = space.mode_eigenvalue(r, k).unwrap_or(0.0);
                let lam = if lam < HARMONIC_CUTOFF { 0.0 } else { lam };
                if lam > 0.0 || shift != 0.0 {
                    closest = closest.min((lam + shift).abs());
                }
            }
        }
        if closest < SHIFT_GAP {
            return Err(Error::SingularShift { shift, distance: closest });
        }
        return mode_multiplier(psi, |lam| {
            let lam = if lam < HARMONIC_CUTOFF { 0.0 } else { lam };
            1.0 / (lam + shift)
        });
    }
    let settings = CgSettings::for_form(psi);
    let shifted = |x: &PQForm| -> Result<PQForm> {
        let mut y = laplacian_by_composition(x, Which::Dbar)?;
        y.axpy(real(shift), x)?;
        Ok(y)
    };
    if shift > 0.0 {
        return conjugate_gradient(shifted, psi, settings).map(|(u, _)| u);
    }
    if shift == 0.0 {
        return Err(Error::SingularShift { shift, distance: 0.0 });
    }
    let basis = harmonic::grid_harmonic_basis(psi.space(), psi.p(), psi.q())?;
    let mut out = psi.zeros_like();
    for (x, &lam) in basis.forms.iter().zip(&basis.eigenvalues) {
        let coeff = l2_inner(psi, x)?;
        out.axpy(coeff / (lam + shift), x)?;
    }
    let kernel = basis.near_kernel();
    let perp = harmonic::deflate(&kernel, psi)?;
    if perp.norm() > 0.0 {
        // Normal equations: (□+σ)² is positive on the complement when σ is not an eigenvalue.
        let deflated = |x: &PQForm| -> Result<PQForm> {
            let y = harmonic::deflate(&kernel, x)?;
            harmonic::deflate(&kernel, &shifted(&y)?)
        };
        let rhs = deflated(&perp)?;
        match conjugate_gradient(|x| deflated(&deflated(x)?), &rhs, settings) {
            Ok((u, _)) => {
                let u_perp = harmonic::deflate(&kernel, &u)?;
                let residual = deflated(&u_perp)?.minus(&perp)?.norm() / perp.norm();
                if residual > 1e-6 {
                    return Err(Error::SingularShift { shift, distance: residual });
                }
                out.add_assign(&u_perp)?;
            }
            Err(Error::SolverDivergence { residual, .. }) => return Err(Error::SingularShift { shift, distance: residual }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// [iΘ, Λ]ψ by the explicit index formula
/// −g^{β̄α}(Θ_{αβ̄}ψ_{A,B} − Σ_μ Θ_{α_μβ̄} ψ_{A[α_μ→α],B} − Σ_ν Θ_{αβ̄_ν} ψ_{A,B[β_ν→β]}).
pub fn curvature_commutator(psi: &PQForm) -> Result<PQForm> {
    let space = Arc::clone(psi.space());
    let n = space.dim();
    let mut out = psi.zeros_like();
    let curv = &space.chern().curvature;
    let layout = psi.layout().clone();
    for (comp, a, b) in layout.components() {
        let word = word_of(a, b);
        for r in 0..space.rank() {
            let theta = &curv[r.min(curv.len() - 1)];
            if crate::linalg::max_abs(theta) == 0.0 {
                continue;
            }
            let mut terms: Vec<(usize, C64)> = Vec::new();
            for alpha in 0..n {
                for beta in 0..n {
                    let g = space.fiber().raised(beta, alpha);
                    if g.norm() == 0.0 {
                        continue;
                    }
                    terms.push((comp, -g * theta[(alpha, beta)]));
                    for (pos, slot) in word.iter().enumerate() {
                        let (replaced, coeff) = match *slot {
                            Slot::Holo(am) => (Slot::Holo(alpha), theta[(am, beta)]),
                            Slot::Anti(bn) => (Slot::Anti(beta), theta[(alpha, bn)]),
                        };
                        if coeff.norm() == 0.0 {
                            continue;
                        }
                        let mut w = word.clone();
                        w[pos] = replaced;
                        if let Some((sign, na, nb)) = canonicalize(&w) {
                            terms.push((layout.component(na, nb), g * coeff * sign));
                        }
                    }
                }
            }
            for (src, factor) in terms {
                let input = psi.field(src, r).to_vec();
                for (o, v) in out.field_mut(comp, r).iter_mut().zip(&input) {
                    *o += factor * v;
                }
            }
        }
    }
    Ok(out)
}

/// [iΘ, Λ] as the graded commutator iΘ∧Λψ − Λ(iΘ∧ψ), with Θ constant and diagonal.
pub fn curvature_commutator_composed(psi: &PQForm) -> Result<PQForm> {
    let space = psi.space();
    let n = space.dim();
    let layout11 = crate::forms::index::Layout::new(n, 1, 1);
    let diag: Vec<Vec<C64>> = space
        .chern()
        .curvature
        .iter()
        .map(|theta| {
            (0..layout11.len())
                .map(|comp| {
                    let (a, b) = layout11.masks(comp);
                    c(0.0, 1.0) * theta[(a.trailing_zeros() as usize, b.trailing_zeros() as usize)]
                })
                .collect()
        })
        .collect();
    let i_theta = EndForm::diagonal(n, 1, 1, &diag)?;
    let mut out = psi.zeros_like();
    if let Some(l) = lambda_or_zero(psi)? {
        out.add_assign(&wedge_end(&i_theta, &l)?)?;
    }
    if psi.p() < n && psi.q() < n {
        out.axpy(real(-1.0), &lambda(&wedge_end(&i_theta, psi)?)?)?;
    }
    Ok(out)
}

/// ‖(□_∂̄ − □_∂ − [iΘ,Λ])ψ‖ / ‖ψ‖ with both Laplacians assembled by composition.
pub fn bkn_defect(psi: &PQForm) -> Result<f64> {
    let norm = psi.norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let mut d = laplacian_by_composition(psi, Which::Dbar)?;
    d.axpy(real(-1.0), &laplacian_by_composition(psi, Which::Del)?)?;
    d.axpy(real(-1.0), &curvature_commutator(psi)?)?;
    Ok(d.norm() / norm)
}

/// Smooth sections used to draw random grid forms: low Fourier modes |k|,|l| ≤ 1 times the
/// theta sections (degree d > 0), their conjugates (d < 0), or 1 (d = 0).
pub fn grid_smooth_basis(space: &FormSpace) -> Result<Vec<Vec<C64>>> {
    let Discretization::Grid(grid) = space.discretization() else {
        return Err(Error::Unsupported("smooth grid basis requested on the Fourier backend".into()));
    };
    let degree = grid.grid().degree();
    let tau = space.fiber().period()[(0, 0)];
    let carriers: Vec<Box<dyn Fn(f64, f64) -> C64 + Sync>> = if degree == 0 {
        vec![Box::new(|_, _| C64::new(1.0, 0.0))]
    } else {
        (0..degree.abs())
            .map(|a| -> Box<dyn Fn(f64, f64) -> C64 + Sync> {
                let d = degree.abs();
                if degree > 0 {
                    Box::new(move |x, y| theta_section(tau, d, a, x, y).0)
                } else {
                    Box::new(move |x, y| theta_section(tau, d, a, x, y).0.conj())
                }
            })
            .collect()
    };
    let mut basis = Vec::new();
    for carrier in &carriers {
        for k in -1i32..=1 {
            for l in -1i32..=1 {
                let field = space.sample(|x, y| carrier(x, y) * C64::from_polar(1.0, 2.0 * PI * (k as f64 * x + l as f64 * y)))?;
                basis.push(field);
            }
        }
    }
    Ok(basis)
}
