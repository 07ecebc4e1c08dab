//! Discrete harmonic spaces on the grid backend.
//!
//! Difference operators are square matrices, so the discrete ∂̄ has index zero and the
//! continuous kernel survives only as a cluster of tiny eigenvalues of □_∂̄. Its dimension is
//! known from Riemann–Roch, and the continuous harmonic sections (constants, theta series,
//! their conjugates) approximate it to the stencil order. We refine those seeds by
//! Rayleigh–Ritz plus a correction step solved on the orthogonal complement,
//! (P□P) e = −(□x − λx), which converges quadratically because P□P is well conditioned.
//!
//! Index zero also forces spurious partners: for d > 0 each discrete theta section x has a
//! (·,1)-form ∂̄x/‖∂̄x‖ with the same tiny eigenvalue (for d < 0 the roles of q = 0, 1 swap).
//! These are grid-scale oscillations with no continuum counterpart; smooth data overlaps them
//! only at truncation-error size, but dividing by their eigenvalue would amplify that overlap
//! enormously. Green operators therefore deflate them together with the harmonic space, while
//! the harmonic projection itself uses the genuine kernel only.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::SymmetricEigen;

use crate::bundles::{theta_section, BundleKind};
use crate::error::{Error, Result};
use crate::forms::space::CachedBasis;
use crate::forms::{l2_inner, FormSpace, PQForm};
use crate::linalg::{CMat, C64};

use super::krylov::{conjugate_gradient, CgSettings};
use super::{laplacian_by_composition, Which};

const RITZ_TOLERANCE: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 8;

/// Orthonormal basis of the discrete harmonic space with its Ritz values, plus the spurious
/// near-kernel that solvers must avoid.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub forms: Vec<PQForm>,
    pub eigenvalues: Vec<f64>,
    pub spurious: Vec<PQForm>,
}

impl HarmonicBasis {
    /// Harmonic and spurious vectors together (mutually orthogonal by bidegree bookkeeping).
    pub fn near_kernel(&self) -> Vec<PQForm> {
        self.forms.iter().chain(&self.spurious).cloned().collect()
    }
}

/// Dimension of H^{p,q}(E) on an elliptic curve (K is trivial, so only q and the bundle matter).
pub fn grid_kernel_dimension(space: &FormSpace, _p: usize, q: usize) -> usize {
    match space.bundle().kind() {
        BundleKind::Trivial => 1,
        BundleKind::Character(chi) => usize::from(chi.iter().all(|x| x.fract() == 0.0)),
        BundleKind::CharacterSum(_) => 0,
        BundleKind::Automorphy { degree } => match (degree.signum(), q) {
            (1, 0) => *degree as usize,
            (-1, 1) => degree.unsigned_abs() as usize,
            (0, _) => 1,
            _ => 0,
        },
    }
}

fn seed_fields(space: &FormSpace, p: usize, q: usize) -> Result<Vec<Vec<C64>>> {
    let tau = space.fiber().period()[(0, 0)];
    let count = grid_kernel_dimension(space, p, q);
    match space.bundle().kind() {
        BundleKind::Automorphy { degree } if *degree != 0 => {
            let d = degree.abs();
            let conjugate = *degree < 0;
            (0..count as i32)
                .map(|a| {
                    space.sample(|x, y| {
                        let value = theta_section(tau, d, a, x, y).0;
                        if conjugate {
                            value.conj()
                        } else {
                            value
                        }
                    })
                })
                .collect()
        }
        BundleKind::Character(chi) if count == 1 => {
            let (cx, cy) = (chi[0], chi[1]);
            Ok(vec![space.sample(|x, y| C64::from_polar(1.0, -2.0 * PI * (cx * x + cy * y)))?])
        }
        _ if count == 1 => Ok(vec![space.sample(|_, _| C64::new(1.0, 0.0))?]),
        _ => Ok(Vec::new()),
    }
}

/// Σ ⟨ψ, x_i⟩ x_i for an orthonormal family.
pub fn project(basis: &[PQForm], psi: &PQForm) -> Result<PQForm> {
    let mut out = psi.zeros_like();
    for x in basis {
        out.axpy(l2_inner(psi, x)?, x)?;
    }
    Ok(out)
}

/// ψ minus its projection onto the span of an orthonormal family.
pub fn deflate(basis: &[PQForm], psi: &PQForm) -> Result<PQForm> {
    psi.minus(&project(basis, psi)?)
}

fn orthonormalize(forms: &mut Vec<PQForm>) -> Result<()> {
    let mut done: Vec<PQForm> = Vec::with_capacity(forms.len());
    for f in forms.drain(..) {
        let mut v = deflate(&done, &f)?;
        // Second pass for numerical orthogonality.
        v = deflate(&done, &v)?;
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::Precondition("harmonic seeds are linearly dependent".into()));
        }
        done.push(v.scaled(C64::new(1.0 / norm, 0.0)));
    }
    *forms = done;
    Ok(())
}

/// Rayleigh–Ritz rotation; returns the Ritz values in ascending order.
fn ritz(forms: &mut Vec<PQForm>) -> Result<(Vec<f64>, Vec<PQForm>)> {
    let k = forms.len();
    let images = forms.iter().map(|x| laplacian_by_composition(x, Which::Dbar)).collect::<Result<Vec<_>>>()?;
    let mut m = CMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = l2_inner(&images[j], &forms[i])?;
        }
    }
    let m = (&m + m.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut rotated = Vec::with_capacity(k);
    let mut rotated_images = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for &col in &order {
        let mut x = forms[0].zeros_like();
        let mut ax = forms[0].zeros_like();
        for i in 0..k {
            let w = eig.eigenvectors[(i, col)];
            x.axpy(w, &forms[i])?;
            ax.axpy(w, &images[i])?;
        }
        rotated.push(x);
        rotated_images.push(ax);
        values.push(eig.eigenvalues[col]);
    }
    *forms = rotated;
    Ok((values, rotated_images))
}

fn refine(mut forms: Vec<PQForm>) -> Result<(Vec<PQForm>, Vec<f64>)> {
    if forms.is_empty() {
        return Ok((forms, Vec::new()));
    }
    orthonormalize(&mut forms)?;
    for _ in 0..MAX_REFINEMENTS {
        let (values, images) = ritz(&mut forms)?;
        let residuals: Vec<PQForm> = images
            .iter()
            .zip(&forms)
            .zip(&values)
            .map(|((ax, x), &lam)| ax.minus(&x.scaled(C64::new(lam, 0.0))))
            .collect::<Result<_>>()?;
        let worst = residuals.iter().map(PQForm::norm).fold(0.0, f64::max);
        if worst <= RITZ_TOLERANCE {
            return Ok((forms, values));
        }
        let basis = forms.clone();
        let projected = |x: &PQForm| -> Result<PQForm> {
            let y = deflate(&basis, x)?;
            deflate(&basis, &laplacian_by_composition(&y, Which::Dbar)?)
        };
        for (x, r) in forms.iter_mut().zip(&residuals) {
            let rhs = deflate(&basis, &r.scaled(C64::new(-1.0, 0.0)))?;
            let (e, _) = conjugate_gradient(projected, &rhs, CgSettings::for_form(&rhs))?;
            x.add_assign(&e)?;
        }
        orthonormalize(&mut forms)?;
    }
    let (values, _) = ritz(&mut forms)?;
    Ok((forms, values))
}

fn genuine(space: &Arc<FormSpace>, p: usize, q: usize) -> Result<(Vec<PQForm>, Vec<f64>)> {
    let seeds = seed_fields(space, p, q)?
        .into_iter()
        .map(|field| {
            let mut f = PQForm::zeros(space, p, q)?;
            f.field_mut(0, 0).copy_from_slice(&field);
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;
    refine(seeds)
}

/// Index partners of the genuine kernel in the other antiholomorphic degree.
fn spurious(space: &Arc<FormSpace>, p: usize, q: usize) -> Result<Vec<PQForm>> {
    let degree = space.bundle().degree().unwrap_or(0);
    let seeds = match (degree.signum(), q) {
        (1, 1) => genuine(space, p, 0)?.0.iter().map(super::dbar).collect::<Result<Vec<_>>>()?,
        (-1, 0) => genuine(space, p, 1)?.0.iter().map(super::dbar_star).collect::<Result<Vec<_>>>()?,
        _ => Vec::new(),
    };
    Ok(refine(seeds)?.0)
}

/// Orthonormal basis of the discrete harmonic (p,q)-forms of a grid space (cached per space).
pub fn grid_harmonic_basis(space: &Arc<FormSpace>, p: usize, q: usize) -> Result<HarmonicBasis> {
    if !space.is_grid() || space.dim() != 1 {
        return Err(Error::Unsupported("discrete harmonic bases are built for grid curves".into()));
    }
    let rebuild = |fields: Vec<Vec<C64>>| {
        fields
            .into_iter()
            .map(|coeffs| {
                let mut f = PQForm::zeros(space, p, q)?;
                f.coeffs_mut().copy_from_slice(&coeffs);
                Ok(f)
            })
            .collect::<Result<Vec<_>>>()
    };
    if let Some(entry) = space.cached_harmonic(p, q) {
        return Ok(HarmonicBasis { forms: rebuild(entry.forms)?, eigenvalues: entry.eigenvalues, spurious: rebuild(entry.spurious)? });
    }
    let (forms, eigenvalues) = genuine(space, p, q)?;
    let spurious = spurious(space, p, q)?;
    let raw = |v: &[PQForm]| v.iter().map(|f| f.coeffs().to_vec()).collect::<Vec<_>>();
    space.store_harmonic(p, q, CachedBasis { forms: raw(&forms), eigenvalues: eigenvalues.clone(), spurious: raw(&spurious) });
    Ok(HarmonicBasis { forms, eigenvalues, spurious })
}
