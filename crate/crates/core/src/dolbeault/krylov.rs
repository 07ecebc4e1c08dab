//! Conjugate gradients for hermitian positive (semi)definite operators on forms.
//!
//! Inner products go through [`l2_inner`], whose sums run in a fixed order, so solves are
//! bitwise reproducible.

use crate::error::{Error, Result};
use crate::forms::{l2_inner, PQForm};
use crate::linalg::C64;

#[derive(Clone, Copy, Debug)]
pub struct CgSettings {
    pub relative_tolerance: f64,
    pub max_iterations: usize,
}

impl CgSettings {
    /// Relative residual 1e-9 with an iteration cap of 10·√dof.
    pub fn for_form(form: &PQForm) -> Self {
        let dof = form.coeffs().len().max(1) as f64;
        Self { relative_tolerance: 1e-9, max_iterations: (10.0 * dof.sqrt()).ceil() as usize }
    }
}

/// Solves A u = b for hermitian A ⪰ 0 with b in the range of A, starting from u = 0.
pub fn conjugate_gradient(apply: impl Fn(&PQForm) -> Result<PQForm>, rhs: &PQForm, settings: CgSettings) -> Result<(PQForm, usize)> {
    let mut u = rhs.zeros_like();
    let b_norm = l2_inner(rhs, rhs)?.re.sqrt();
    if b_norm == 0.0 {
        return Ok((u, 0));
    }
    let mut r = rhs.clone();
    let mut d = r.clone();
    let mut rr = b_norm * b_norm;
    for iteration in 1..=settings.max_iterations {
        let ad = apply(&d)?;
        let curvature = l2_inner(&d, &ad)?.re;
        if curvature <= 0.0 {
            return Err(Error::SolverDivergence { iterations: iteration, residual: rr.sqrt() / b_norm });
        }
        let alpha = rr / curvature;
        u.axpy(C64::new(alpha, 0.0), &d)?;
        r.axpy(C64::new(-alpha, 0.0), &ad)?;
        let rr_new = l2_inner(&r, &r)?.re;
        if rr_new.sqrt() <= settings.relative_tolerance * b_norm {
            return Ok((u, iteration));
        }
        let beta = rr_new / rr;
        let mut next = r.clone();
        next.axpy(C64::new(beta, 0.0), &d)?;
        d = next;
        rr = rr_new;
    }
    Err(Error::SolverDivergence { iterations: settings.max_iterations, residual: rr.sqrt() / b_norm })
}
