//! Bundle-valued (p,q)-forms on a fiber.
//!
//! A form stores one field per (increasing multi-index pair, bundle summand):
//! ψ = Σ_{A,B} ψ^i_{A B̄} e_i ⊗ dz^A ∧ dz̄^B with A, B strictly increasing. This is the
//! 1/(p!q!)-normalized full skew sum with the redundant orderings dropped.

pub mod algebra;
pub mod index;
pub mod serialize;
pub mod space;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use index::{members, Layout};
pub use space::{BackendDescriptor, Discretization, FormSpace};

#[derive(Clone, Debug)]
pub struct PQForm {
    layout: Layout,
    space: Arc<FormSpace>,
    coeffs: Vec<C64>,
}

impl PQForm {
    pub fn zeros(space: &Arc<FormSpace>, p: usize, q: usize) -> Result<Self> {
        let n = space.dim();
        if p > n || q > n {
            return Err(Error::DegreeError(format!("({p},{q}) exceeds dimension {n}")));
        }
        let layout = Layout::new(n, p, q);
        let len = layout.len() * space.rank() * space.samples();
        Ok(Self { layout, space: Arc::clone(space), coeffs: vec![C64::new(0.0, 0.0); len] })
    }

    /// Zero form of the same space and bidegree.
    pub fn zeros_like(&self) -> Self {
        Self { layout: self.layout.clone(), space: Arc::clone(&self.space), coeffs: vec![C64::new(0.0, 0.0); self.coeffs.len()] }
    }

    /// Form with constant coefficients: `values[comp][summand]`.
    pub fn constant(space: &Arc<FormSpace>, p: usize, q: usize, values: &[Vec<C64>]) -> Result<Self> {
        let mut form = Self::zeros(space, p, q)?;
        if values.len() != form.layout.len() {
            return Err(Error::ShapeMismatch(format!("expected {} components", form.layout.len())));
        }
        for (comp, per_rank) in values.iter().enumerate() {
            for (r, &v) in per_rank.iter().enumerate() {
                if v != C64::new(0.0, 0.0) {
                    let field = space.constant_field(r, v)?;
                    form.field_mut(comp, r).copy_from_slice(&field);
                }
            }
        }
        Ok(form)
    }

    /// Standard complex Gaussian coefficients (grid: Gaussian combination of smooth sections).
    pub fn random(space: &Arc<FormSpace>, p: usize, q: usize, seed: u64) -> Result<Self> {
        let mut form = Self::zeros(space, p, q)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gauss = || {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        };
        match space.discretization() {
            Discretization::Fourier(_) => form.coeffs.iter_mut().for_each(|v| *v = gauss()),
            Discretization::Grid(_) => {
                let basis = crate::dolbeault::grid_smooth_basis(space)?;
                for comp in 0..form.layout.len() {
                    for r in 0..space.rank() {
                        let weights: Vec<C64> = basis.iter().map(|_| gauss()).collect();
                        let field = form.field_mut(comp, r);
                        for (w, b) in weights.iter().zip(&basis) {
                            for (f, v) in field.iter_mut().zip(b) {
                                *f += w * v;
                            }
                        }
                    }
                }
            }
        }
        Ok(form)
    }

    pub fn p(&self) -> usize {
        self.layout.p
    }

    pub fn q(&self) -> usize {
        self.layout.q
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn space(&self) -> &Arc<FormSpace> {
        &self.space
    }

    pub fn rank(&self) -> usize {
        self.space.rank()
    }

    pub fn samples(&self) -> usize {
        self.space.samples()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    fn offset(&self, comp: usize, summand: usize) -> usize {
        (comp * self.rank() + summand) * self.samples()
    }

    pub fn field(&self, comp: usize, summand: usize) -> &[C64] {
        let o = self.offset(comp, summand);
        &self.coeffs[o..o + self.samples()]
    }

    pub fn field_mut(&mut self, comp: usize, summand: usize) -> &mut [C64] {
        let o = self.offset(comp, summand);
        let s = self.samples();
        &mut self.coeffs[o..o + s]
    }

    /// Coefficient field of dz^A ∧ dz̄^B (masks) in `summand`.
    pub fn field_of(&self, holo: u8, anti: u8, summand: usize) -> &[C64] {
        self.field(self.layout.component(holo, anti), summand)
    }

    pub fn same_space(&self, other: &PQForm) -> bool {
        self.space.id() == other.space.id()
    }

    pub fn check_compatible(&self, other: &PQForm) -> Result<()> {
        if !self.same_space(other) {
            return Err(Error::ShapeMismatch("forms live on different spaces".into()));
        }
        if self.p() != other.p() || self.q() != other.q() {
            return Err(Error::ShapeMismatch(format!("bidegrees ({},{}) and ({},{})", self.p(), self.q(), other.p(), other.q())));
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &PQForm) -> Result<()> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    /// self += a · other.
    pub fn axpy(&mut self, a: C64, other: &PQForm) -> Result<()> {
        self.check_compatible(other)?;
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
        Ok(())
    }

    pub fn scaled(&self, a: C64) -> PQForm {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn plus(&self, other: &PQForm) -> Result<PQForm> {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn minus(&self, other: &PQForm) -> Result<PQForm> {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn norm(&self) -> f64 {
        l2_inner(self, self).map(|z| z.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Pointwise weights ⟨dz^A∧dz̄^B, dz^C∧dz̄^D⟩ = det(g^{c̄ a}) · det(g^{b̄ d}) for a layout.
pub fn pointwise_weights(space: &FormSpace, layout: &Layout) -> CMat {
    let ginv = space.fiber().metric_inv();
    let len = layout.len();
    CMat::from_fn(len, len, |i, j| {
        let (a, b) = layout.masks(i);
        let (cm, d) = layout.masks(j);
        // (dz^α, dz^γ) = g^{γ̄α} = ginv[(γ, α)]; (dz̄^β, dz̄^δ) = conj g^{δ̄β} = ginv[(β, δ)].
        let holo = linalg::minor(ginv, &members(cm), &members(a));
        let anti = linalg::minor(ginv, &members(b), &members(d));
        holo * anti
    })
}

/// L² inner product ⟨φ, ψ⟩ = ∫ (φ, ψ)_{g,h} dV, linear in φ and conjugate-linear in ψ.
pub fn l2_inner(phi: &PQForm, psi: &PQForm) -> Result<C64> {
    phi.check_compatible(psi)?;
    let space = phi.space();
    let weights = pointwise_weights(space, phi.layout());
    let len = phi.layout().len();
    let mut total = C64::new(0.0, 0.0);
    for i in 0..len {
        for j in 0..len {
            let w = weights[(i, j)];
            if w.norm() == 0.0 {
                continue;
            }
            for r in 0..phi.rank() {
                total += w * space.field_inner(phi.field(i, r), psi.field(j, r));
            }
        }
    }
    Ok(total)
}

/// Generic random-form entry point mirroring [`PQForm::random`].
pub fn random_form(space: &Arc<FormSpace>, p: usize, q: usize, seed: u64) -> Result<PQForm> {
    PQForm::random(space, p, q, seed)
}
