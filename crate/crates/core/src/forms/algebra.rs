//! Algebraic operations on forms: wedge with constant scalar or End-valued forms, products of
//! fields, contractions, and the cup product with tangent-valued (0,1)-forms.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forms::index::{canonicalize, insert_front, members, rank_below, word_of, Layout, Slot};
use crate::forms::space::{Discretization, FormSpace};
use crate::forms::PQForm;
use crate::linalg::{CMat, C64};

fn sign_pow(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A tangent-valued (0,1)-form A = A^σ_β̄ ∂_σ ⊗ dz̄^β with constant coefficients, stored as
/// `coeffs[(σ, β)]`. Its conjugate A_s̄ = Ā^σ̄_α ∂_σ̄ ⊗ dz^α has Ā^σ̄_α = conj(A^σ_ᾱ).
#[derive(Clone, Debug, PartialEq)]
pub struct TangentValuedForm {
    coeffs: CMat,
}

impl TangentValuedForm {
    pub fn new(coeffs: CMat) -> Result<Self> {
        if !coeffs.is_square() {
            return Err(Error::ShapeMismatch("tangent-valued form needs an n×n coefficient matrix".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn zero(dim: usize) -> Self {
        Self { coeffs: CMat::zeros(dim, dim) }
    }

    pub fn coeffs(&self) -> &CMat {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    /// A_{β̄δ̄} = g_{αδ̄} A^α_β̄, returned as a matrix indexed (β, δ).
    pub fn lowered(&self, metric: &CMat) -> CMat {
        let n = self.dim();
        CMat::from_fn(n, n, |b, d| (0..n).map(|a| metric[(a, d)] * self.coeffs[(a, b)]).sum())
    }

    /// max |A_{β̄δ̄} − A_{δ̄β̄}|.
    pub fn symmetry_defect(&self, metric: &CMat) -> f64 {
        let low = self.lowered(metric);
        crate::linalg::max_abs(&(&low - low.transpose()))
    }

    /// Pointwise squared norm Σ g_{σρ̄} g^{β̄δ} A^σ_β̄ conj(A^ρ_δ̄).
    pub fn pointwise_norm_sqr(&self, metric: &CMat, metric_inv: &CMat) -> f64 {
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..n {
            for r in 0..n {
                for b in 0..n {
                    for d in 0..n {
                        acc += metric[(s, r)] * metric_inv[(d, b)] * self.coeffs[(s, b)] * self.coeffs[(r, d)].conj();
                    }
                }
            }
        }
        acc.re
    }
}

/// Cup product A ∪ χ: contracts ∂_σ into the first holomorphic slot and wedges dz̄^β in front,
/// (A∪χ)_{A', D} = (−1)^{p−1} Σ_ν (−1)^ν Σ_σ A^σ_{D_ν} χ_{σ A', D∖D_ν}. Maps (p,q) to (p−1,q+1).
pub fn cup(a: &TangentValuedForm, chi: &PQForm) -> Result<PQForm> {
    let (p, q) = (chi.p(), chi.q());
    if p == 0 {
        return Err(Error::DegreeError("cup product needs p ≥ 1".into()));
    }
    let n = chi.dim();
    let mut out = PQForm::zeros(chi.space(), p - 1, q + 1)?;
    let src = chi.layout().clone();
    let dst = out.layout().clone();
    let outer = sign_pow(p - 1);
    for (comp, amask, dmask) in dst.components() {
        for (nu, beta) in members(dmask).into_iter().enumerate() {
            let rest = dmask & !(1 << beta);
            for sigma in 0..n {
                let coeff = a.coeffs[(sigma, beta)];
                if coeff.norm() == 0.0 {
                    continue;
                }
                if let Some((sign, full)) = insert_front(amask, sigma) {
                    let factor = coeff * (outer * sign_pow(nu) * sign);
                    accumulate(&mut out, comp, chi, src.component(full, rest), factor);
                }
            }
        }
    }
    Ok(out)
}

/// Conjugate cup A_s̄ ∪ ψ: (A_s̄∪ψ)_{A₀, B'} = Σ_μ (−1)^μ Σ_σ Ā^σ̄_{α_μ} ψ_{A₀∖α_μ, σ̄ B'}.
/// Maps (p,q) to (p+1,q−1).
pub fn cup_conjugate(a: &TangentValuedForm, psi: &PQForm) -> Result<PQForm> {
    let (p, q) = (psi.p(), psi.q());
    if q == 0 {
        return Err(Error::DegreeError("conjugate cup product needs q ≥ 1".into()));
    }
    let n = psi.dim();
    let mut out = PQForm::zeros(psi.space(), p + 1, q - 1)?;
    let src = psi.layout().clone();
    let dst = out.layout().clone();
    for (comp, amask, bmask) in dst.components() {
        for (mu, alpha) in members(amask).into_iter().enumerate() {
            let rest = amask & !(1 << alpha);
            for sigma in 0..n {
                let coeff = a.coeffs[(sigma, alpha)].conj();
                if coeff.norm() == 0.0 {
                    continue;
                }
                if let Some((sign, full)) = insert_front(bmask, sigma) {
                    accumulate(&mut out, comp, psi, src.component(rest, full), coeff * (sign_pow(mu) * sign));
                }
            }
        }
    }
    Ok(out)
}

fn accumulate(out: &mut PQForm, out_comp: usize, src: &PQForm, src_comp: usize, factor: C64) {
    for r in 0..src.rank() {
        let input = src.field(src_comp, r).to_vec();
        for (o, v) in out.field_mut(out_comp, r).iter_mut().zip(&input) {
            *o += factor * v;
        }
    }
}

/// Constant End(E)-valued (p,q)-form: one r×r matrix per component (scalar forms use r = 1
/// or multiples of the identity).
#[derive(Clone, Debug, PartialEq)]
pub struct EndForm {
    layout: Layout,
    rank: usize,
    matrices: Vec<CMat>,
}

impl EndForm {
    pub fn zeros(dim: usize, p: usize, q: usize, rank: usize) -> Self {
        let layout = Layout::new(dim, p, q);
        let matrices = vec![CMat::zeros(rank, rank); layout.len()];
        Self { layout, rank, matrices }
    }

    /// Scalar constant form (coefficients per component) acting as multiples of the identity.
    pub fn scalar(dim: usize, p: usize, q: usize, rank: usize, coeffs: &[C64]) -> Result<Self> {
        let mut form = Self::zeros(dim, p, q, rank);
        if coeffs.len() != form.layout.len() {
            return Err(Error::ShapeMismatch(format!("expected {} components", form.layout.len())));
        }
        for (m, &c) in form.matrices.iter_mut().zip(coeffs) {
            *m = CMat::identity(rank, rank) * c;
        }
        Ok(form)
    }

    /// Diagonal form: `diag[i][comp]` is the coefficient of summand i.
    pub fn diagonal(dim: usize, p: usize, q: usize, diag: &[Vec<C64>]) -> Result<Self> {
        let rank = diag.len();
        let mut form = Self::zeros(dim, p, q, rank);
        for (i, coeffs) in diag.iter().enumerate() {
            if coeffs.len() != form.layout.len() {
                return Err(Error::ShapeMismatch(format!("expected {} components", form.layout.len())));
            }
            for (comp, &c) in coeffs.iter().enumerate() {
                form.matrices[comp][(i, i)] = c;
            }
        }
        Ok(form)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
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

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.matrices
    }

    pub fn matrix(&self, holo: u8, anti: u8) -> &CMat {
        &self.matrices[self.layout.component(holo, anti)]
    }

    pub fn matrices_mut(&mut self) -> &mut [CMat] {
        &mut self.matrices
    }

    pub fn max_abs(&self) -> f64 {
        self.matrices.iter().map(crate::linalg::max_abs).fold(0.0, f64::max)
    }

    pub fn scaled(&self, a: C64) -> Self {
        let mut out = self.clone();
        out.matrices.iter_mut().for_each(|m| *m *= a);
        out
    }

    pub fn plus(&self, other: &EndForm) -> Result<Self> {
        if self.layout != other.layout || self.rank != other.rank {
            return Err(Error::ShapeMismatch("End-valued forms of different shapes".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.matrices.iter_mut().zip(&other.matrices) {
            *a += b;
        }
        Ok(out)
    }

    /// Action on End(E) by the commutator: (i,j),(k,l) entry η_{ik}δ_{jl} − δ_{ik}η_{lj}.
    /// Summand (i,j) of End(E) has index i·r + j.
    pub fn adjoint_lift(&self) -> Self {
        let r = self.rank;
        let mut out = Self::zeros(self.dim(), self.p(), self.q(), r * r);
        for (m, lifted) in self.matrices.iter().zip(out.matrices.iter_mut()) {
            for i in 0..r {
                for j in 0..r {
                    for k in 0..r {
                        for l in 0..r {
                            let mut v = C64::new(0.0, 0.0);
                            if j == l {
                                v += m[(i, k)];
                            }
                            if i == k {
                                v -= m[(l, j)];
                            }
                            lifted[(i * r + j, k * r + l)] = v;
                        }
                    }
                }
            }
        }
        out
    }

    /// η^*: conjugate transpose of matrices and of the form part, a (q,p)-form.
    pub fn adjoint(&self) -> Self {
        let (p, q) = (self.p(), self.q());
        let mut out = Self::zeros(self.dim(), q, p, self.rank);
        let sign = sign_pow(p * q);
        for (comp, a, b) in self.layout.components() {
            // conj(dz^A ∧ dz̄^B) = dz̄^A ∧ dz^B = (−1)^{pq} dz^B ∧ dz̄^A.
            let target = out.layout.component(b, a);
            out.matrices[target] = self.matrices[comp].adjoint() * C64::new(sign, 0.0);
        }
        out
    }

    /// Wedge product with matrix composition, (α∧β)_{ik} = Σ_j α_{ij} ∧ β_{jk}.
    pub fn wedge(&self, other: &EndForm) -> Result<Self> {
        if self.rank != other.rank || self.dim() != other.dim() {
            return Err(Error::RankMismatch("End-valued forms of different rank".into()));
        }
        let n = self.dim();
        let (p, q) = (self.p() + other.p(), self.q() + other.q());
        if p > n || q > n {
            return Err(Error::DegreeError(format!("wedge lands in ({p},{q}) beyond dimension {n}")));
        }
        let mut out = Self::zeros(n, p, q, self.rank);
        for (c1, a1, b1) in self.layout.components() {
            for (c2, a2, b2) in other.layout.components() {
                let mut word = word_of(a1, b1);
                word.extend(word_of(a2, b2));
                if let Some((sign, a, b)) = canonicalize(&word) {
                    let target = out.layout.component(a, b);
                    out.matrices[target] += &self.matrices[c1] * &other.matrices[c2] * C64::new(sign, 0.0);
                }
            }
        }
        Ok(out)
    }

    /// Graded commutator [α, β] = α∧β − (−1)^{|α||β|} β∧α.
    pub fn graded_commutator(&self, other: &EndForm) -> Result<Self> {
        let deg = (self.p() + self.q()) * (other.p() + other.q());
        let ab = self.wedge(other)?;
        let ba = other.wedge(self)?;
        ab.plus(&ba.scaled(C64::new(-sign_pow(deg), 0.0)))
    }

    /// Matrix trace per component, as a scalar constant form.
    pub fn trace(&self) -> Vec<C64> {
        self.matrices.iter().map(|m| m.trace()).collect()
    }

    /// The same coefficients as a [`PQForm`] with constant fields (End summand (i,j) for a rank-r²
    /// space, or summand i for diagonal forms on a rank-r space).
    pub fn to_form(&self, space: &Arc<FormSpace>) -> Result<PQForm> {
        let r = self.rank;
        let values: Vec<Vec<C64>> = if space.rank() == r * r {
            self.matrices.iter().map(|m| (0..r * r).map(|k| m[(k / r, k % r)]).collect()).collect()
        } else if space.rank() == r {
            for m in &self.matrices {
                for i in 0..r {
                    for j in 0..r {
                        if i != j && m[(i, j)].norm() > 0.0 {
                            return Err(Error::RankMismatch("off-diagonal End form on a rank-r space".into()));
                        }
                    }
                }
            }
            self.matrices.iter().map(|m| (0..r).map(|i| m[(i, i)]).collect()).collect()
        } else {
            return Err(Error::RankMismatch(format!("End form of rank {r} on a rank-{} space", space.rank())));
        };
        PQForm::constant(space, self.p(), self.q(), &values)
    }
}

/// Wedge with a constant End-valued form acting on E-valued forms: (η∧ψ)^i = Σ_j η_{ij} ∧ ψ^j.
pub fn wedge_end(eta: &EndForm, psi: &PQForm) -> Result<PQForm> {
    if eta.rank() != psi.rank() {
        return Err(Error::RankMismatch(format!("End form of rank {} acting on rank {}", eta.rank(), psi.rank())));
    }
    let n = psi.dim();
    let (p, q) = (eta.p() + psi.p(), eta.q() + psi.q());
    if p > n || q > n {
        return Err(Error::DegreeError(format!("wedge lands in ({p},{q}) beyond dimension {n}")));
    }
    let space = psi.space();
    let r = psi.rank();
    let shifts = match space.discretization() {
        Discretization::Fourier(f) => (0..r).map(|i| f.modes(i).shift().to_vec()).collect(),
        Discretization::Grid(_) => vec![Vec::new(); r],
    };
    let mut out = PQForm::zeros(space, p, q)?;
    let out_layout = out.layout().clone();
    for (c1, a1, b1) in eta.layout.components() {
        let m = &eta.matrices[c1];
        for (c2, a2, b2) in psi.layout().components() {
            let mut word = word_of(a1, b1);
            word.extend(word_of(a2, b2));
            let Some((sign, a, b)) = canonicalize(&word) else { continue };
            let target = out_layout.component(a, b);
            for i in 0..r {
                for j in 0..r {
                    let coeff = m[(i, j)];
                    if coeff.norm() == 0.0 {
                        continue;
                    }
                    if i != j && shifts[i] != shifts[j] {
                        return Err(Error::Unsupported("constant End form mixing summands with different characters".into()));
                    }
                    let input = psi.field(c2, j).to_vec();
                    for (o, v) in out.field_mut(target, i).iter_mut().zip(&input) {
                        *o += coeff * sign * v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Interior product with a constant (0,1)-direction V = Σ v^δ ∂/∂z̄^δ.
pub fn contract_anti(v: &[C64], psi: &PQForm) -> Result<PQForm> {
    let (p, q) = (psi.p(), psi.q());
    if q == 0 {
        return Err(Error::DegreeError("contraction with ∂/∂z̄ needs q ≥ 1".into()));
    }
    let mut out = PQForm::zeros(psi.space(), p, q - 1)?;
    let dst = out.layout().clone();
    for (comp, a, b) in psi.layout().components() {
        for delta in members(b) {
            if v[delta].norm() == 0.0 {
                continue;
            }
            let sign = sign_pow(p + rank_below(b, delta));
            let target = dst.component(a, b & !(1 << delta));
            accumulate(&mut out, target, psi, comp, v[delta] * sign);
        }
    }
    Ok(out)
}

/// Interior product with a constant (1,0)-direction V = Σ v^γ ∂/∂z^γ.
pub fn contract_holo(v: &[C64], psi: &PQForm) -> Result<PQForm> {
    let (p, q) = (psi.p(), psi.q());
    if p == 0 {
        return Err(Error::DegreeError("contraction with ∂/∂z needs p ≥ 1".into()));
    }
    let mut out = PQForm::zeros(psi.space(), p - 1, q)?;
    let dst = out.layout().clone();
    for (comp, a, b) in psi.layout().components() {
        for gamma in members(a) {
            if v[gamma].norm() == 0.0 {
                continue;
            }
            let sign = sign_pow(rank_below(a, gamma));
            let target = dst.component(a & !(1 << gamma), b);
            accumulate(&mut out, target, psi, comp, v[gamma] * sign);
        }
    }
    Ok(out)
}

/// Pointwise product of two fields: convolution of mode coefficients (Fourier, truncated to the
/// cutoff; exact when the product stays inside it) or sample-wise product (grid).
pub fn multiply_fields(space: &FormSpace, f: &[C64], g: &[C64], f_summand: usize) -> Result<Vec<C64>> {
    match space.discretization() {
        Discretization::Grid(_) => Ok(f.iter().zip(g).map(|(a, b)| a * b).collect()),
        Discretization::Fourier(fs) => {
            let fmodes = fs.modes(f_summand);
            if fmodes.shift().iter().any(|&x| x != 0.0) {
                return Err(Error::Unsupported("multiplier must be an untwisted function".into()));
            }
            let modes = fmodes.modes();
            let mut out = vec![C64::new(0.0, 0.0); g.len()];
            for (i, &fv) in f.iter().enumerate() {
                if fv.norm() == 0.0 {
                    continue;
                }
                for (j, &gv) in g.iter().enumerate() {
                    let sum: Vec<i32> = modes[i].iter().zip(&modes[j]).map(|(a, b)| a + b).collect();
                    if let Some(k) = fmodes.index_of(&sum) {
                        out[k] += fv * gv;
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Wedge of a scalar-valued form field φ (rank-one, untwisted space) with ψ.
pub fn wedge_scalar_field(phi: &PQForm, psi: &PQForm) -> Result<PQForm> {
    if phi.rank() != 1 {
        return Err(Error::RankMismatch("scalar multiplier must have rank one".into()));
    }
    let n = psi.dim();
    let (p, q) = (phi.p() + psi.p(), phi.q() + psi.q());
    if p > n || q > n {
        return Err(Error::DegreeError(format!("wedge lands in ({p},{q}) beyond dimension {n}")));
    }
    let mut out = PQForm::zeros(psi.space(), p, q)?;
    let out_layout = out.layout().clone();
    for (c1, a1, b1) in phi.layout().components() {
        let f = phi.field(c1, 0);
        if f.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        for (c2, a2, b2) in psi.layout().components() {
            let mut word = word_of(a1, b1);
            word.extend(word_of(a2, b2));
            let Some((sign, a, b)) = canonicalize(&word) else { continue };
            let target = out_layout.component(a, b);
            for r in 0..psi.rank() {
                let prod = multiply_fields(phi.space(), f, psi.field(c2, r), 0)?;
                for (o, v) in out.field_mut(target, r).iter_mut().zip(&prod) {
                    *o += v * sign;
                }
            }
        }
    }
    Ok(out)
}

/// The fiber Kähler form ω = i Σ g_{αβ̄} dz^α ∧ dz̄^β as a scalar constant form.
pub fn kaehler_form(metric: &CMat, rank: usize) -> EndForm {
    let n = metric.nrows();
    let layout = Layout::new(n, 1, 1);
    let coeffs: Vec<C64> = (0..layout.len())
        .map(|comp| {
            let (a, b) = layout.masks(comp);
            let alpha = a.trailing_zeros() as usize;
            let beta = b.trailing_zeros() as usize;
            C64::new(0.0, 1.0) * metric[(alpha, beta)]
        })
        .collect();
    EndForm::scalar(n, 1, 1, rank, &coeffs).expect("layout length matches")
}

/// Derivation replacing one slot type in every monomial: each holomorphic (`holo = true`) or
/// antiholomorphic differential with index γ is replaced by
/// Σ_α to_holo[(γ,α)] dz^α + Σ_β to_anti[(γ,β)] dz̄^β.
/// Returns the part that keeps the bidegree and the part that moves one degree across
/// (to (p−1,q+1) for holomorphic slots, (p+1,q−1) for antiholomorphic ones), if that exists.
pub fn slot_derivation(psi: &PQForm, holo: bool, to_holo: &CMat, to_anti: &CMat) -> Result<(PQForm, Option<PQForm>)> {
    let (p, q) = (psi.p(), psi.q());
    let n = psi.dim();
    let mut same = psi.zeros_like();
    let mut moved = match holo {
        true if p >= 1 && q < n => Some(PQForm::zeros(psi.space(), p - 1, q + 1)?),
        false if q >= 1 && p < n => Some(PQForm::zeros(psi.space(), p + 1, q - 1)?),
        _ => None,
    };
    for (comp, a, b) in psi.layout().components() {
        let word = word_of(a, b);
        for (pos, slot) in word.iter().enumerate() {
            let gamma = match (*slot, holo) {
                (Slot::Holo(g), true) | (Slot::Anti(g), false) => g,
                _ => continue,
            };
            for target in 0..n {
                for (to_dz, m) in [(true, to_holo), (false, to_anti)] {
                    let coeff = m[(gamma, target)];
                    if coeff.norm() == 0.0 {
                        continue;
                    }
                    let mut w = word.clone();
                    w[pos] = if to_dz { Slot::Holo(target) } else { Slot::Anti(target) };
                    let Some((sign, na, nb)) = canonicalize(&w) else { continue };
                    let dest = if to_dz == holo { Some(&mut same) } else { moved.as_mut() };
                    if let Some(dest) = dest {
                        let tc = dest.layout().component(na, nb);
                        accumulate(dest, tc, psi, comp, coeff * sign);
                    }
                }
            }
        }
    }
    Ok((same, moved))
}
