//! One-parameter families of tori over a disc in the s-plane, with the Kähler form ω of the
//! total space and the horizontal data every evaluator consumes.
//!
//! All fibers share the real torus R^{2n}/Z^{2n}; a family moves the period matrix τ(s) or the
//! characters of a flat bundle. For complex-structure and theta families ω = i∂∂̄Φ with
//! Φ(z, s) = λ·(Im z)ᵀ (Im τ(s))^{-1} (Im z), λ = 1 untwisted and 2π|d| for degree-d bundles,
//! so the fiber metric is (λ/2)(Im τ)^{-1}. A Kähler shift β adds β·i ds∧ds̄.
//!
//! The horizontal lift of ∂_s is v = ∂_s + a^α ∂_α with a = τ'(s)·y where z = x + τy. This is
//! exactly the coordinate field ∂_s at fixed real coordinates (x, y). Hence [v, v̄] = 0, and
//! covariant Lie derivatives differentiate coefficients at fixed (x, y) while the differentials
//! dz(s) = dx + τ(s)dy move.

pub mod frames;
pub mod geometric;
pub mod identities;
pub mod lie;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bundles::{end_bundle, BundleData, EndBundle};
use crate::error::{Error, Result};
use crate::forms::algebra::{EndForm, TangentValuedForm};
use crate::forms::FormSpace;
use crate::geometry::{build_fiber, FiberChart, Lattice};
use crate::linalg::{self, c, conj_mat, CMat, C64, I};

/// Polynomial period path τ(s) = Σ_j c_j s^j with symmetric coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct TauPath {
    coefficients: Vec<CMat>,
}

impl TauPath {
    pub fn new(coefficients: Vec<CMat>) -> Result<Self> {
        let Some(first) = coefficients.first() else {
            return Err(Error::Precondition("period path needs at least one coefficient".into()));
        };
        let n = first.nrows();
        for m in &coefficients {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::ShapeMismatch(format!("period path coefficients must all be {n}x{n}")));
            }
            if linalg::max_abs(&(m - m.transpose())) > 1e-14 * linalg::max_abs(m).max(1.0) {
                return Err(Error::Precondition("period matrices must be symmetric".into()));
            }
        }
        Ok(Self { coefficients })
    }

    pub fn constant(tau: CMat) -> Result<Self> {
        Self::new(vec![tau])
    }

    /// τ(s) = offset + s·slope.
    pub fn linear(offset: CMat, slope: CMat) -> Result<Self> {
        Self::new(vec![offset, slope])
    }

    pub fn dim(&self) -> usize {
        self.coefficients[0].nrows()
    }

    pub fn coefficients(&self) -> &[CMat] {
        &self.coefficients
    }

    pub fn value(&self, s: C64) -> CMat {
        let n = self.dim();
        self.coefficients.iter().rev().fold(CMat::zeros(n, n), |acc, m| acc * s + m)
    }

    pub fn derivative(&self, s: C64) -> CMat {
        let n = self.dim();
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(CMat::zeros(n, n), |acc, (j, m)| acc * s + m * c(j as f64, 0.0))
    }
}

/// Holomorphic character parameter u(s) = offset + s·slope ∈ C^n of one line summand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterLine {
    pub offset: Vec<C64>,
    pub slope: Vec<C64>,
}

impl CharacterLine {
    pub fn at(&self, s: C64) -> Vec<C64> {
        self.offset.iter().zip(&self.slope).map(|(o, w)| o + w * s).collect()
    }
}

/// Real character χ = (χ_x, χ_y) whose ∂̄-operator is ∂̄ − 2πi (τ−τ̄)^{-T} u dz̄, i.e.
/// u = χ_y − τᵀχ_x.
pub fn character_of(tau: &CMat, u: &[C64]) -> Result<Vec<f64>> {
    let n = tau.nrows();
    let imag_t = linalg::imag_part(&tau.transpose());
    let inv = linalg::inverse(&imag_t).ok_or_else(|| Error::NonPositiveMetric("degenerate period matrix".into()))?;
    let im_u = CMat::from_fn(n, 1, |i, _| c(u[i].im, 0.0));
    let chi_x = -(inv * im_u);
    let re_tau_t = tau.transpose().map(|z| c(z.re, 0.0));
    let chi_y = CMat::from_fn(n, 1, |i, _| c(u[i].re, 0.0)) + re_tau_t * &chi_x;
    Ok(chi_x.iter().chain(chi_y.iter()).map(|z| z.re).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind {
    /// Trivial bundle over a moving period matrix.
    ComplexStructure { tau: TauPath },
    /// Fixed τ; a sum of characters moving holomorphically. With `end_bundle` forms take values
    /// in End(E) instead of E.
    CharacterPath { tau: CMat, characters: Vec<CharacterLine>, end_bundle: bool },
    /// Degree-d line bundle (curves, grid backend) over a moving τ.
    Theta { degree: i32, tau: TauPath },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Backend {
    Fourier { cutoff: usize },
    Grid { resolution: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyDescriptor {
    kind: FamilyKind,
    backend: Backend,
    kaehler_shift: f64,
    base_point: C64,
}

impl FamilyDescriptor {
    pub fn new(kind: FamilyKind, backend: Backend, kaehler_shift: f64, base_point: C64) -> Result<Self> {
        match (&kind, backend) {
            (FamilyKind::Theta { degree, tau }, Backend::Grid { .. }) => {
                if *degree == 0 {
                    return Err(Error::Precondition("theta families need a nonzero degree".into()));
                }
                if tau.dim() != 1 {
                    return Err(Error::Unsupported("theta families are implemented on curves only".into()));
                }
            }
            (FamilyKind::Theta { .. }, Backend::Fourier { .. }) => {
                return Err(Error::Unsupported("degree-d bundles need the grid backend".into()));
            }
            (FamilyKind::ComplexStructure { tau }, Backend::Grid { .. }) if tau.dim() != 1 => {
                return Err(Error::Unsupported("grid backend is implemented on curves only".into()));
            }
            (FamilyKind::CharacterPath { tau, characters, .. }, backend) => {
                if !matches!(backend, Backend::Fourier { .. }) {
                    return Err(Error::Unsupported("character families use the Fourier backend".into()));
                }
                if characters.is_empty() {
                    return Err(Error::Precondition("character family needs at least one summand".into()));
                }
                let n = tau.nrows();
                if characters.iter().any(|l| l.offset.len() != n || l.slope.len() != n) {
                    return Err(Error::ShapeMismatch(format!("character parameters must have {n} entries")));
                }
                TauPath::constant(tau.clone())?;
            }
            _ => {}
        }
        if !kaehler_shift.is_finite() {
            return Err(Error::Precondition("Kähler shift must be finite".into()));
        }
        Ok(Self { kind, backend, kaehler_shift, base_point })
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn kaehler_shift(&self) -> f64 {
        self.kaehler_shift
    }

    pub fn base_point(&self) -> C64 {
        self.base_point
    }

    /// Same family with another Kähler shift β.
    pub fn with_kaehler_shift(&self, beta: f64) -> Result<Self> {
        Self::new(self.kind.clone(), self.backend, beta, self.base_point)
    }

    pub fn with_backend(&self, backend: Backend) -> Result<Self> {
        Self::new(self.kind.clone(), backend, self.kaehler_shift, self.base_point)
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            FamilyKind::ComplexStructure { tau } | FamilyKind::Theta { tau, .. } => tau.dim(),
            FamilyKind::CharacterPath { tau, .. } => tau.nrows(),
        }
    }

    /// Only character families have a holomorphically trivial total space.
    pub fn is_product(&self) -> bool {
        matches!(self.kind, FamilyKind::CharacterPath { .. })
    }

    pub fn is_untwisted(&self) -> bool {
        matches!(self.kind, FamilyKind::ComplexStructure { .. })
    }

    pub fn degree(&self) -> Option<i32> {
        match self.kind {
            FamilyKind::Theta { degree, .. } => Some(degree),
            _ => None,
        }
    }

    pub fn period(&self, s: C64) -> CMat {
        match &self.kind {
            FamilyKind::ComplexStructure { tau } | FamilyKind::Theta { tau, .. } => tau.value(s),
            FamilyKind::CharacterPath { tau, .. } => tau.clone(),
        }
    }

    pub fn period_derivative(&self, s: C64) -> CMat {
        match &self.kind {
            FamilyKind::ComplexStructure { tau } | FamilyKind::Theta { tau, .. } => tau.derivative(s),
            FamilyKind::CharacterPath { tau, .. } => CMat::zeros(tau.nrows(), tau.nrows()),
        }
    }

    /// λ in Φ = λ·(Im z)ᵀ(Im τ)^{-1}(Im z).
    pub fn potential_scale(&self) -> f64 {
        match self.kind {
            FamilyKind::Theta { degree, .. } => 2.0 * PI * degree.unsigned_abs() as f64,
            _ => 1.0,
        }
    }

    /// Character parameters u_i(s) of the base summands (empty unless a character family).
    pub fn character_parameters(&self, s: C64) -> Vec<Vec<C64>> {
        match &self.kind {
            FamilyKind::CharacterPath { characters, .. } => characters.iter().map(|l| l.at(s)).collect(),
            _ => Vec::new(),
        }
    }

    /// u_i'(s) of the base summands.
    pub fn character_slopes(&self) -> Vec<Vec<C64>> {
        match &self.kind {
            FamilyKind::CharacterPath { characters, .. } => characters.iter().map(|l| l.slope.clone()).collect(),
            _ => Vec::new(),
        }
    }

    /// Whether forms take values in End(E).
    pub fn end_valued(&self) -> bool {
        matches!(self.kind, FamilyKind::CharacterPath { end_bundle: true, .. })
    }

    pub fn base_bundle(&self, s: C64) -> Result<BundleData> {
        match &self.kind {
            FamilyKind::ComplexStructure { .. } => Ok(BundleData::trivial()),
            FamilyKind::Theta { degree, .. } => Ok(BundleData::automorphy(*degree)),
            FamilyKind::CharacterPath { tau, .. } => {
                let chis = self.character_parameters(s).iter().map(|u| character_of(tau, u)).collect::<Result<Vec<_>>>()?;
                if chis.len() == 1 {
                    Ok(BundleData::character(chis.into_iter().next().expect("one summand")))
                } else {
                    BundleData::character_sum(chis)
                }
            }
        }
    }

    /// Hessian of Φ in the total coordinates (z_1..z_n, s): entry (i, j) is ∂_i ∂_j̄ Φ.
    pub fn potential_hessian(&self, z: &[C64], s: C64) -> Result<CMat> {
        let n = self.dim();
        let lambda = self.potential_scale();
        let imag = linalg::imag_part(&self.period(s));
        let k = linalg::inverse(&imag).ok_or_else(|| Error::DegenerateFiber(format!("{s}")))?;
        let p = self.period_derivative(s) / c(0.0, 2.0);
        let pbar = conj_mat(&p);
        let dk = -(&k * &p * &k);
        let dkbar = -(&k * &pbar * &k);
        let ddk = &k * &p * &k * &pbar * &k + &k * &pbar * &k * &p * &k;
        let w = CMat::from_fn(n, 1, |i, _| c(z[i].im, 0.0));
        let mut h = CMat::zeros(n + 1, n + 1);
        let dkw = &dk * &w;
        let dkbarw = &dkbar * &w;
        for a in 0..n {
            for b in 0..n {
                h[(a, b)] = k[(a, b)] * (lambda / 2.0);
            }
            h[(n, a)] = I * lambda * dkw[(a, 0)];
            h[(a, n)] = -I * lambda * dkbarw[(a, 0)];
        }
        h[(n, n)] = (w.transpose() * ddk * &w)[(0, 0)] * lambda;
        Ok(h)
    }

    /// Hessian of the total-space Kähler potential including the β·|s|² term.
    pub fn kaehler_hessian(&self, z: &[C64], s: C64) -> Result<CMat> {
        let mut h = self.potential_hessian(z, s)?;
        let n = self.dim();
        h[(n, n)] += self.kaehler_shift;
        Ok(h)
    }

    /// Curvature Θ_{ij̄} of each base summand in the total coordinates.
    pub fn curvature_hessians(&self, z: &[C64], s: C64) -> Result<Vec<CMat>> {
        let n = self.dim();
        match &self.kind {
            FamilyKind::ComplexStructure { .. } => Ok(vec![CMat::zeros(n + 1, n + 1)]),
            FamilyKind::Theta { degree, .. } => Ok(vec![self.potential_hessian(z, s)? * c(degree.signum() as f64, 0.0)]),
            FamilyKind::CharacterPath { tau, .. } => {
                let diff = tau - conj_mat(tau);
                let dinv_t = linalg::inverse(&diff).ok_or_else(|| Error::DegenerateFiber(format!("{s}")))?.transpose();
                Ok(self
                    .character_slopes()
                    .iter()
                    .map(|slope| {
                        let du = CMat::from_fn(n, 1, |i, _| slope[i]);
                        let mixed = &dinv_t * du * c(0.0, -2.0 * PI);
                        let mut m = CMat::zeros(n + 1, n + 1);
                        for b in 0..n {
                            m[(n, b)] = mixed[(b, 0)];
                            m[(b, n)] = mixed[(b, 0)].conj();
                        }
                        m
                    })
                    .collect())
            }
        }
    }

    pub fn at(&self, s: C64) -> Result<FamilyPoint> {
        FamilyPoint::new(self.clone(), s)
    }
}

/// Horizontal lift coefficients a^α solving ω(v, ∂_β̄) = 0 for v = ∂_s + a^α∂_α.
pub fn horizontal_lift(hessian: &CMat) -> Result<Vec<C64>> {
    let n = hessian.nrows() - 1;
    let g = hessian.view((0, 0), (n, n)).into_owned();
    let ginv = linalg::inverse(&g).ok_or_else(|| Error::NonPositiveMetric("fiber block of the Kähler form".into()))?;
    Ok((0..n).map(|a| -(0..n).map(|b| hessian[(n, b)] * ginv[(b, a)]).sum::<C64>()).collect())
}

/// ω(v, v̄) = Σ v^i H_{ij̄} conj(v^j) with v = (a, 1).
pub fn geodesic_curvature_at(hessian: &CMat) -> Result<f64> {
    let a = horizontal_lift(hessian)?;
    Ok(pair_lift(hessian, &a).re)
}

fn pair_lift(m: &CMat, a: &[C64]) -> C64 {
    let n = a.len();
    let v: Vec<C64> = a.iter().copied().chain(std::iter::once(c(1.0, 0.0))).collect();
    let mut acc = c(0.0, 0.0);
    for i in 0..=n {
        for j in 0..=n {
            acc += v[i] * m[(i, j)] * v[j].conj();
        }
    }
    acc
}

/// Real sample points used to check that pointwise horizontal quantities are constant.
pub fn sample_points(dim: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    const VALUES: [f64; 3] = [0.13, 0.47, 0.81];
    let total = 3usize.pow(2 * dim as u32);
    (0..total)
        .map(|mut index| {
            let mut coords = Vec::with_capacity(2 * dim);
            for _ in 0..2 * dim {
                coords.push(VALUES[index % 3]);
                index /= 3;
            }
            (coords[..dim].to_vec(), coords[dim..].to_vec())
        })
        .collect()
}

/// Fiber of a family at one parameter value with its form spaces.
#[derive(Clone, Debug)]
pub struct FamilyPoint {
    descriptor: FamilyDescriptor,
    s: C64,
    fiber: FiberChart,
    base: BundleData,
    end: Option<EndBundle>,
    space: Arc<FormSpace>,
    scalar: Arc<FormSpace>,
}

impl FamilyPoint {
    pub fn new(descriptor: FamilyDescriptor, s: C64) -> Result<Self> {
        let n = descriptor.dim();
        let tau = descriptor.period(s);
        let lattice = Lattice::new(tau.clone()).map_err(|_| Error::DegenerateFiber(format!("{s}")))?;
        let k = linalg::inverse(&linalg::imag_part(&tau)).ok_or_else(|| Error::DegenerateFiber(format!("{s}")))?;
        let metric = k * c(descriptor.potential_scale() / 2.0, 0.0);
        let fiber = build_fiber(lattice, metric)?;
        let base = descriptor.base_bundle(s)?;
        let end = if descriptor.end_valued() { Some(end_bundle(&base)?) } else { None };
        let target = end.as_ref().map_or_else(|| base.clone(), |e| e.bundle().clone());
        let (space, scalar) = match descriptor.backend {
            Backend::Fourier { cutoff } => (
                FormSpace::fourier(fiber.clone(), target, cutoff)?,
                FormSpace::fourier(fiber.clone(), BundleData::trivial(), cutoff)?,
            ),
            Backend::Grid { resolution } => (
                FormSpace::grid(fiber.clone(), target, resolution)?,
                FormSpace::grid(fiber.clone(), BundleData::trivial(), resolution)?,
            ),
        };
        debug_assert_eq!(space.dim(), n);
        Ok(Self { descriptor, s, fiber, base, end, space, scalar })
    }

    pub fn descriptor(&self) -> &FamilyDescriptor {
        &self.descriptor
    }

    pub fn parameter(&self) -> C64 {
        self.s
    }

    pub fn fiber(&self) -> &FiberChart {
        &self.fiber
    }

    pub fn dim(&self) -> usize {
        self.fiber.dim()
    }

    /// E itself (the forms may instead take values in End(E)).
    pub fn base_bundle(&self) -> &BundleData {
        &self.base
    }

    pub fn end(&self) -> Option<&EndBundle> {
        self.end.as_ref()
    }

    /// Space of forms the evaluators act on.
    pub fn space(&self) -> &Arc<FormSpace> {
        &self.space
    }

    /// Scalar forms on the same fiber and backend (for c(ω) and ω itself).
    pub fn scalar_space(&self) -> &Arc<FormSpace> {
        &self.scalar
    }

    /// Holomorphic character parameter of each summand of the target bundle.
    pub fn target_character_parameters(&self) -> Vec<Vec<C64>> {
        let base = self.descriptor.character_parameters(self.s);
        if base.is_empty() {
            return vec![vec![c(0.0, 0.0); self.dim()]; self.space.rank()];
        }
        match &self.end {
            Some(end) => end.pairs().iter().map(|&(i, j)| base[i].iter().zip(&base[j]).map(|(a, b)| a - b).collect()).collect(),
            None => base,
        }
    }

    /// u'(s) of each summand of the target bundle.
    pub fn target_character_slopes(&self) -> Vec<Vec<C64>> {
        let slopes = self.descriptor.character_slopes();
        if slopes.is_empty() {
            return vec![vec![c(0.0, 0.0); self.dim()]; self.space.rank()];
        }
        match &self.end {
            Some(end) => end.pairs().iter().map(|&(i, j)| slopes[i].iter().zip(&slopes[j]).map(|(a, b)| a - b).collect()).collect(),
            None => slopes,
        }
    }

    pub fn horizontal_data(&self) -> Result<HorizontalData> {
        HorizontalData::compute(self)
    }
}

/// Horizontal quantities of a family at one fiber. Everything is translation invariant on tori,
/// so pointwise values are sampled, averaged, and the spread is reported.
#[derive(Clone, Debug)]
pub struct HorizontalData {
    /// a = lift_matrix · y; the sampled lift deviates from it by `lift_residual`.
    pub lift_matrix: CMat,
    pub lift_residual: f64,
    /// ∂_α a^γ stored as `[(γ, α)]`; it preserves type and drives L'_v.
    pub lift_gradient: CMat,
    /// A = ∂̄(a^γ ∂_γ)|fiber, the Kodaira–Spencer form.
    pub kodaira_spencer: TangentValuedForm,
    /// c(ω) = ω(v, v̄), mean over samples.
    pub geodesic_curvature: f64,
    /// Largest deviation of the sampled c(ω) from its mean.
    pub geodesic_variation: f64,
    /// η_s (0,1) and η_s̄ (1,0) on the base bundle E.
    pub atiyah: EndForm,
    pub atiyah_conjugate: EndForm,
    /// Θ(v, v̄) on E.
    pub theta_vv: EndForm,
    /// Largest deviation of sampled Atiyah and Θ(v, v̄) entries from their means.
    pub atiyah_variation: f64,
    end_action: bool,
}

impl HorizontalData {
    fn compute(point: &FamilyPoint) -> Result<Self> {
        let family = &point.descriptor;
        let n = point.dim();
        let s = point.s;
        let tau = family.period(s);
        let tau_prime = family.period_derivative(s);
        let diff = &tau - conj_mat(&tau);
        let diff_inv = linalg::inverse(&diff).ok_or_else(|| Error::DegenerateFiber(format!("{s}")))?;
        // a = τ'·y with y = (τ−τ̄)^{-1}(z − z̄): ∂_α a = τ'(τ−τ̄)^{-1}, ∂_β̄ a = −τ'(τ−τ̄)^{-1}.
        let gradient = &tau_prime * &diff_inv;
        let kodaira_spencer = TangentValuedForm::new(-gradient.clone())?;

        let rank = point.base.rank();
        let samples = sample_points(n);
        let mut lift_residual = 0.0f64;
        let mut c_values = Vec::with_capacity(samples.len());
        // Per sample and summand: η_s, η_s̄, Θ(v,v̄).
        let mut eta = Vec::with_capacity(samples.len());
        for (x, y) in &samples {
            let z = point.fiber.complex_coordinate(x, y);
            let h = family.kaehler_hessian(&z, s)?;
            let a = horizontal_lift(&h)?;
            for g in 0..n {
                let predicted: C64 = (0..n).map(|b| tau_prime[(g, b)] * y[b]).sum();
                lift_residual = lift_residual.max((a[g] - predicted).norm());
            }
            c_values.push(pair_lift(&h, &a));
            let thetas = family.curvature_hessians(&z, s)?;
            let per_summand: Vec<Vec<C64>> = thetas
                .iter()
                .map(|th| {
                    let mut row = Vec::with_capacity(2 * n + 1);
                    for b in 0..n {
                        row.push(-(th[(n, b)] + (0..n).map(|al| a[al] * th[(al, b)]).sum::<C64>()));
                    }
                    for al in 0..n {
                        row.push(-(th[(al, n)] + (0..n).map(|b| a[b].conj() * th[(al, b)]).sum::<C64>()));
                    }
                    row.push(pair_lift(th, &a));
                    row
                })
                .collect();
            eta.push(per_summand);
        }
        let count = samples.len() as f64;
        let c_mean = c_values.iter().sum::<C64>() / count;
        let geodesic_variation = c_values.iter().map(|v| (v - c_mean).norm()).fold(c_mean.im.abs(), f64::max);

        let width = 2 * n + 1;
        let mut mean = vec![vec![c(0.0, 0.0); width]; rank];
        for per_summand in &eta {
            for (r, row) in per_summand.iter().enumerate() {
                for (m, v) in mean[r].iter_mut().zip(row) {
                    *m += v / count;
                }
            }
        }
        let mut atiyah_variation = 0.0f64;
        for per_summand in &eta {
            for (r, row) in per_summand.iter().enumerate() {
                for (m, v) in mean[r].iter().zip(row) {
                    atiyah_variation = atiyah_variation.max((m - v).norm());
                }
            }
        }
        let pick = |range: std::ops::Range<usize>| -> Vec<Vec<C64>> { mean.iter().map(|row| row[range.clone()].to_vec()).collect() };
        let atiyah = EndForm::diagonal(n, 0, 1, &pick(0..n))?;
        let atiyah_conjugate = EndForm::diagonal(n, 1, 0, &pick(n..2 * n))?;
        let theta_vv = EndForm::diagonal(n, 0, 0, &pick(2 * n..2 * n + 1))?;

        Ok(Self {
            lift_matrix: tau_prime,
            lift_residual,
            lift_gradient: gradient,
            kodaira_spencer,
            geodesic_curvature: c_mean.re,
            geodesic_variation,
            atiyah,
            atiyah_conjugate,
            theta_vv,
            atiyah_variation,
            end_action: point.end.is_some(),
        })
    }

    fn acting(&self, form: &EndForm) -> EndForm {
        if self.end_action {
            form.adjoint_lift()
        } else {
            form.clone()
        }
    }

    /// η_s acting on the form bundle (by commutator when forms are End-valued).
    pub fn atiyah_action(&self) -> EndForm {
        self.acting(&self.atiyah)
    }

    pub fn atiyah_conjugate_action(&self) -> EndForm {
        self.acting(&self.atiyah_conjugate)
    }

    pub fn theta_vv_action(&self) -> EndForm {
        self.acting(&self.theta_vv)
    }

    /// Whether the bundle forms act on End(E) by commutator.
    pub fn is_end_valued(&self) -> bool {
        self.end_action
    }
}
