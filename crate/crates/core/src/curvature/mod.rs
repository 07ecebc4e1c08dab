//! Curvature of the L² metric on direct images, evaluated from fiberwise operators.
//!
//! Every evaluator returns the frame-pair tensor R(∂_s, ∂_s̄, ψ^(k), ψ̄^(l)) as a sum of named
//! terms, each a sesquilinear pairing of images of the frame members.

mod general;
mod special;
mod vector;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dolbeault::{harmonic_projection, laplacian, Which};
use crate::error::{Error, Result};
use crate::family::frames::{analytic_frame, FrameJet};
use crate::family::{Backend, FamilyPoint, HorizontalData};
use crate::forms::{l2_inner, PQForm};
use crate::linalg::{self, c, CMat, C64};

pub use general::{curvature_griffiths, curvature_main, w_vectors};
pub use special::{curvature_line_nq, curvature_line_p0, curvature_line_p0_with_shift};
pub use vector::{curvature_flat, curvature_he, wp_suite, WpReport};

/// Largest accepted Gram condition number.
pub const MAX_CONDITION: f64 = 1e8;

/// Relative leak tolerated before □⁻¹ refuses its argument.
pub const LEAK_TOLERANCE: f64 = 1e-6;

/// Relative ‖□ψ‖/‖ψ‖ accepted for frame members.
pub fn harmonic_tolerance(backend: Backend) -> f64 {
    match backend {
        Backend::Fourier { .. } => 1e-10,
        Backend::Grid { .. } => 1e-6,
    }
}

/// Fiberwise harmonic representatives of a frame of H^{p,q} with their Gram matrix
/// H_{kl̄} = ⟨ψ^(k), ψ^(l)⟩.
#[derive(Clone, Debug)]
pub struct HarmonicFrame {
    pub p: usize,
    pub q: usize,
    pub members: Vec<FrameJet>,
    pub gram: CMat,
    /// Largest relative ‖□ψ‖/‖ψ‖ over members.
    pub residual: f64,
}

impl HarmonicFrame {
    pub fn rank(&self) -> usize {
        self.members.len()
    }

    pub fn values(&self) -> impl Iterator<Item = &PQForm> {
        self.members.iter().map(|m| &m.value)
    }
}

/// Closed-form frame at the fiber of `point`, projected onto the discrete harmonic space on the
/// grid backend.
pub fn harmonic_frame(point: &FamilyPoint, p: usize, q: usize) -> Result<HarmonicFrame> {
    let mut members = analytic_frame(point, p, q)?;
    if point.space().is_grid() {
        for m in members.iter_mut() {
            m.value = harmonic_projection(&m.value)?;
        }
    }
    let residual = members
        .par_iter()
        .map(|m| Ok(laplacian(&m.value, Which::Dbar)?.norm() / m.value.norm()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if residual > harmonic_tolerance(point.descriptor().backend()) {
        return Err(Error::ProjectionResidual { residual });
    }
    let values: Vec<&PQForm> = members.iter().map(|m| &m.value).collect();
    let gram = pair_matrix(&values, &values)?;
    let condition = linalg::condition_number(&gram);
    if condition > MAX_CONDITION {
        return Err(Error::IllConditionedGram { condition });
    }
    Ok(HarmonicFrame { p, q, members, gram, residual })
}

/// Entry (k, l) is ⟨xs[k], ys[l]⟩.
fn pair_matrix(xs: &[&PQForm], ys: &[&PQForm]) -> Result<CMat> {
    let mut m = CMat::zeros(xs.len(), ys.len());
    for (k, x) in xs.iter().enumerate() {
        for (l, y) in ys.iter().enumerate() {
            m[(k, l)] = l2_inner(x, y)?;
        }
    }
    Ok(m)
}

/// Pairing matrix of optional images; missing images (bidegree out of range) pair to zero.
fn pair_optional(xs: &[Option<PQForm>], ys: &[Option<PQForm>]) -> Result<CMat> {
    let mut m = CMat::zeros(xs.len(), ys.len());
    for (k, x) in xs.iter().enumerate() {
        for (l, y) in ys.iter().enumerate() {
            if let (Some(x), Some(y)) = (x, y) {
                m[(k, l)] = l2_inner(x, y)?;
            }
        }
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluator {
    Main,
    Griffiths,
    LineP0,
    LineNq,
    Flat,
    HermiteEinstein,
}

impl Evaluator {
    pub const ALL: [Evaluator; 6] =
        [Evaluator::Main, Evaluator::Griffiths, Evaluator::LineP0, Evaluator::LineNq, Evaluator::Flat, Evaluator::HermiteEinstein];

    pub fn name(self) -> &'static str {
        match self {
            Evaluator::Main => "main",
            Evaluator::Griffiths => "griffiths",
            Evaluator::LineP0 => "line_p0",
            Evaluator::LineNq => "line_nq",
            Evaluator::Flat => "flat",
            Evaluator::HermiteEinstein => "hermite_einstein",
        }
    }

    /// Whether the evaluator's hypotheses hold for this family and bidegree; `Err` carries the
    /// reason it does not apply.
    pub fn applicability(self, point: &FamilyPoint, p: usize, q: usize) -> std::result::Result<(), String> {
        let family = point.descriptor();
        let n = point.dim();
        let shifted = family.kaehler_shift() != 0.0;
        match self {
            Evaluator::Main => Ok(()),
            Evaluator::Griffiths if !family.is_untwisted() => Err("bundle is not trivial".into()),
            Evaluator::Griffiths => Ok(()),
            Evaluator::LineP0 => match family.degree() {
                Some(d) if d > 0 && q == 0 && !shifted => Ok(()),
                Some(d) if d > 0 && q == 0 => Err("ω differs from iΘ by a Kähler shift".into()),
                Some(d) if d > 0 => Err("needs q = 0".into()),
                _ => Err("needs a fiberwise positive line bundle".into()),
            },
            Evaluator::LineNq => match family.degree() {
                Some(d) if d < 0 && p == n && !shifted => Ok(()),
                Some(d) if d < 0 && p == n => Err("ω differs from −iΘ by a Kähler shift".into()),
                Some(d) if d < 0 => Err("needs p = n".into()),
                _ => Err("needs a fiberwise negative line bundle".into()),
            },
            Evaluator::Flat if !point.base_bundle().is_flat() => Err("bundle curvature does not vanish on fibers".into()),
            Evaluator::Flat => Ok(()),
            Evaluator::HermiteEinstein if !family.is_product() => Err("family is not a product".into()),
            Evaluator::HermiteEinstein => Ok(()),
        }
    }
}

impl fmt::Display for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Frame-pair values stored as rows of complex numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairValues(pub Vec<Vec<C64>>);

impl PairValues {
    pub fn from_matrix(m: &CMat) -> Self {
        Self((0..m.nrows()).map(|k| (0..m.ncols()).map(|l| m[(k, l)]).collect()).collect())
    }

    pub fn to_matrix(&self) -> CMat {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, Vec::len);
        CMat::from_fn(rows, cols, |k, l| self.0[k][l])
    }

    pub fn get(&self, k: usize, l: usize) -> C64 {
        self.0[k][l]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTerm {
    pub name: String,
    pub values: PairValues,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub evaluator: Evaluator,
    pub parameter: [f64; 2],
    pub bidegree: [usize; 2],
    pub backend: Backend,
    pub gram: PairValues,
    pub values: PairValues,
    /// R/‖ψ‖² for rank-one frames.
    pub normalized: Option<f64>,
    pub terms: Vec<CurvatureTerm>,
}

impl CurvatureReport {
    pub fn value_matrix(&self) -> CMat {
        self.values.to_matrix()
    }

    pub fn term(&self, name: &str) -> Option<&CurvatureTerm> {
        self.terms.iter().find(|t| t.name == name)
    }

    /// |values − Σ terms|, entrywise maximum.
    pub fn bookkeeping_defect(&self) -> f64 {
        let mut sum = CMat::zeros(self.gram.0.len(), self.gram.0.len());
        for t in &self.terms {
            sum += t.values.to_matrix();
        }
        linalg::max_abs(&(sum - self.value_matrix()))
    }

    /// max |R_{kl̄} − conj R_{lk̄}|.
    pub fn hermitian_defect(&self) -> f64 {
        linalg::hermitian_defect(&self.value_matrix())
    }
}

/// Collects signed terms and finishes a report.
struct Assembly {
    rank: usize,
    terms: Vec<CurvatureTerm>,
}

impl Assembly {
    fn new(rank: usize) -> Self {
        Self { rank, terms: Vec::new() }
    }

    fn add(&mut self, name: &str, weight: f64, values: CMat) {
        debug_assert_eq!(values.nrows(), self.rank);
        self.terms.push(CurvatureTerm { name: name.into(), values: PairValues::from_matrix(&(values * c(weight, 0.0))) });
    }

    fn finish(self, evaluator: Evaluator, point: &FamilyPoint, frame: &HarmonicFrame) -> CurvatureReport {
        let mut total = CMat::zeros(self.rank, self.rank);
        for t in &self.terms {
            total += t.values.to_matrix();
        }
        let normalized = (self.rank == 1).then(|| total[(0, 0)].re / frame.gram[(0, 0)].re);
        let s = point.parameter();
        CurvatureReport {
            evaluator,
            parameter: [s.re, s.im],
            bidegree: [frame.p, frame.q],
            backend: point.descriptor().backend(),
            gram: PairValues::from_matrix(&frame.gram),
            values: PairValues::from_matrix(&total),
            normalized,
            terms: self.terms,
        }
    }
}

/// Applies `f` to every frame member in parallel.
fn images(frame: &HarmonicFrame, f: impl Fn(&PQForm) -> Result<Option<PQForm>> + Sync) -> Result<Vec<Option<PQForm>>> {
    frame.members.par_iter().map(|m| f(&m.value)).collect()
}

/// Runs an evaluator on a fresh frame at the fiber of `point`.
pub fn evaluate(evaluator: Evaluator, point: &FamilyPoint, p: usize, q: usize) -> Result<CurvatureReport> {
    if let Err(reason) = evaluator.applicability(point, p, q) {
        return Err(match evaluator {
            Evaluator::Griffiths => Error::NotUntwisted,
            Evaluator::Flat => Error::NotFiberwiseFlat,
            Evaluator::HermiteEinstein => Error::NotProductFamily,
            _ => Error::Precondition(reason),
        });
    }
    let frame = harmonic_frame(point, p, q)?;
    let data = point.horizontal_data()?;
    evaluate_with(evaluator, point, &data, &frame)
}

/// Runs an evaluator on given horizontal data and frame.
pub fn evaluate_with(evaluator: Evaluator, point: &FamilyPoint, data: &HorizontalData, frame: &HarmonicFrame) -> Result<CurvatureReport> {
    match evaluator {
        Evaluator::Main => curvature_main(point, data, frame),
        Evaluator::Griffiths => curvature_griffiths(point, data, frame),
        Evaluator::LineP0 => curvature_line_p0(point, data, frame),
        Evaluator::LineNq => curvature_line_nq(point, data, frame),
        Evaluator::Flat => curvature_flat(point, data, frame),
        Evaluator::HermiteEinstein => curvature_he(point, data, frame),
    }
}
