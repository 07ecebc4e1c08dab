//! Chern curvature of the L² metric by finite differences of Gram matrices over the parameter.
//!
//! Frames are the closed-form analytic frames, re-evaluated at every stencil node and never
//! orthonormalized or projected, so the result depends only on the metric H(s) and the frame's
//! holomorphic s-dependence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::frames::analytic_frame;
use crate::family::FamilyDescriptor;
use crate::forms::l2_inner;
use crate::linalg::{self, c, CMat, C64, I};

/// Largest Gram condition number accepted at a stencil node.
pub const MAX_CONDITION: f64 = 1e8;

/// Default step, halved once for Richardson extrapolation.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Gram matrices H(s₀ + a·h + b·i·h) for a, b ∈ {−1, 0, 1}; `grams[a + 1][b + 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramStencil {
    center: C64,
    step: f64,
    grams: [[CMat; 3]; 3],
}

impl GramStencil {
    /// Evaluates `gram` at the nine nodes in parallel and validates them.
    pub fn from_fn(center: C64, step: f64, gram: impl Fn(C64) -> Result<CMat> + Sync) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::Precondition(format!("stencil step must be positive, got {step}")));
        }
        let nodes: Vec<(usize, usize)> = (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).collect();
        let values = nodes
            .par_iter()
            .map(|&(a, b)| gram(center + c((a as f64 - 1.0) * step, (b as f64 - 1.0) * step)))
            .collect::<Result<Vec<CMat>>>()?;
        let mut it = values.into_iter();
        let mut next = || it.next().expect("nine stencil nodes");
        let grams = [[next(), next(), next()], [next(), next(), next()], [next(), next(), next()]];
        let rank = grams[1][1].nrows();
        for row in &grams {
            for h in row {
                if h.nrows() != rank || h.ncols() != rank {
                    return Err(Error::RankMismatch(format!("frame rank changes across the stencil ({} vs {rank})", h.nrows())));
                }
                let condition = linalg::condition_number(h);
                if !linalg::is_hermitian_positive(h, 1e-10) || condition > MAX_CONDITION {
                    return Err(Error::IllConditionedGram { condition });
                }
            }
        }
        Ok(Self { center, step, grams })
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn rank(&self) -> usize {
        self.grams[1][1].nrows()
    }

    /// H at offset (a, b) ∈ {−1, 0, 1}².
    pub fn node(&self, a: i32, b: i32) -> &CMat {
        &self.grams[(a + 1) as usize][(b + 1) as usize]
    }

    pub fn gram(&self) -> &CMat {
        self.node(0, 0)
    }
}

/// Stencil of Gram matrices of the analytic (p,q) frame of `family` around `center`.
pub fn gram_stencil(family: &FamilyDescriptor, center: C64, step: f64, p: usize, q: usize) -> Result<GramStencil> {
    GramStencil::from_fn(center, step, |s| {
        let point = family.at(s)?;
        let frame = analytic_frame(&point, p, q)?;
        let mut gram = CMat::zeros(frame.len(), frame.len());
        for (k, a) in frame.iter().enumerate() {
            for (l, b) in frame.iter().enumerate() {
                gram[(k, l)] = l2_inner(&a.value, &b.value)?;
            }
        }
        Ok(gram)
    })
}

/// R = −∂_s∂_s̄H + ∂_sH·H⁻¹·∂_s̄H at the stencil center, with ∂_s = ½(∂_x − i∂_y),
/// ∂_s∂_s̄ = ¼Δ and the nine-point Laplacian.
pub fn chern_curvature_fd(stencil: &GramStencil) -> Result<CMat> {
    let h = stencil.step;
    let center = stencil.gram();
    let inverse = linalg::inverse(center).ok_or(Error::IllConditionedGram { condition: f64::INFINITY })?;
    let dx = (stencil.node(1, 0) - stencil.node(-1, 0)) / c(2.0 * h, 0.0);
    let dy = (stencil.node(0, 1) - stencil.node(0, -1)) / c(2.0 * h, 0.0);
    let ds = (&dx - &dy * I) * c(0.5, 0.0);
    let dsbar = (&dx + &dy * I) * c(0.5, 0.0);
    let edges = stencil.node(1, 0) + stencil.node(-1, 0) + stencil.node(0, 1) + stencil.node(0, -1);
    let corners = stencil.node(1, 1) + stencil.node(1, -1) + stencil.node(-1, 1) + stencil.node(-1, -1);
    let laplacian = (edges * c(4.0, 0.0) + corners - center * c(20.0, 0.0)) / c(6.0 * h * h, 0.0);
    Ok(-laplacian * c(0.25, 0.0) + &ds * inverse * &dsbar)
}

/// Extrapolated tensor (4·R_{h/2} − R_h)/3 with error estimate max|R_{h/2} − R_h|/3.
#[derive(Clone, Debug, PartialEq)]
pub struct Extrapolation {
    pub value: CMat,
    pub error: f64,
}

pub fn richardson(coarse: (&GramStencil, &CMat), fine: (&GramStencil, &CMat)) -> Result<Extrapolation> {
    let (coarse_stencil, coarse_value) = coarse;
    let (fine_stencil, fine_value) = fine;
    if coarse_stencil.center != fine_stencil.center {
        return Err(Error::Precondition(format!("stencils centered at {} and {}", coarse_stencil.center, fine_stencil.center)));
    }
    if coarse_value.shape() != fine_value.shape() {
        return Err(Error::RankMismatch("extrapolating tensors of different shapes".into()));
    }
    let value = (fine_value * c(4.0, 0.0) - coarse_value) / c(3.0, 0.0);
    let error = linalg::max_abs(&(fine_value - coarse_value)) / 3.0;
    Ok(Extrapolation { value, error })
}

/// Curvature of the direct image by differences, after one Richardson halving.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub parameter: [f64; 2],
    pub bidegree: [usize; 2],
    pub step: f64,
    pub gram: crate::curvature::PairValues,
    pub values: crate::curvature::PairValues,
    pub error: f64,
    /// R/H for rank-one frames.
    pub normalized: Option<f64>,
}

impl OracleEstimate {
    pub fn value_matrix(&self) -> CMat {
        self.values.to_matrix()
    }
}

pub fn curvature_by_differences(family: &FamilyDescriptor, center: C64, step: f64, p: usize, q: usize) -> Result<OracleEstimate> {
    let coarse = gram_stencil(family, center, step, p, q)?;
    let fine = gram_stencil(family, center, step / 2.0, p, q)?;
    let (r_coarse, r_fine) = (chern_curvature_fd(&coarse)?, chern_curvature_fd(&fine)?);
    let extrapolated = richardson((&coarse, &r_coarse), (&fine, &r_fine))?;
    let gram = fine.gram().clone();
    let normalized = (gram.nrows() == 1).then(|| extrapolated.value[(0, 0)].re / gram[(0, 0)].re);
    Ok(OracleEstimate {
        parameter: [center.re, center.im],
        bidegree: [p, q],
        step,
        gram: crate::curvature::PairValues::from_matrix(&gram),
        values: crate::curvature::PairValues::from_matrix(&extrapolated.value),
        error: extrapolated.error,
        normalized,
    })
}
