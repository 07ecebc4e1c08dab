//! Hermitian holomorphic bundles on a fiber: trivial, flat unitary characters, sums of
//! characters, and degree-d line bundles with translation-invariant curvature.
//!
//! Every bundle here is a direct sum of line bundles, so connection and curvature are
//! diagonal and stored per summand. Characters χ ∈ R^{2n} are realized in the periodic
//! gauge (sections are periodic functions times exp(2πi χ·(x,y))), which makes the
//! connection the constant form 2πi(ξ(χ)_α dz^α + conj ξ(χ)_β dz̄^β).
//! Degree-d bundles (n = 1) use the unitary gauge of [`crate::geometry::QuasiGrid`] with
//! θ^{1,0} = −2πi d τ̄ y/(τ−τ̄) dz, θ^{0,1} = 2πi d τ y/(τ−τ̄) dz̄ and Θ_{zz̄} = π d / Im τ,
//! so that (i/2π)∫Θ = d.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FiberChart;
use crate::linalg::{c, CMat, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleKind {
    Trivial,
    Character(Vec<f64>),
    CharacterSum(Vec<Vec<f64>>),
    Automorphy { degree: i32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleData {
    kind: BundleKind,
}

impl BundleData {
    pub fn trivial() -> Self {
        Self { kind: BundleKind::Trivial }
    }

    pub fn character(chi: Vec<f64>) -> Self {
        Self { kind: BundleKind::Character(chi) }
    }

    pub fn character_sum(chis: Vec<Vec<f64>>) -> Result<Self> {
        if chis.is_empty() {
            return Err(Error::Precondition("character sum needs at least one summand".into()));
        }
        Ok(Self { kind: BundleKind::CharacterSum(chis) })
    }

    pub fn automorphy(degree: i32) -> Self {
        Self { kind: BundleKind::Automorphy { degree } }
    }

    pub fn kind(&self) -> &BundleKind {
        &self.kind
    }

    pub fn rank(&self) -> usize {
        match &self.kind {
            BundleKind::CharacterSum(chis) => chis.len(),
            _ => 1,
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.kind, BundleKind::Trivial)
    }

    pub fn is_flat(&self) -> bool {
        !matches!(self.kind, BundleKind::Automorphy { .. })
    }

    pub fn degree(&self) -> Option<i32> {
        match self.kind {
            BundleKind::Automorphy { degree } => Some(degree),
            _ => None,
        }
    }

    /// Character shift of each summand (zeros for the trivial bundle). Errors for degree-d bundles.
    pub fn shifts(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        let check = |chi: &Vec<f64>| {
            if chi.len() == 2 * dim {
                Ok(chi.clone())
            } else {
                Err(Error::ShapeMismatch(format!("character needs {} real entries", 2 * dim)))
            }
        };
        match &self.kind {
            BundleKind::Trivial => Ok(vec![vec![0.0; 2 * dim]]),
            BundleKind::Character(chi) => Ok(vec![check(chi)?]),
            BundleKind::CharacterSum(chis) => chis.iter().map(check).collect(),
            BundleKind::Automorphy { .. } => Err(Error::Unsupported("degree-d bundles have no character shift".into())),
        }
    }
}

/// Connection and curvature of a split bundle, one entry per summand.
#[derive(Clone, Debug)]
pub struct ChernData {
    /// Constant parts of θ^{1,0}_α and θ^{0,1}_β per summand.
    pub connection_holo: Vec<Vec<C64>>,
    pub connection_anti: Vec<Vec<C64>>,
    /// Coefficients multiplying y in θ^{1,0} and θ^{0,1} (degree-d bundles on curves only).
    pub connection_holo_slope: Vec<C64>,
    pub connection_anti_slope: Vec<C64>,
    /// Θ_{αβ̄} per summand as `curvature[i][(α, β)]`.
    pub curvature: Vec<CMat>,
}

impl ChernData {
    /// (θ^{1,0}, θ^{0,1}) of `summand` at height y.
    pub fn connection_at(&self, summand: usize, y: f64) -> (Vec<C64>, Vec<C64>) {
        let mut holo = self.connection_holo[summand].clone();
        let mut anti = self.connection_anti[summand].clone();
        if !self.connection_holo_slope.is_empty() {
            holo[0] += self.connection_holo_slope[0] * y;
            anti[0] += self.connection_anti_slope[0] * y;
        }
        (holo, anti)
    }

    /// (i/2π)∫Θ for a line bundle on a curve, by midpoint quadrature of Θ_{zz̄} dz∧dz̄ = Θ_{zz̄}(τ̄−τ) dx∧dy.
    pub fn degree(&self, fiber: &FiberChart, samples: usize) -> Result<f64> {
        if fiber.dim() != 1 || self.curvature.len() != 1 {
            return Err(Error::Unsupported("degree is computed for line bundles on curves".into()));
        }
        let tau = fiber.period()[(0, 0)];
        let density = self.curvature[0][(0, 0)] * (tau.conj() - tau);
        let cell = 1.0 / (samples * samples) as f64;
        let mut total = C64::new(0.0, 0.0);
        for _ in 0..samples * samples {
            total += density * cell;
        }
        Ok((c(0.0, 1.0) / (2.0 * PI) * total).re)
    }
}

/// Connection and curvature of `bundle` on `fiber`.
pub fn chern_data(bundle: &BundleData, fiber: &FiberChart) -> Result<ChernData> {
    let n = fiber.dim();
    let two_pi_i = c(0.0, 2.0 * PI);
    match bundle.kind() {
        BundleKind::Automorphy { degree } => {
            if n != 1 {
                return Err(Error::Unsupported("degree-d bundles are implemented on curves only".into()));
            }
            let tau = fiber.period()[(0, 0)];
            let d = *degree as f64;
            let diff = tau - tau.conj();
            let t = tau.im;
            Ok(ChernData {
                connection_holo: vec![vec![C64::new(0.0, 0.0)]],
                connection_anti: vec![vec![C64::new(0.0, 0.0)]],
                connection_holo_slope: vec![-two_pi_i * d * tau.conj() / diff],
                connection_anti_slope: vec![two_pi_i * d * tau / diff],
                curvature: vec![CMat::from_element(1, 1, c(PI * d / t, 0.0))],
            })
        }
        _ => {
            let shifts = bundle.shifts(n)?;
            let mut holo = Vec::new();
            let mut anti = Vec::new();
            for chi in &shifts {
                let xi = fiber.symbol(&chi[..n], &chi[n..]);
                holo.push(xi.iter().map(|z| two_pi_i * z).collect());
                anti.push(xi.iter().map(|z| two_pi_i * z.conj()).collect());
            }
            Ok(ChernData {
                connection_holo: holo,
                connection_anti: anti,
                connection_holo_slope: Vec::new(),
                connection_anti_slope: Vec::new(),
                curvature: vec![CMat::zeros(n, n); shifts.len()],
            })
        }
    }
}

/// End(E) of a split flat bundle: summand (i, j) (lexicographic) carries χ_i − χ_j.
#[derive(Clone, Debug)]
pub struct EndBundle {
    base: BundleData,
    induced: BundleData,
    pairs: Vec<(usize, usize)>,
}

pub fn end_bundle(bundle: &BundleData) -> Result<EndBundle> {
    let chis = match bundle.kind() {
        BundleKind::Character(chi) => vec![chi.clone()],
        BundleKind::CharacterSum(chis) => chis.clone(),
        BundleKind::Trivial => return Ok(EndBundle { base: bundle.clone(), induced: BundleData::trivial(), pairs: vec![(0, 0)] }),
        BundleKind::Automorphy { .. } => return Err(Error::Unsupported("End of a degree-d bundle".into())),
    };
    let r = chis.len();
    let mut pairs = Vec::with_capacity(r * r);
    let mut induced = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            pairs.push((i, j));
            induced.push(chis[i].iter().zip(&chis[j]).map(|(a, b)| a - b).collect());
        }
    }
    let induced = if r == 1 { BundleData::trivial() } else { BundleData::character_sum(induced)? };
    Ok(EndBundle { base: bundle.clone(), induced, pairs })
}

impl EndBundle {
    pub fn base(&self) -> &BundleData {
        &self.base
    }

    /// End(E) as a bundle in its own right.
    pub fn bundle(&self) -> &BundleData {
        &self.induced
    }

    /// (i, j) labels of the summands of End(E).
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Summands of End(E) with i = j.
    pub fn diagonal(&self) -> Vec<usize> {
        self.pairs.iter().enumerate().filter(|(_, (i, j))| i == j).map(|(k, _)| k).collect()
    }

    /// Trace of the commutator action [Θ, ·] on End(E) built from per-summand curvatures.
    pub fn induced_curvature_trace(&self, summand_curvature: &[CMat]) -> CMat {
        let n = summand_curvature.first().map_or(0, |m| m.nrows());
        let mut trace = CMat::zeros(n, n);
        for &(i, j) in &self.pairs {
            trace += &summand_curvature[i] - &summand_curvature[j];
        }
        trace
    }
}

/// Number of lattice translates summed in theta series; terms decay like exp(−π d Im τ n²).
const THETA_TERMS: i32 = 12;

/// Holomorphic section F_a(x, y) = Σ_m exp(iπ d τ (m + a/d + y)²) exp(2πi d (m + a/d) x) of the
/// degree-d bundle (d ≥ 1, 0 ≤ a < d) in the gauge of [`crate::geometry::QuasiGrid`], together
/// with its derivative in τ at fixed (x, y).
pub fn theta_section(tau: C64, degree: i32, a: i32, x: f64, y: f64) -> (C64, C64) {
    let d = degree as f64;
    let shift = a as f64 / d;
    let mut value = C64::new(0.0, 0.0);
    let mut dtau = C64::new(0.0, 0.0);
    for m in -THETA_TERMS..=THETA_TERMS {
        let u = m as f64 + shift + y;
        let phase = c(0.0, PI * d) * tau * u * u + c(0.0, 2.0 * PI * d * (m as f64 + shift) * x);
        let term = phase.exp();
        value += term;
        dtau += c(0.0, PI * d * u * u) * term;
    }
    (value, dtau)
}
