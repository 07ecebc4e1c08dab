//! Flat torus fibers on the fixed real torus R^{2n}/Z^{2n}.
//!
//! A point has real coordinates (x, y) ∈ [0,1)^{2n} and complex coordinate z = x + τ·y, so
//! only the period matrix τ changes along a family. Fourier modes are the characters
//! e_k(x, y) = exp(2πi (k_x·x + k_y·y)); the holomorphic derivative of e_{k+χ} is
//! 2πi·ξ(k+χ)·e_k with ξ(m) = (τ − τ̄)^{-T} (m_y − τ̄^T m_x).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64};

/// Period matrix of a fiber. The columns of τ together with the unit vectors generate the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    period: CMat,
}

impl Lattice {
    pub fn new(period: CMat) -> Result<Self> {
        let n = period.nrows();
        if !(n == 1 || n == 2) || !period.is_square() {
            return Err(Error::Unsupported(format!("fiber dimension must be 1 or 2, got {}x{}", period.nrows(), period.ncols())));
        }
        let imag = linalg::imag_part(&period);
        let sym = (&imag + imag.transpose()).map(|z| z * 0.5);
        if !linalg::is_hermitian_positive(&sym, 1e-12) {
            return Err(Error::NonPositiveMetric("imaginary part of the period matrix".into()));
        }
        Ok(Self { period })
    }

    /// Square lattice with τ = i·Id.
    pub fn square(dim: usize) -> Result<Self> {
        Self::new(CMat::identity(dim, dim).map(|z| z * linalg::I))
    }

    pub fn dim(&self) -> usize {
        self.period.nrows()
    }

    pub fn period(&self) -> &CMat {
        &self.period
    }

    /// Im τ as a complex matrix with zero imaginary parts.
    pub fn imag_period(&self) -> CMat {
        linalg::imag_part(&self.period)
    }

    /// Euclidean covolume |det Im τ| of the lattice in C^n ≅ R^{2n}.
    pub fn covolume(&self) -> f64 {
        self.imag_period().determinant().re.abs()
    }
}

/// A fiber: lattice plus a constant hermitian metric g_{αβ̄} (stored as `metric[(α, β)]`).
#[derive(Clone, Debug)]
pub struct FiberChart {
    lattice: Lattice,
    metric: CMat,
    metric_inv: CMat,
    volume: f64,
    /// (τ − τ̄)^{-T}, the matrix behind every mode symbol.
    symbol_matrix: CMat,
}

/// Builds a fiber, validating positivity of Im τ (via [`Lattice`]) and of the metric.
pub fn build_fiber(lattice: Lattice, metric: CMat) -> Result<FiberChart> {
    let n = lattice.dim();
    if metric.nrows() != n || metric.ncols() != n {
        return Err(Error::ShapeMismatch(format!("metric must be {n}x{n}")));
    }
    if !linalg::is_hermitian_positive(&metric, 1e-12) {
        return Err(Error::NonPositiveMetric("fiber metric".into()));
    }
    let metric_inv = linalg::inverse(&metric).ok_or_else(|| Error::NonPositiveMetric("singular metric".into()))?;
    let det_g = metric.determinant().re;
    let volume = 2f64.powi(n as i32) * det_g * lattice.covolume();
    let diff = lattice.period() - linalg::conj_mat(lattice.period());
    let symbol_matrix = linalg::inverse(&diff)
        .ok_or_else(|| Error::NonPositiveMetric("degenerate period matrix".into()))?
        .transpose();
    Ok(FiberChart { lattice, metric, metric_inv, volume, symbol_matrix })
}

impl FiberChart {
    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn period(&self) -> &CMat {
        self.lattice.period()
    }

    /// g_{αβ̄} as `metric()[(α, β)]`.
    pub fn metric(&self) -> &CMat {
        &self.metric
    }

    /// Inverse metric; g^{β̄α} is `metric_inv()[(β, α)]`.
    pub fn metric_inv(&self) -> &CMat {
        &self.metric_inv
    }

    /// g^{β̄α}.
    pub fn raised(&self, bar: usize, holo: usize) -> C64 {
        self.metric_inv[(bar, holo)]
    }

    /// ∫ ω^n / n! with ω = i g_{αβ̄} dz^α ∧ dz̄^β.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// z = x + τ y.
    pub fn complex_coordinate(&self, x: &[f64], y: &[f64]) -> Vec<C64> {
        let n = self.dim();
        (0..n)
            .map(|a| {
                let mut z = c(x[a], 0.0);
                for b in 0..n {
                    z += self.period()[(a, b)] * y[b];
                }
                z
            })
            .collect()
    }

    /// ξ(m) = (τ − τ̄)^{-T}(m_y − τ̄^T m_x); the holomorphic symbol of e_m is 2πi ξ(m).
    pub fn symbol(&self, mx: &[f64], my: &[f64]) -> Vec<C64> {
        let n = self.dim();
        let tau = self.period();
        let w: Vec<C64> = (0..n)
            .map(|b| {
                let mut acc = c(my[b], 0.0);
                for a in 0..n {
                    acc -= tau[(a, b)].conj() * mx[a];
                }
                acc
            })
            .collect();
        (0..n).map(|a| (0..n).map(|b| self.symbol_matrix[(a, b)] * w[b]).sum()).collect()
    }

    /// Eigenvalue of □_∂̄ = ∂̄*∂̄ on e_m for the trivial bundle: 4π² g^{β̄α} ξ_α conj(ξ_β).
    pub fn function_laplacian_eigenvalue(&self, mx: &[f64], my: &[f64]) -> f64 {
        let xi = self.symbol(mx, my);
        let n = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                acc += self.raised(b, a) * xi[a] * xi[b].conj();
            }
        }
        4.0 * PI * PI * acc.re
    }
}

/// Lexicographically ordered Fourier modes ‖k‖_∞ ≤ K, with symbols for a given character shift.
#[derive(Clone, Debug)]
pub struct ModeSet {
    cutoff: usize,
    dim: usize,
    modes: Vec<Vec<i32>>,
    shift: Vec<f64>,
    xi: Vec<Vec<C64>>,
}

/// Enumerates modes k ∈ Z^{2n} (ordered as (k_x, k_y)) and their symbols ξ(k + shift).
pub fn mode_set(fiber: &FiberChart, cutoff: usize, character_shift: &[f64]) -> Result<ModeSet> {
    let n = fiber.dim();
    if cutoff == 0 {
        return Err(Error::Precondition("mode cutoff must be at least 1".into()));
    }
    if character_shift.len() != 2 * n {
        return Err(Error::ShapeMismatch(format!("character shift must have {} entries", 2 * n)));
    }
    let modes = enumerate_modes(2 * n, cutoff as i32);
    let xi = modes
        .iter()
        .map(|k| {
            let m: Vec<f64> = k.iter().zip(character_shift).map(|(&ki, &s)| ki as f64 + s).collect();
            fiber.symbol(&m[..n], &m[n..])
        })
        .collect();
    Ok(ModeSet { cutoff, dim: n, modes, shift: character_shift.to_vec(), xi })
}

fn enumerate_modes(len: usize, cutoff: i32) -> Vec<Vec<i32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-cutoff..=cutoff).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

impl ModeSet {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Vec<i32>] {
        &self.modes
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// ξ(k + shift) for the mode at `index`.
    pub fn xi(&self, index: usize) -> &[C64] {
        &self.xi[index]
    }

    /// Index of the mode k, if inside the cutoff.
    pub fn index_of(&self, k: &[i32]) -> Option<usize> {
        let side = 2 * self.cutoff as i64 + 1;
        let mut idx: i64 = 0;
        for &ki in k {
            if ki.unsigned_abs() as usize > self.cutoff {
                return None;
            }
            idx = idx * side + (ki as i64 + self.cutoff as i64);
        }
        Some(idx as usize)
    }

    pub fn zero_index(&self) -> usize {
        self.modes.len() / 2
    }
}

/// Uniform N×N grid on the unit square for degree-d line bundles in the unitary gauge
/// F(x+1, y) = F(x, y), F(x, y+1) = exp(−2πi d x) F(x, y). Samples are stored x-major.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiGrid {
    resolution: usize,
    degree: i32,
}

impl QuasiGrid {
    /// The two translation factors commute exactly when exp(2πi d) = 1, i.e. d is an integer.
    pub fn new(resolution: usize, degree: f64) -> Result<Self> {
        let cocycle = C64::from_polar(1.0, 2.0 * PI * degree) - 1.0;
        if cocycle.norm() > 1e-12 {
            return Err(Error::InconsistentAutomorphy(format!("translation factors fail to commute for degree {degree}")));
        }
        let degree = degree.round() as i32;
        if resolution < 8 || resolution < 8 * degree.unsigned_abs() as usize {
            return Err(Error::Precondition(format!("grid resolution {resolution} below 8·max(1,|d|)")));
        }
        Ok(Self { resolution, degree })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        self.resolution == 0
    }

    pub fn step(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.resolution + iy
    }

    pub fn point(&self, index: usize) -> (f64, f64) {
        let n = self.resolution;
        ((index / n) as f64 / n as f64, (index % n) as f64 / n as f64)
    }

    /// Factor picked up by a section when y is translated by `wraps` lattice periods at abscissa x.
    pub fn y_translation_phase(&self, x: f64, wraps: i32) -> C64 {
        C64::from_polar(1.0, -2.0 * PI * self.degree as f64 * x * wraps as f64)
    }

    /// Commutator defect of the two translation factors, |e^{2πi d} − 1|.
    pub fn cocycle_defect(&self) -> f64 {
        (C64::from_polar(1.0, 2.0 * PI * self.degree as f64) - 1.0).norm()
    }
}
