//! Small dense complex linear algebra used throughout (matrices are at most a few dozen wide).

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn conj_mat(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

pub fn imag_part(m: &CMat) -> CMat {
    m.map(|z| C64::new(z.im, 0.0))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Eigenvalues of the hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Positive definiteness of a hermitian matrix (hermitian to `tol` relative).
pub fn is_hermitian_positive(m: &CMat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = max_abs(m).max(1e-300);
    if hermitian_defect(m) > tol * scale {
        return false;
    }
    hermitian_eigenvalues(m).first().map_or(false, |&l| l > 0.0)
}

/// Spectral condition number of a hermitian positive matrix; infinite if not positive.
pub fn condition_number(m: &CMat) -> f64 {
    let ev = hermitian_eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

/// Determinant of the square submatrix picking `rows` and `cols` (both as index lists).
pub fn minor(m: &CMat, rows: &[usize], cols: &[usize]) -> C64 {
    debug_assert_eq!(rows.len(), cols.len());
    match rows.len() {
        0 => C64::new(1.0, 0.0),
        1 => m[(rows[0], cols[0])],
        2 => m[(rows[0], cols[0])] * m[(rows[1], cols[1])] - m[(rows[0], cols[1])] * m[(rows[1], cols[0])],
        k => {
            let sub = CMat::from_fn(k, k, |i, j| m[(rows[i], cols[j])]);
            sub.determinant()
        }
    }
}

/// Derivative of a minor of `m(s)` given `dm = ∂m`.
pub fn minor_derivative(m: &CMat, dm: &CMat, rows: &[usize], cols: &[usize]) -> C64 {
    let k = rows.len();
    let mut total = C64::new(0.0, 0.0);
    // Multilinearity in the rows.
    for r in 0..k {
        let sub = CMat::from_fn(k, k, |i, j| if i == r { dm[(rows[i], cols[j])] } else { m[(rows[i], cols[j])] });
        total += if k == 0 { C64::new(0.0, 0.0) } else { sub.determinant() };
    }
    total
}

/// Relative size of `a - b` against `max(|a|, |b|, floor)`.
pub fn relative_gap(a: C64, b: C64, floor: f64) -> f64 {
    let scale = a.norm().max(b.norm()).max(floor);
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Entrywise relative disagreement of two matrices with a common scale floor.
pub fn matrix_relative_gap(a: &CMat, b: &CMat, floor: f64) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| relative_gap(*x, *y, floor))
        .fold(0.0, f64::max)
}
