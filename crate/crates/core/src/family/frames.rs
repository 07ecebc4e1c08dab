//! Analytic harmonic frames of the direct images and representatives known to first order in s.
//!
//! * Trivial bundle: dz^I ∧ (∂̄y)^J with y = (τ−τ̄)^{-1}(z − z̄), so ∂̄y = (τ̄−τ)^{-1} dz̄. These
//!   are restrictions of d-closed total-space forms, hence holomorphic sections of the direct
//!   image. Their coefficients are minors of Y = (τ̄−τ)^{-1} with ∂_sY = Yτ'Y, ∂_s̄Y = −Yτ̄'Y.
//! * Flat bundles: constant forms on the summands with vanishing character.
//! * Degree d > 0: theta sections F_a ⊗ dz^p (q = 0), differentiated in τ at fixed (x, y).
//! * Degree d < 0: the Serre-dual frame Σ_b M_ab conj(F_b) dz^p ∧ dz̄ with M = (Sᵀ)^{-1},
//!   S_cb = ∫F_c conj(F_b) dz∧dz̄. It has no first-order jet here.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bundles::theta_section;
use crate::error::{Error, Result};
use crate::forms::index::{binomial, insert_front, members, subsets};
use crate::forms::{Discretization, PQForm};
use crate::linalg::{self, c, conj_mat, minor, minor_derivative, CMat, C64};

use super::{FamilyKind, FamilyPoint};

/// A form on one fiber together with its s- and s̄-derivatives at fixed real coordinates.
#[derive(Clone, Debug)]
pub struct FrameJet {
    pub value: PQForm,
    pub ds: Option<PQForm>,
    pub dsbar: Option<PQForm>,
}

impl FrameJet {
    pub fn constant(value: PQForm) -> Self {
        let zero = value.zeros_like();
        Self { value, ds: Some(zero.clone()), dsbar: Some(zero) }
    }
}

fn combine(acc: &mut Option<PQForm>, add: Option<&PQForm>, weight: C64) -> Result<()> {
    match (acc.as_mut(), add) {
        (Some(a), Some(b)) => a.axpy(weight, b),
        (_, None) => {
            *acc = None;
            Ok(())
        }
        (None, Some(_)) => Ok(()),
    }
}

fn zero_shift_summands(point: &FamilyPoint) -> Result<Vec<usize>> {
    let space = point.space();
    if space.bundle().degree().is_some() {
        return Ok(Vec::new());
    }
    let shifts = space.bundle().shifts(space.dim())?;
    Ok(shifts.iter().enumerate().filter(|(_, chi)| chi.iter().all(|&x| x == 0.0)).map(|(i, _)| i).collect())
}

/// dim H^{p,q} of the fiber with values in the form bundle.
pub fn expected_rank(point: &FamilyPoint, p: usize, q: usize) -> Result<usize> {
    let n = point.dim();
    if p > n || q > n {
        return Err(Error::DegreeError(format!("({p},{q}) exceeds dimension {n}")));
    }
    Ok(match point.descriptor().kind() {
        FamilyKind::Theta { degree, .. } => match (degree.signum(), q) {
            (1, 0) | (-1, 1) => degree.unsigned_abs() as usize,
            _ => 0,
        },
        _ => zero_shift_summands(point)?.len() * binomial(n, p) * binomial(n, q),
    })
}

/// Frame of harmonic representatives for H^{p,q}, with jets whenever they are known analytically.
pub fn analytic_frame(point: &FamilyPoint, p: usize, q: usize) -> Result<Vec<FrameJet>> {
    let frame = match point.descriptor().kind() {
        FamilyKind::ComplexStructure { .. } => untwisted_frame(point, p, q)?,
        FamilyKind::CharacterPath { .. } => character_frame(point, p, q)?,
        FamilyKind::Theta { degree, .. } if *degree > 0 && q == 0 => theta_frame(point, *degree, p)?,
        FamilyKind::Theta { degree, .. } if *degree < 0 && q == 1 => dual_theta_frame(point, -*degree, p)?,
        FamilyKind::Theta { .. } => Vec::new(),
    };
    if frame.is_empty() {
        return Err(Error::RankZero { p, q });
    }
    Ok(frame)
}

fn untwisted_frame(point: &FamilyPoint, p: usize, q: usize) -> Result<Vec<FrameJet>> {
    let n = point.dim();
    let space = point.space();
    let family = point.descriptor();
    let s = point.parameter();
    let tau = family.period(s);
    let y = linalg::inverse(&(conj_mat(&tau) - &tau)).ok_or_else(|| Error::DegenerateFiber(format!("{s}")))?;
    let tau_prime = family.period_derivative(s);
    let dy = &y * &tau_prime * &y;
    let dybar = -(&y * conj_mat(&tau_prime) * &y);
    let mut frame = Vec::new();
    for holo in subsets(n, p) {
        for rows in subsets(n, q) {
            let rows = members(rows);
            let layout = crate::forms::index::Layout::new(n, p, q);
            let build = |f: &dyn Fn(&[usize]) -> C64| -> Result<PQForm> {
                let values: Vec<Vec<C64>> = layout
                    .components()
                    .map(|(_, a, b)| vec![if a == holo { f(&members(b)) } else { c(0.0, 0.0) }])
                    .collect();
                PQForm::constant(space, p, q, &values)
            };
            let value = build(&|cols| minor(&y, &rows, cols))?;
            let ds = build(&|cols| minor_derivative(&y, &dy, &rows, cols))?;
            let dsbar = build(&|cols| minor_derivative(&y, &dybar, &rows, cols))?;
            frame.push(FrameJet { value, ds: Some(ds), dsbar: Some(dsbar) });
        }
    }
    Ok(frame)
}

fn character_frame(point: &FamilyPoint, p: usize, q: usize) -> Result<Vec<FrameJet>> {
    let n = point.dim();
    let space = point.space();
    let slopes = point.target_character_slopes();
    let layout = crate::forms::index::Layout::new(n, p, q);
    let mut frame = Vec::new();
    for summand in zero_shift_summands(point)? {
        let moving = slopes[summand].iter().any(|w| w.norm() != 0.0);
        for comp in 0..layout.len() {
            let values: Vec<Vec<C64>> = (0..layout.len())
                .map(|k| (0..space.rank()).map(|r| if k == comp && r == summand { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
                .collect();
            let value = PQForm::constant(space, p, q, &values)?;
            frame.push(if moving { FrameJet { value, ds: None, dsbar: None } } else { FrameJet::constant(value) });
        }
    }
    Ok(frame)
}

fn theta_frame(point: &FamilyPoint, degree: i32, p: usize) -> Result<Vec<FrameJet>> {
    let space = point.space();
    let s = point.parameter();
    let tau = point.descriptor().period(s)[(0, 0)];
    let tau_prime = point.descriptor().period_derivative(s)[(0, 0)];
    (0..degree)
        .map(|a| {
            let mut value = PQForm::zeros(space, p, 0)?;
            let mut ds = PQForm::zeros(space, p, 0)?;
            let samples = space.sample(|x, y| theta_section(tau, degree, a, x, y).0)?;
            let derivative = space.sample(|x, y| theta_section(tau, degree, a, x, y).1 * tau_prime)?;
            value.field_mut(0, 0).copy_from_slice(&samples);
            ds.field_mut(0, 0).copy_from_slice(&derivative);
            let dsbar = value.zeros_like();
            Ok(FrameJet { value, ds: Some(ds), dsbar: Some(dsbar) })
        })
        .collect()
}

fn dual_theta_frame(point: &FamilyPoint, degree: i32, p: usize) -> Result<Vec<FrameJet>> {
    let space = point.space();
    let tau = point.fiber().period()[(0, 0)];
    let d = degree as usize;
    let sections = (0..degree)
        .map(|a| space.sample(|x, y| theta_section(tau, degree, a, x, y).0))
        .collect::<Result<Vec<_>>>()?;
    let weight = space.mean_weight();
    let pairing = c(0.0, -2.0 * tau.im);
    let serre = CMat::from_fn(d, d, |cc, b| {
        sections[cc].iter().zip(&sections[b]).map(|(f, g)| f * g.conj()).sum::<C64>() * weight * pairing
    });
    let mix = linalg::inverse(&serre.transpose()).ok_or(Error::IllConditionedGram { condition: f64::INFINITY })?;
    (0..d)
        .map(|a| {
            let mut value = PQForm::zeros(space, p, 1)?;
            let field = value.field_mut(0, 0);
            for (b, section) in sections.iter().enumerate() {
                for (o, f) in field.iter_mut().zip(section) {
                    *o += mix[(a, b)] * f.conj();
                }
            }
            Ok(FrameJet { value, ds: None, dsbar: None })
        })
        .collect()
}

/// Representative Σ_k (c_k + b_k (s − s₀)) e_k(s), optionally plus the ∂̄_s-exact form
/// ∂̄_s β for a fixed random (p, q−1)-form β (Fourier backend only).
#[derive(Clone, Debug, PartialEq)]
pub struct Representative {
    pub coefficients: Vec<C64>,
    pub slopes: Vec<C64>,
    pub reference: C64,
    pub exact_seed: Option<u64>,
}

impl Representative {
    /// Random coefficients and slopes of unit scale, plus an exact part when `exact`.
    pub fn random(rank: usize, seed: u64, reference: C64, exact: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gauss = || {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c(re, im) * std::f64::consts::FRAC_1_SQRT_2
        };
        let coefficients = (0..rank).map(|_| gauss()).collect();
        let slopes = (0..rank).map(|_| gauss()).collect();
        Self { coefficients, slopes, reference, exact_seed: exact.then_some(seed ^ 0x5eed) }
    }
}

/// Evaluates a representative and its jet at the fiber of `point`.
pub fn representative_jet(point: &FamilyPoint, frame: &[FrameJet], rep: &Representative) -> Result<FrameJet> {
    if frame.len() != rep.coefficients.len() || frame.len() != rep.slopes.len() {
        return Err(Error::ShapeMismatch(format!("representative has {} coefficients for a frame of {}", rep.coefficients.len(), frame.len())));
    }
    let first = frame.first().ok_or(Error::Precondition("empty frame".into()))?;
    let offset = point.parameter() - rep.reference;
    let mut value = first.value.zeros_like();
    let mut ds = Some(first.value.zeros_like());
    let mut dsbar = Some(first.value.zeros_like());
    for ((jet, &coef), &slope) in frame.iter().zip(&rep.coefficients).zip(&rep.slopes) {
        let weight = coef + slope * offset;
        value.axpy(weight, &jet.value)?;
        combine(&mut ds, Some(&jet.value), slope)?;
        combine(&mut ds, jet.ds.as_ref(), weight)?;
        combine(&mut dsbar, jet.dsbar.as_ref(), weight)?;
    }
    let mut jet = FrameJet { value, ds, dsbar };
    if let Some(seed) = rep.exact_seed {
        let exact = exact_jet(point, jet.value.p(), jet.value.q(), seed)?;
        jet.value.add_assign(&exact.value)?;
        combine(&mut jet.ds, exact.ds.as_ref(), c(1.0, 0.0))?;
        combine(&mut jet.dsbar, exact.dsbar.as_ref(), c(1.0, 0.0))?;
    }
    Ok(jet)
}

/// Jet of ∂̄_s β for a fixed coefficient vector β (modes held at fixed real coordinates,
/// antiholomorphic slots in the moving frame ∂̄y).
/// The (0,1) symbol of mode k is Q = conj ξ(k+χ) = −(τ−τ̄)^{-T}(w_k + u) with
/// w_k = k_y − τᵀk_x, so ∂_sQ = (τ−τ̄)^{-T}(τ'ᵀ(k_x − Q) − u') and ∂_s̄Q = (τ−τ̄)^{-T}τ̄'ᵀQ.
pub fn exact_jet(point: &FamilyPoint, p: usize, q: usize, seed: u64) -> Result<FrameJet> {
    if q == 0 {
        return Err(Error::DegreeError("exact representatives need q ≥ 1".into()));
    }
    let space = point.space();
    let Discretization::Fourier(fourier) = space.discretization() else {
        return Err(Error::Unsupported("exact representatives are built on the Fourier backend".into()));
    };
    let n = point.dim();
    let family = point.descriptor();
    let s = point.parameter();
    let tau = family.period(s);
    let dinv_t = linalg::inverse(&(&tau - conj_mat(&tau))).ok_or_else(|| Error::DegenerateFiber(format!("{s}")))?.transpose();
    let tau_prime_t = family.period_derivative(s).transpose();
    let tau_bar_prime_t = conj_mat(&tau_prime_t);
    let slopes = point.target_character_slopes();
    let mut beta = PQForm::random(space, p, q - 1, seed)?;
    // Damp high modes so the exact part has the same scale as the harmonic frame.
    for r in 0..space.rank() {
        let modes = fourier.modes(r);
        for comp in 0..beta.layout().len() {
            for (k, v) in beta.field_mut(comp, r).iter_mut().enumerate() {
                let size: f64 = modes.modes()[k].iter().map(|&m| (m * m) as f64).sum();
                *v *= (-size).exp();
            }
        }
    }
    let symbols = |which: u8| -> Vec<Vec<Vec<C64>>> {
        (0..space.rank())
            .map(|r| {
                let modes = fourier.modes(r);
                let du = CMat::from_fn(n, 1, |i, _| slopes[r][i]);
                (0..modes.len())
                    .map(|k| {
                        let qv = CMat::from_fn(n, 1, |i, _| modes.xi(k)[i].conj());
                        let out = match which {
                            0 => qv,
                            1 => {
                                let kx = CMat::from_fn(n, 1, |i, _| c(modes.modes()[k][i] as f64, 0.0));
                                &dinv_t * (&tau_prime_t * (kx - &qv) - &du)
                            }
                            _ => &dinv_t * &tau_bar_prime_t * &qv,
                        };
                        out.iter().copied().collect()
                    })
                    .collect()
            })
            .collect()
    };
    // β carries its antiholomorphic slots in the frame ∂̄y = Y dz̄, which L'_v̄ annihilates.
    let y = linalg::inverse(&(conj_mat(&tau) - &tau)).ok_or_else(|| Error::DegenerateFiber(format!("{s}")))?;
    let tau_prime = family.period_derivative(s);
    let dy = &y * &tau_prime * &y;
    let dybar = -(&y * conj_mat(&tau_prime) * &y);
    let beta_s = in_moving_frame(&beta, &|rows, cols| minor(&y, rows, cols))?;
    let beta_ds = in_moving_frame(&beta, &|rows, cols| minor_derivative(&y, &dy, rows, cols))?;
    let beta_dsbar = in_moving_frame(&beta, &|rows, cols| minor_derivative(&y, &dybar, rows, cols))?;
    let (q0, q1, q2) = (symbols(0), symbols(1), symbols(2));
    let value = symbol_dbar(&beta_s, &q0)?;
    let ds = symbol_dbar(&beta_s, &q1)?.plus(&symbol_dbar(&beta_ds, &q0)?)?;
    let dsbar = symbol_dbar(&beta_s, &q2)?.plus(&symbol_dbar(&beta_dsbar, &q0)?)?;
    Ok(FrameJet { value, ds: Some(ds), dsbar: Some(dsbar) })
}

/// Reads the coefficients b_{I,J} of `beta` against dz^I ∧ (∂̄y)^J and returns the form
/// Σ b_{I,J} weight(J, B) dz^I ∧ dz̄^B, with `weight(rows, cols)` a minor of Y or its derivative.
fn in_moving_frame(beta: &PQForm, weight: &dyn Fn(&[usize], &[usize]) -> C64) -> Result<PQForm> {
    let mut out = beta.zeros_like();
    let layout = beta.layout().clone();
    for (src, a, rows) in layout.components() {
        let rows = members(rows);
        for (dst, a2, cols) in layout.components() {
            if a2 != a {
                continue;
            }
            let w = weight(&rows, &members(cols));
            if w.norm() == 0.0 {
                continue;
            }
            for r in 0..beta.rank() {
                let input = beta.field(src, r).to_vec();
                for (o, v) in out.field_mut(dst, r).iter_mut().zip(&input) {
                    *o += w * v;
                }
            }
        }
    }
    Ok(out)
}

/// ∂̄ with the per-mode (0,1) symbol replaced by `symbols[summand][mode][β]`:
/// (∂̄β)_{A,B'} = (−1)^p Σ_ν (−1)^ν 2πi Q_{B'[ν]} β_{A,B'∖B'[ν]}.
fn symbol_dbar(beta: &PQForm, symbols: &[Vec<Vec<C64>>]) -> Result<PQForm> {
    let (p, q) = (beta.p(), beta.q());
    let mut out = PQForm::zeros(beta.space(), p, q + 1)?;
    let layout = out.layout().clone();
    let src = beta.layout().clone();
    let two_pi_i = c(0.0, 2.0 * std::f64::consts::PI);
    let outer = if p % 2 == 0 { 1.0 } else { -1.0 };
    for (comp, a, b) in layout.components() {
        for (nu, index) in members(b).into_iter().enumerate() {
            let rest = b & !(1 << index);
            debug_assert!(insert_front(rest, index).is_some());
            let sign = outer * if nu % 2 == 0 { 1.0 } else { -1.0 };
            let from = src.component(a, rest);
            for (r, per_mode) in symbols.iter().enumerate() {
                let input = beta.field(from, r).to_vec();
                for (k, (o, v)) in out.field_mut(comp, r).iter_mut().zip(&input).enumerate() {
                    *o += two_pi_i * sign * per_mode[k][index] * v;
                }
            }
        }
    }
    Ok(out)
}
