//! Pointwise checks on the total-space Kähler form and the horizontal lift, evaluated by finite
//! differences of the closed-form Hessian in the total coordinates (z_1..z_n, s).

use crate::error::Result;
use crate::forms::algebra::slot_derivation;
use crate::forms::PQForm;
use crate::linalg::{self, c, CMat, C64, I};

use super::{geodesic_curvature_at, horizontal_lift, sample_points, FamilyDescriptor, FamilyPoint, HorizontalData};

/// Step of the fourth-order difference quotients below.
const STEP: f64 = 1e-3;

/// Wirtinger derivative ∂/∂u_k (or ∂/∂ū_k when `anti`) of a vector-valued function.
fn wirtinger(f: &dyn Fn(&[C64]) -> Result<Vec<C64>>, u: &[C64], k: usize, anti: bool) -> Result<Vec<C64>> {
    let along = |dir: C64| -> Result<Vec<C64>> {
        let at = |t: f64| {
            let mut v = u.to_vec();
            v[k] += dir * t;
            f(&v)
        };
        let (m2, m1, p1, p2) = (at(-2.0 * STEP)?, at(-STEP)?, at(STEP)?, at(2.0 * STEP)?);
        Ok((0..m1.len()).map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * STEP)).collect())
    };
    let dx = along(c(1.0, 0.0))?;
    let dy = along(I)?;
    let sign = if anti { 1.0 } else { -1.0 };
    Ok(dx.iter().zip(&dy).map(|(a, b)| (a + I * sign * b) * 0.5).collect())
}

fn total_points(point: &FamilyPoint) -> Vec<Vec<C64>> {
    sample_points(point.dim())
        .iter()
        .map(|(x, y)| {
            let mut u = point.fiber().complex_coordinate(x, y);
            u.push(point.parameter());
            u
        })
        .collect()
}

fn split(u: &[C64]) -> (&[C64], C64) {
    (&u[..u.len() - 1], u[u.len() - 1])
}

fn hessian_at(family: &FamilyDescriptor, u: &[C64]) -> Result<CMat> {
    let (z, s) = split(u);
    family.kaehler_hessian(z, s)
}

/// ω^{n+1}/(n+1)! against c(ω)·ω^n/n! ∧ i ds∧ds̄, as densities in the real coordinates of the
/// fiber: max |det H − (c + perturbation)·det g|·2^n|det Im τ|. A perturbation δ of c moves the
/// defect by exactly δ times the fiber volume.
pub fn semmes_defect(point: &FamilyPoint, perturbation: f64) -> Result<f64> {
    let family = point.descriptor();
    let n = point.dim();
    let scale = 2f64.powi(n as i32) * point.fiber().lattice().covolume();
    let mut worst = 0.0f64;
    for u in total_points(point) {
        let h = hessian_at(family, &u)?;
        let g = h.view((0, 0), (n, n)).into_owned();
        let curvature = geodesic_curvature_at(&h)? + perturbation;
        worst = worst.max((h.determinant() - g.determinant() * curvature).norm() * scale);
    }
    Ok(worst)
}

/// Largest (2,1)-component of dω: ∂_k H_{ij̄} − ∂_i H_{kj̄} over all total indices.
pub fn closedness_defect(point: &FamilyPoint) -> Result<f64> {
    let family = point.descriptor();
    let m = point.dim() + 1;
    let entries = |u: &[C64]| -> Result<Vec<C64>> { Ok(hessian_at(family, u)?.iter().copied().collect()) };
    let mut worst = 0.0f64;
    for u in total_points(point) {
        let derivs = (0..m).map(|k| wirtinger(&entries, &u, k, false)).collect::<Result<Vec<_>>>()?;
        // Column-major storage: entry (i, j) sits at i + j·m.
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    worst = worst.max((derivs[k][i + j * m] - derivs[i][k + j * m]).norm());
                }
            }
        }
    }
    Ok(worst)
}

/// [v, v̄] computed from the lift against c^{;α}∂_α − c^{;β̄}∂_β̄ with c = ω(v, v̄).
pub fn bracket_defect(point: &FamilyPoint) -> Result<f64> {
    let family = point.descriptor();
    let n = point.dim();
    let lift = |u: &[C64]| -> Result<Vec<C64>> { horizontal_lift(&hessian_at(family, u)?) };
    let lift_bar = |u: &[C64]| -> Result<Vec<C64>> { Ok(lift(u)?.iter().map(|z| z.conj()).collect()) };
    let curvature = |u: &[C64]| -> Result<Vec<C64>> { Ok(vec![c(geodesic_curvature_at(&hessian_at(family, u)?)?, 0.0)]) };
    let mut worst = 0.0f64;
    for u in total_points(point) {
        let a = lift(&u)?;
        let h = hessian_at(family, &u)?;
        let ginv = linalg::inverse(&h.view((0, 0), (n, n)).into_owned()).expect("fiber metric is invertible");
        // v(f) = ∂_s f + a^α ∂_α f and v̄(f) = ∂_s̄ f + ā^β ∂_β̄ f.
        let apply = |f: &dyn Fn(&[C64]) -> Result<Vec<C64>>, conjugate: bool| -> Result<Vec<C64>> {
            let mut out = wirtinger(f, &u, n, conjugate)?;
            for al in 0..n {
                let weight = if conjugate { a[al].conj() } else { a[al] };
                for (o, d) in out.iter_mut().zip(wirtinger(f, &u, al, conjugate)?) {
                    *o += weight * d;
                }
            }
            Ok(out)
        };
        let v_abar = apply(&lift_bar, false)?;
        let vbar_a = apply(&lift, true)?;
        let dc: Vec<C64> = (0..n).map(|k| wirtinger(&curvature, &u, k, false).map(|d| d[0])).collect::<Result<_>>()?;
        let dcbar: Vec<C64> = (0..n).map(|k| wirtinger(&curvature, &u, k, true).map(|d| d[0])).collect::<Result<_>>()?;
        for al in 0..n {
            // ∂_α component of [v, v̄] is −v̄(a^α); expected g^{β̄α} ∂_β̄ c.
            let expected: C64 = (0..n).map(|b| ginv[(b, al)] * dcbar[b]).sum();
            worst = worst.max((-vbar_a[al] - expected).norm());
        }
        for b in 0..n {
            // ∂_β̄ component is v(ā^β); expected −g^{β̄α} ∂_α c.
            let expected: C64 = -(0..n).map(|al| ginv[(b, al)] * dc[al]).sum::<C64>();
            worst = worst.max((v_abar[b] - expected).norm());
        }
    }
    Ok(worst)
}

/// ∂_sΓ^α_{βγ} + a^α_{;βγ} and ∂_s̄Γ^α_{βγ} + g^{δ̄α} a_{s̄γ;δ̄β}, with Γ the fiber Christoffel
/// symbols and a_{s̄γ} = g_{γδ̄} ā^δ, all by nested difference quotients.
pub fn christoffel_defect(point: &FamilyPoint) -> Result<f64> {
    let family = point.descriptor();
    let n = point.dim();
    let christoffel = |u: &[C64]| -> Result<Vec<C64>> {
        let g = |v: &[C64]| -> Result<Vec<C64>> { Ok(hessian_at(family, v)?.view((0, 0), (n, n)).iter().copied().collect()) };
        let h = hessian_at(family, u)?;
        let ginv = linalg::inverse(&h.view((0, 0), (n, n)).into_owned()).expect("fiber metric is invertible");
        let dg = (0..n).map(|b| wirtinger(&g, u, b, false)).collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(n * n * n);
        for al in 0..n {
            for b in 0..n {
                for gm in 0..n {
                    out.push((0..n).map(|d| ginv[(d, al)] * dg[b][gm + d * n]).sum());
                }
            }
        }
        Ok(out)
    };
    let lift = |u: &[C64]| -> Result<Vec<C64>> { horizontal_lift(&hessian_at(family, u)?) };
    let lowered_bar = |u: &[C64]| -> Result<Vec<C64>> {
        let h = hessian_at(family, u)?;
        let a = horizontal_lift(&h)?;
        Ok((0..n).map(|gm| (0..n).map(|d| h[(gm, d)] * a[d].conj()).sum()).collect())
    };
    let mut worst = 0.0f64;
    for u in total_points(point) {
        let ds_gamma = wirtinger(&christoffel, &u, n, false)?;
        let dsbar_gamma = wirtinger(&christoffel, &u, n, true)?;
        let h = hessian_at(family, &u)?;
        let ginv = linalg::inverse(&h.view((0, 0), (n, n)).into_owned()).expect("fiber metric is invertible");
        for b in 0..n {
            let db_lift = |v: &[C64]| wirtinger(&lift, v, b, false);
            let db_low = |v: &[C64]| wirtinger(&lowered_bar, v, b, false);
            for gm in 0..n {
                let second = wirtinger(&db_lift, &u, gm, false)?;
                for al in 0..n {
                    let idx = (al * n + b) * n + gm;
                    worst = worst.max((ds_gamma[idx] + second[al]).norm());
                }
            }
            for d in 0..n {
                let mixed = wirtinger(&db_low, &u, d, true)?;
                for al in 0..n {
                    for gm in 0..n {
                        let idx = (al * n + b) * n + gm;
                        worst = worst.max((dsbar_gamma[idx] + ginv[(d, al)] * mixed[gm]).norm());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Fiber restriction of L_v ω, using ∂_s g from the closed-form metric and the slot derivation
/// of the moving differentials. Zero when the lift is horizontal for a closed ω.
pub fn parallel_kaehler_defect(point: &FamilyPoint, data: &HorizontalData) -> Result<f64> {
    let family = point.descriptor();
    let n = point.dim();
    let s = point.parameter();
    let space = point.scalar_space();
    let lambda = family.potential_scale();
    let tau = family.period(s);
    let k = linalg::inverse(&linalg::imag_part(&tau)).expect("period matrix is nondegenerate");
    let dk = -(&k * (family.period_derivative(s) / c(0.0, 2.0)) * &k);
    let metric = point.fiber().metric();
    let layout = crate::forms::index::Layout::new(n, 1, 1);
    let build = |m: &CMat| -> Result<PQForm> {
        let values: Vec<Vec<C64>> = layout
            .components()
            .map(|(_, a, b)| vec![I * m[(a.trailing_zeros() as usize, b.trailing_zeros() as usize)]])
            .collect();
        PQForm::constant(space, 1, 1, &values)
    };
    let omega = build(metric)?;
    let domega = build(&(dk * c(lambda / 2.0, 0.0)))?;
    let (same, moved) = slot_derivation(&omega, true, &data.lift_gradient, data.kodaira_spencer.coeffs())?;
    let same = same.plus(&domega)?;
    Ok(same.max_abs().max(moved.map_or(0.0, |m| m.max_abs())))
}

/// ∂̄ of the sampled lift along the fiber against the Kodaira–Spencer form and ∂ of it against
/// the type-preserving gradient.
pub fn lift_derivative_defect(point: &FamilyPoint, data: &HorizontalData) -> Result<f64> {
    let family = point.descriptor();
    let n = point.dim();
    let lift = |u: &[C64]| -> Result<Vec<C64>> { horizontal_lift(&hessian_at(family, u)?) };
    let mut worst = data.lift_residual;
    for u in total_points(point) {
        for b in 0..n {
            let anti = wirtinger(&lift, &u, b, true)?;
            let holo = wirtinger(&lift, &u, b, false)?;
            for g in 0..n {
                worst = worst.max((anti[g] - data.kodaira_spencer.coeffs()[(g, b)]).norm());
                worst = worst.max((holo[g] - data.lift_gradient[(g, b)]).norm());
            }
        }
    }
    Ok(worst)
}

/// Coefficients (X^α, X^β̄) of [v, v̄] from difference quotients of the lift, averaged over
/// samples: X^α = −v̄(a^α), X^β̄ = v(ā^β).
pub fn bracket_field(point: &FamilyPoint) -> Result<(Vec<C64>, Vec<C64>)> {
    let family = point.descriptor();
    let n = point.dim();
    let lift = |u: &[C64]| -> Result<Vec<C64>> { horizontal_lift(&hessian_at(family, u)?) };
    let lift_bar = |u: &[C64]| -> Result<Vec<C64>> { Ok(lift(u)?.iter().map(|z| z.conj()).collect()) };
    let points = total_points(point);
    let count = points.len() as f64;
    let mut holo = vec![c(0.0, 0.0); n];
    let mut anti = vec![c(0.0, 0.0); n];
    for u in points {
        let a = lift(&u)?;
        let mut vbar_a = wirtinger(&lift, &u, n, true)?;
        let mut v_abar = wirtinger(&lift_bar, &u, n, false)?;
        for al in 0..n {
            for (o, d) in vbar_a.iter_mut().zip(wirtinger(&lift, &u, al, true)?) {
                *o += a[al].conj() * d;
            }
            for (o, d) in v_abar.iter_mut().zip(wirtinger(&lift_bar, &u, al, false)?) {
                *o += a[al] * d;
            }
        }
        for k in 0..n {
            holo[k] -= vbar_a[k] / count;
            anti[k] += v_abar[k] / count;
        }
    }
    Ok((holo, anti))
}
