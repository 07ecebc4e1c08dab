//! Discretizations carrying the sections of a bundle over one fiber.
//!
//! * Fourier: for each summand (character χ_i) the coefficients of e_{k} for the modes of a
//!   [`ModeSet`]; covariant derivatives are diagonal with symbols 2πi ξ(k+χ_i).
//! * Grid (curves only): samples on a [`QuasiGrid`]; covariant derivatives use 4th-order central
//!   differences with the automorphy phase applied across the y-boundary, plus the connection.
//!   The discrete operators satisfy D_α^† = −D̄_α exactly, so discrete Laplacians are hermitian.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundles::{chern_data, BundleData, BundleKind, ChernData};
use crate::error::{Error, Result};
use crate::geometry::{mode_set, FiberChart, ModeSet, QuasiGrid};
use crate::linalg::{c, C64};

static NEXT_SPACE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Debug)]
pub struct FourierSpace {
    cutoff: usize,
    summands: Vec<ModeSet>,
}

impl FourierSpace {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self, summand: usize) -> &ModeSet {
        &self.summands[summand]
    }
}

#[derive(Clone, Debug)]
pub struct GridSpace {
    grid: QuasiGrid,
    /// θ^{1,0}_z and θ^{0,1}_z̄ at each grid row y.
    connection_holo: Vec<C64>,
    connection_anti: Vec<C64>,
    holo_dx: C64,
    holo_dy: C64,
    anti_dx: C64,
    anti_dy: C64,
    /// exp(∓2πi d x) for each column x, applied when a stencil leaves [0,1) in y upward/downward.
    wrap_up: Vec<C64>,
    wrap_down: Vec<C64>,
}

impl GridSpace {
    pub fn grid(&self) -> &QuasiGrid {
        &self.grid
    }
}

#[derive(Clone, Debug)]
pub enum Discretization {
    Fourier(FourierSpace),
    Grid(GridSpace),
}

/// Self-describing backend tag used in reports and serialized forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendDescriptor {
    Fourier { cutoff: usize, modes: usize },
    Grid { resolution: usize, degree: i32 },
}

/// Raw coefficients of a discrete harmonic basis (kept without `Arc<FormSpace>` to avoid cycles).
#[derive(Clone, Debug)]
pub(crate) struct CachedBasis {
    pub forms: Vec<Vec<C64>>,
    pub eigenvalues: Vec<f64>,
    pub spurious: Vec<Vec<C64>>,
}

/// A fiber, a bundle on it, and a discretization of its sections.
#[derive(Debug)]
pub struct FormSpace {
    id: u64,
    fiber: FiberChart,
    bundle: BundleData,
    chern: ChernData,
    disc: Discretization,
    /// Discrete harmonic bases per bidegree.
    harmonic_cache: Mutex<HashMap<(usize, usize), CachedBasis>>,
}

impl FormSpace {
    pub fn fourier(fiber: FiberChart, bundle: BundleData, cutoff: usize) -> Result<Arc<Self>> {
        let shifts = bundle.shifts(fiber.dim())?;
        let summands = shifts.iter().map(|chi| mode_set(&fiber, cutoff, chi)).collect::<Result<Vec<_>>>()?;
        let chern = chern_data(&bundle, &fiber)?;
        Ok(Arc::new(Self {
            id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
            fiber,
            bundle,
            chern,
            disc: Discretization::Fourier(FourierSpace { cutoff, summands }),
            harmonic_cache: Mutex::new(HashMap::new()),
        }))
    }

    pub fn grid(fiber: FiberChart, bundle: BundleData, resolution: usize) -> Result<Arc<Self>> {
        if fiber.dim() != 1 {
            return Err(Error::Unsupported("grid backend is implemented on curves only".into()));
        }
        let degree = match bundle.kind() {
            BundleKind::Automorphy { degree } => *degree,
            BundleKind::Trivial | BundleKind::Character(_) => 0,
            BundleKind::CharacterSum(_) => return Err(Error::Unsupported("grid backend carries line bundles only".into())),
        };
        let grid = QuasiGrid::new(resolution, degree as f64)?;
        let chern = chern_data(&bundle, &fiber)?;
        let n = grid.resolution();
        let (connection_holo, connection_anti): (Vec<C64>, Vec<C64>) = (0..n)
            .map(|iy| {
                let (h, a) = chern.connection_at(0, iy as f64 / n as f64);
                (h[0], a[0])
            })
            .unzip();
        let tau = fiber.period()[(0, 0)];
        let diff = tau - tau.conj();
        let wrap_up = (0..n).map(|ix| grid.y_translation_phase(ix as f64 / n as f64, 1)).collect();
        let wrap_down = (0..n).map(|ix| grid.y_translation_phase(ix as f64 / n as f64, -1)).collect();
        Ok(Arc::new(Self {
            id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
            fiber,
            bundle,
            chern,
            disc: Discretization::Grid(GridSpace {
                grid,
                connection_holo,
                connection_anti,
                holo_dx: -tau.conj() / diff,
                holo_dy: C64::new(1.0, 0.0) / diff,
                anti_dx: tau / diff,
                anti_dy: -C64::new(1.0, 0.0) / diff,
                wrap_up,
                wrap_down,
            }),
            harmonic_cache: Mutex::new(HashMap::new()),
        }))
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn fiber(&self) -> &FiberChart {
        &self.fiber
    }

    pub fn bundle(&self) -> &BundleData {
        &self.bundle
    }

    pub fn chern(&self) -> &ChernData {
        &self.chern
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn dim(&self) -> usize {
        self.fiber.dim()
    }

    pub fn rank(&self) -> usize {
        self.bundle.rank()
    }

    pub(crate) fn cached_harmonic(&self, p: usize, q: usize) -> Option<CachedBasis> {
        self.harmonic_cache.lock().expect("harmonic cache poisoned").get(&(p, q)).cloned()
    }

    pub(crate) fn store_harmonic(&self, p: usize, q: usize, entry: CachedBasis) {
        self.harmonic_cache.lock().expect("harmonic cache poisoned").insert((p, q), entry);
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.disc, Discretization::Grid(_))
    }

    /// Number of stored values per field (modes or grid points).
    pub fn samples(&self) -> usize {
        match &self.disc {
            Discretization::Fourier(f) => f.summands[0].len(),
            Discretization::Grid(g) => g.grid.len(),
        }
    }

    pub fn descriptor(&self) -> BackendDescriptor {
        match &self.disc {
            Discretization::Fourier(f) => BackendDescriptor::Fourier { cutoff: f.cutoff, modes: f.summands[0].len() },
            Discretization::Grid(g) => BackendDescriptor::Grid { resolution: g.grid.resolution(), degree: g.grid.degree() },
        }
    }

    /// Weight turning a plain sum over samples into the mean over the unit torus.
    pub fn mean_weight(&self) -> f64 {
        match &self.disc {
            Discretization::Fourier(_) => 1.0,
            Discretization::Grid(g) => 1.0 / g.grid.len() as f64,
        }
    }

    /// Fiber integral of a(·)·conj(b(·)) for two fields (Parseval or trapezoid rule).
    pub fn field_inner(&self, a: &[C64], b: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            acc += x * y.conj();
        }
        acc * (self.fiber.volume() * self.mean_weight())
    }

    /// Field of the constant function `value` in `summand`; requires a zero character shift there.
    pub fn constant_field(&self, summand: usize, value: C64) -> Result<Vec<C64>> {
        let mut field = vec![C64::new(0.0, 0.0); self.samples()];
        match &self.disc {
            Discretization::Fourier(f) => {
                let modes = &f.summands[summand];
                if modes.shift().iter().any(|&x| x != 0.0) {
                    return Err(Error::Unsupported("constants are not sections of a twisted summand".into()));
                }
                field[modes.zero_index()] = value;
            }
            Discretization::Grid(g) => {
                if g.grid.degree() != 0 || !matches!(self.bundle.kind(), BundleKind::Trivial) {
                    return Err(Error::Unsupported("constants are not sections of a twisted bundle".into()));
                }
                field.iter_mut().for_each(|v| *v = value);
            }
        }
        Ok(field)
    }

    /// Samples a function of the real coordinates (grid backend only).
    pub fn sample(&self, f: impl Fn(f64, f64) -> C64 + Sync) -> Result<Vec<C64>> {
        match &self.disc {
            Discretization::Grid(g) => Ok((0..g.grid.len()).into_par_iter().map(|i| {
                let (x, y) = g.grid.point(i);
                f(x, y)
            }).collect()),
            Discretization::Fourier(_) => Err(Error::Unsupported("sampling requires the grid backend".into())),
        }
    }

    /// out += scale · D_α(input) for the holomorphic covariant derivative of `summand`.
    pub fn apply_holo(&self, alpha: usize, summand: usize, input: &[C64], out: &mut [C64], scale: C64) {
        match &self.disc {
            Discretization::Fourier(f) => {
                let modes = &f.summands[summand];
                let factor = c(0.0, 2.0 * PI) * scale;
                for (k, (o, v)) in out.iter_mut().zip(input).enumerate() {
                    *o += factor * modes.xi(k)[alpha] * v;
                }
            }
            Discretization::Grid(g) => g.derivative(input, out, g.holo_dx * scale, g.holo_dy * scale, &g.connection_holo, scale),
        }
    }

    /// out += scale · D̄_β(input).
    pub fn apply_anti(&self, beta: usize, summand: usize, input: &[C64], out: &mut [C64], scale: C64) {
        match &self.disc {
            Discretization::Fourier(f) => {
                let modes = &f.summands[summand];
                let factor = c(0.0, 2.0 * PI) * scale;
                for (k, (o, v)) in out.iter_mut().zip(input).enumerate() {
                    *o += factor * modes.xi(k)[beta].conj() * v;
                }
            }
            Discretization::Grid(g) => g.derivative(input, out, g.anti_dx * scale, g.anti_dy * scale, &g.connection_anti, scale),
        }
    }

    /// Eigenvalue of the componentwise Laplacian on mode `k` of `summand` (Fourier only).
    pub fn mode_eigenvalue(&self, summand: usize, k: usize) -> Option<f64> {
        match &self.disc {
            Discretization::Fourier(f) => {
                let xi = f.summands[summand].xi(k);
                let n = self.dim();
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..n {
                    for b in 0..n {
                        acc += self.fiber.raised(b, a) * xi[a] * xi[b].conj();
                    }
                }
                Some(4.0 * PI * PI * acc.re)
            }
            Discretization::Grid(_) => None,
        }
    }
}

const STENCIL: [(i64, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];

impl GridSpace {
    /// out += cx·∂_x f + cy·∂_y f + scale·conn(y)·f.
    fn derivative(&self, input: &[C64], out: &mut [C64], cx: C64, cy: C64, conn: &[C64], scale: C64) {
        let n = self.grid.resolution();
        let inv_h = n as f64;
        out.par_chunks_mut(n).enumerate().for_each(|(ix, row)| {
            for (iy, o) in row.iter_mut().enumerate() {
                let f0 = input[ix * n + iy];
                let mut dx = C64::new(0.0, 0.0);
                let mut dy = C64::new(0.0, 0.0);
                for &(m, w) in &STENCIL {
                    let jx = (ix as i64 + m).rem_euclid(n as i64) as usize;
                    dx += input[jx * n + iy] * w;
                    let jy = iy as i64 + m;
                    let v = if jy >= n as i64 {
                        input[ix * n + (jy - n as i64) as usize] * self.wrap_up[ix]
                    } else if jy < 0 {
                        input[ix * n + (jy + n as i64) as usize] * self.wrap_down[ix]
                    } else {
                        input[ix * n + jy as usize]
                    };
                    dy += v * w;
                }
                *o += (cx * dx + cy * dy) * inv_h + scale * conn[iy] * f0;
            }
        });
    }
}
