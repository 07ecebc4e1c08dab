//! Experiment configuration: a TOML document naming a family, a base point, bidegrees and the
//! suites to run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Backend, CharacterLine, FamilyDescriptor, FamilyKind, TauPath};
use crate::linalg::{c, CMat, C64};

/// A complex number written as `[re, im]`.
pub type Complex = [f64; 2];

fn complex(z: Complex) -> C64 {
    c(z[0], z[1])
}

/// A complex matrix, or a bare number for 1×1 matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixConfig {
    Scalar(Complex),
    Rows(Vec<Vec<Complex>>),
}

impl MatrixConfig {
    fn to_matrix(&self) -> Result<CMat> {
        match self {
            MatrixConfig::Scalar(z) => Ok(CMat::from_element(1, 1, complex(*z))),
            MatrixConfig::Rows(rows) => {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Config("matrices must be square and nonempty".into()));
                }
                Ok(CMat::from_fn(n, n, |i, j| complex(rows[i][j])))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterConfig {
    pub offset: Vec<Complex>,
    pub slope: Vec<Complex>,
}

/// Family kind and parameters; period paths are polynomial coefficient lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    ComplexStructure { tau: Vec<MatrixConfig> },
    CharacterPath {
        tau: MatrixConfig,
        characters: Vec<CharacterConfig>,
        #[serde(default)]
        end_bundle: bool,
    },
    Theta { degree: i32, tau: Vec<MatrixConfig> },
}

impl FamilyConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FamilyConfig::ComplexStructure { .. } => "complex_structure",
            FamilyConfig::CharacterPath { .. } => "character_path",
            FamilyConfig::Theta { .. } => "theta",
        }
    }

    fn to_kind(&self) -> Result<FamilyKind> {
        let path = |coefficients: &[MatrixConfig]| -> Result<TauPath> {
            TauPath::new(coefficients.iter().map(MatrixConfig::to_matrix).collect::<Result<_>>()?)
        };
        Ok(match self {
            FamilyConfig::ComplexStructure { tau } => FamilyKind::ComplexStructure { tau: path(tau)? },
            FamilyConfig::CharacterPath { tau, characters, end_bundle } => FamilyKind::CharacterPath {
                tau: tau.to_matrix()?,
                characters: characters
                    .iter()
                    .map(|l| CharacterLine { offset: l.offset.iter().map(|&z| complex(z)).collect(), slope: l.slope.iter().map(|&z| complex(z)).collect() })
                    .collect(),
                end_bundle: *end_bundle,
            },
            FamilyConfig::Theta { degree, tau } => FamilyKind::Theta { degree: *degree, tau: path(tau)? },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Curvature,
    Oracle,
    Wp,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Identities, Suite::Curvature, Suite::Oracle, Suite::Wp];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Curvature => "curvature",
            Suite::Oracle => "oracle",
            Suite::Wp => "wp",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Suite::Identities => "fiberwise operator identities on frame members and seeded random forms",
            Suite::Curvature => "every applicable curvature evaluator, pairwise agreement, symmetry, expectations and gauge invariance",
            Suite::Oracle => "finite-difference Chern curvature of the Gram matrix compared with the evaluators",
            Suite::Wp => "Weil-Petersson norm, its curvature and the flat-power curvature on product families",
        }
    }
}

/// Tolerances; unset entries take backend defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative disagreement between two evaluators.
    pub agreement: Option<f64>,
    /// Relative disagreement between an evaluator and the oracle, and the Richardson error.
    pub oracle: Option<f64>,
    pub hermitian: Option<f64>,
    pub bookkeeping: Option<f64>,
    /// Largest change of a report under the gauge term.
    pub gauge: Option<f64>,
    /// WP norm against the direct pairing.
    pub wp_norm: Option<f64>,
    /// Flat-power curvature, harmonicity and projection-drop defects.
    pub wp: Option<f64>,
    /// Relative defect of the Bochner-Kodaira-Nakano identity on random forms.
    pub bkn: Option<f64>,
}

/// Tolerances after defaults and the global scale are applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedTolerances {
    pub agreement: f64,
    pub oracle: f64,
    pub hermitian: f64,
    pub bookkeeping: f64,
    pub gauge: f64,
    pub wp_norm: f64,
    pub wp: f64,
    pub bkn: f64,
    pub scale: f64,
}

impl Tolerances {
    pub fn resolve(&self, backend: Backend, scale: f64) -> ResolvedTolerances {
        let grid = matches!(backend, Backend::Grid { .. });
        let pick = |value: Option<f64>, fourier: f64, grid_default: f64| scale * value.unwrap_or(if grid { grid_default } else { fourier });
        ResolvedTolerances {
            agreement: pick(self.agreement, 1e-7, 1e-3),
            oracle: pick(self.oracle, 1e-5, 1e-3),
            hermitian: pick(self.hermitian, 1e-10, 1e-10),
            bookkeeping: pick(self.bookkeeping, 1e-12, 1e-12),
            gauge: pick(self.gauge, 1e-8, 1e-8),
            wp_norm: pick(self.wp_norm, 1e-12, 1e-12),
            wp: pick(self.wp, 1e-10, 1e-10),
            bkn: pick(self.bkn, 1e-10, 5e-4),
            scale,
        }
    }

    fn validate(&self) -> Result<()> {
        let entries = [
            ("agreement", self.agreement),
            ("oracle", self.oracle),
            ("hermitian", self.hermitian),
            ("bookkeeping", self.bookkeeping),
            ("gauge", self.gauge),
            ("wp_norm", self.wp_norm),
            ("wp", self.wp),
            ("bkn", self.bkn),
        ];
        for (name, value) in entries {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("tolerance `{name}` must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}

/// A closed-form value of R/‖ψ‖² at a rank-one bidegree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub bidegree: [usize; 2],
    pub normalized: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySettings {
    /// Number of consecutive seeds starting at the run seed.
    #[serde(default = "one")]
    pub seeds: u64,
}

fn one() -> u64 {
    1
}

impl Default for IdentitySettings {
    fn default() -> Self {
        Self { seeds: 1 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureSettings {
    /// Kähler shifts β for the gauge-invariance checks.
    #[serde(default)]
    pub gauge: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSettings {
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    crate::oracle::DEFAULT_STEP
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { step: default_step() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub bidegrees: Vec<[usize; 2]>,
    pub base_point: Complex,
    #[serde(default)]
    pub kaehler_shift: f64,
    pub family: FamilyConfig,
    pub backend: Backend,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "unit_scale")]
    pub tolerance_scale: f64,
    #[serde(default)]
    pub expect: Vec<Expectation>,
    #[serde(default)]
    pub identities: IdentitySettings,
    #[serde(default)]
    pub curvature: CurvatureSettings,
    #[serde(default)]
    pub oracle: OracleSettings,
    #[serde(default)]
    pub output: OutputPaths,
    /// Records per-suite wall-clock time; reports are then no longer byte-reproducible.
    #[serde(default)]
    pub timing: bool,
}

fn unit_scale() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        if !(self.tolerance_scale > 0.0 && self.tolerance_scale.is_finite()) {
            return Err(Error::Config(format!("tolerance_scale must be positive, got {}", self.tolerance_scale)));
        }
        if !(self.oracle.step > 0.0 && self.oracle.step.is_finite()) {
            return Err(Error::Config(format!("oracle step must be positive, got {}", self.oracle.step)));
        }
        if self.identities.seeds == 0 {
            return Err(Error::Config("identities.seeds must be at least 1".into()));
        }
        for e in &self.expect {
            if !(e.tolerance > 0.0) {
                return Err(Error::Config(format!("expectation at {:?} needs a positive tolerance", e.bidegree)));
            }
        }
        let n = self.family().map_err(|e| Error::Config(format!("family: {e}")))?.dim();
        for &[p, q] in self.bidegrees.iter().chain(self.expect.iter().map(|e| &e.bidegree)) {
            if p > n || q > n {
                return Err(Error::Config(format!("bidegree ({p},{q}) exceeds fiber dimension {n}")));
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Result<FamilyDescriptor> {
        FamilyDescriptor::new(self.family.to_kind()?, self.backend, self.kaehler_shift, complex(self.base_point))
    }

    pub fn base_point(&self) -> C64 {
        complex(self.base_point)
    }
}
