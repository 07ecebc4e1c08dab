//! Experiment configuration, suite orchestration and reporting.

mod config;
mod report;
mod run;

use serde::{Deserialize, Serialize};

use crate::curvature::Evaluator;
use crate::error::{Error, Result};
use crate::family::frames::analytic_frame;

pub use config::{
    CharacterConfig, Complex, CurvatureSettings, Expectation, ExperimentConfig, FamilyConfig, IdentitySettings, MatrixConfig, OracleSettings,
    OutputPaths, ResolvedTolerances, Suite, Tolerances,
};
pub use report::{diff_reports, emit, render, Check, CheckDelta, Format, ReportDiff, RunReport, SuiteResult};
pub use run::{oracle_gap, relative_gap, run};

/// Reference configurations shipped with the crate, by name.
pub const BUNDLED: [(&str, &str); 5] = [
    ("elliptic_hodge", include_str!("../../configs/elliptic_hodge.toml")),
    ("abelian_surface_hodge", include_str!("../../configs/abelian_surface_hodge.toml")),
    ("theta_line", include_str!("../../configs/theta_line.toml")),
    ("theta_dual", include_str!("../../configs/theta_dual.toml")),
    ("character_flat", include_str!("../../configs/character_flat.toml")),
];

pub fn bundled(name: &str) -> Result<ExperimentConfig> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("no bundled config named `{name}`")))?;
    ExperimentConfig::from_toml(text)
}

/// Rank of H^{p,q} and the evaluators whose hypotheses hold there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidegreeSummary {
    pub bidegree: [usize; 2],
    pub rank: usize,
    pub evaluators: Vec<Evaluator>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub kind: String,
    pub dim: usize,
    pub base_point: Complex,
    pub kaehler_shift: f64,
    pub degree: Option<i32>,
    pub untwisted: bool,
    pub product: bool,
    pub end_valued: bool,
    pub geodesic_curvature: f64,
    pub bidegrees: Vec<BidegreeSummary>,
}

/// Structural facts about the configured family at its base point.
pub fn describe(config: &ExperimentConfig) -> Result<FamilySummary> {
    let family = config.family()?;
    let point = family.at(config.base_point())?;
    let n = point.dim();
    let mut bidegrees = Vec::new();
    for p in 0..=n {
        for q in 0..=n {
            let rank = match analytic_frame(&point, p, q) {
                Ok(frame) => frame.len(),
                Err(Error::RankZero { .. }) => 0,
                Err(e) => return Err(e),
            };
            let evaluators = if rank == 0 { Vec::new() } else { Evaluator::ALL.into_iter().filter(|ev| ev.applicability(&point, p, q).is_ok()).collect() };
            bidegrees.push(BidegreeSummary { bidegree: [p, q], rank, evaluators });
        }
    }
    Ok(FamilySummary {
        kind: config.family.kind_name().to_string(),
        dim: n,
        base_point: config.base_point,
        kaehler_shift: family.kaehler_shift(),
        degree: family.degree(),
        untwisted: family.is_untwisted(),
        product: family.is_product(),
        end_valued: family.end_valued(),
        geodesic_curvature: point.horizontal_data()?.geodesic_curvature,
        bidegrees,
    })
}
