use thiserror::Error;

/// Errors raised by the geometry, operator and evaluator layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("metric or period matrix is not positive definite: {0}")]
    NonPositiveMetric(String),
    #[error("automorphy factors are inconsistent: {0}")]
    InconsistentAutomorphy(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("bidegree out of range: {0}")]
    DegreeError(String),
    #[error("rank mismatch: {0}")]
    RankMismatch(String),
    #[error("iterative solve stalled after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDivergence { iterations: usize, residual: f64 },
    #[error("fiber degenerates at s = {0}")]
    DegenerateFiber(String),
    #[error("representative has no analytic s-dependence")]
    MissingSDerivative,
    #[error("direct image has rank zero in bidegree ({p},{q})")]
    RankZero { p: usize, q: usize },
    #[error("frame member is not harmonic: relative residual {residual:.3e}")]
    ProjectionResidual { residual: f64 },
    #[error("Gram matrix is ill-conditioned (condition number {condition:.3e})")]
    IllConditionedGram { condition: f64 },
    #[error("bundle is twisted; evaluator requires the trivial bundle")]
    NotUntwisted,
    #[error("argument of the inverse Laplacian has a harmonic component of relative size {leak:.3e}")]
    HarmonicLeak { leak: f64 },
    #[error("shift {shift} is within {distance:.3e} of a Laplacian eigenvalue")]
    SingularShift { shift: f64, distance: f64 },
    #[error("bundle curvature does not vanish on fibers")]
    NotFiberwiseFlat,
    #[error("Atiyah form is not fiberwise parallel (defect {defect:.3e})")]
    NotParallel { defect: f64 },
    #[error("family is not a product family")]
    NotProductFamily,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
