use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not unitary: max |uu^† - 1| = {defect:.3e}")]
    NonUnitary { defect: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("root scan exhausted: found {found} of {wanted} eigenvalues below k = {k_max}")]
    RootScanExhausted { found: usize, wanted: usize, k_max: f64 },
    #[error("tolerance failure: {0}")]
    ToleranceFailure(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("grid too coarse: stencil needs {needed} points, grid has {available}")]
    GridTooCoarse { needed: usize, available: usize },
    #[error("ambiguous classification: gluing patterns {0:?} all pass")]
    AmbiguousClassification(Vec<String>),
    #[error("generators do not commute: max |[g_i, g_j]| = {defect:.3e} (generators {i}, {j})")]
    NotCommuting { i: usize, j: usize, defect: f64 },
    #[error("generator {index} is not normal: max |[g, g^†]| = {defect:.3e}")]
    NotNormal { index: usize, defect: f64 },
    #[error("matrix is not hermitian: defect {defect:.3e}")]
    NotHermitian { defect: f64 },
    #[error("degenerate fit: slope {slope}")]
    DegenerateFit { slope: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("eigenvalue {0} not found in spectrum")]
    EigenvalueNotFound(f64),
    #[error("state is not normalized: norm^2 = {0}")]
    UnnormalizedState(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
