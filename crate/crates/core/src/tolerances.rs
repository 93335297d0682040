//! Default numerical tolerances. Each value is part of the public contract;
//! callers may override them through [`Tolerances`].

/// Maximum entry-wise deviation of `u u^†` from the identity.
pub const UNITARITY: f64 = 1e-12;
/// Zero threshold used when tagging the algebraic form of a boundary unitary.
pub const FORM_TAG: f64 = 1e-12;
/// Default grid size on each interval (endpoints included).
pub const DEFAULT_NX: usize = 2001;
/// Accuracy order of the one-sided endpoint stencils.
pub const STENCIL_ACCURACY: usize = 6;
/// Shift of the matrix-logarithm branch cut away from -pi.
pub const LOG_BRANCH_SHIFT: f64 = 1e-6;
/// Secular scan step in k.
pub const ROOT_SCAN_STEP: f64 = 0.01;
/// Root refinement target |dk|.
pub const ROOT_REFINE: f64 = 1e-12;
/// Singular values below this times ||M||_2 count toward the kernel.
pub const KERNEL_REL: f64 = 1e-8;
/// Eigenvalues closer than this are merged into one level.
pub const LEVEL_MERGE: f64 = 1e-9;
/// Relative tolerance for endpoint-density matching.
pub const GLUING_REL: f64 = 1e-5;
/// Slope threshold of the series convergence test: slope < -1 - margin.
pub const CONVERGENCE_MARGIN: f64 = 0.1;
/// Point-merging distance in joint spectra.
pub const POINT_MERGE: f64 = 1e-8;
/// Eigenvalue clustering threshold for measurement projectors.
pub const PROJECTOR_CLUSTER: f64 = 1e-9;

/// Runtime-overridable tolerance set.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub unitarity: f64,
    pub kernel_rel: f64,
    pub level_merge: f64,
    pub gluing_rel: f64,
    pub point_merge: f64,
    pub projector_cluster: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitarity: UNITARITY,
            kernel_rel: KERNEL_REL,
            level_merge: LEVEL_MERGE,
            gluing_rel: GLUING_REL,
            point_merge: POINT_MERGE,
            projector_cluster: PROJECTOR_CLUSTER,
        }
    }
}
