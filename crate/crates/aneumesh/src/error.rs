//! Error types shared across the pipeline stages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("STL parse error at byte {offset}: {message}")]
    StlParse { offset: u64, message: String },

    #[error("empty surface: {0}")]
    EmptySurface(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("slice {slice} cut {loops} closed loops (expected exactly 1); bifurcating or open geometry is not supported")]
    MultiBranchSlice { slice: usize, loops: usize },

    #[error("slice {slice} is not star-shaped about its centroid: ray at angle {angle_deg:.2} deg missed the surface")]
    NonStarShapedSlice { slice: usize, angle_deg: f64 },

    #[error("wall self-intersection: inner radius {inner_radius:.4} mm <= 0 at slice {slice}, angle index {angle_index}")]
    WallSelfIntersection {
        slice: usize,
        angle_index: usize,
        inner_radius: f64,
    },

    #[error("adjacent ring overlap between slices {pairs:?}; increase slice count or smooth the centerline")]
    RingOverlap { pairs: Vec<(usize, usize)> },

    #[error("lumen radius {lumen:.4} mm >= wall inner radius {wall:.4} mm at slice {slice}, angle index {angle_index}")]
    LumenOutsideWall {
        slice: usize,
        angle_index: usize,
        lumen: f64,
        wall: f64,
    },

    #[error("non-positive tetrahedron produced from lattice cell {cell}; the annulus is too distorted, refine the lattice")]
    NonPositiveTet { cell: usize },

    #[error("boundary not closed: {dangling} dangling edges")]
    UnclosedBoundary { dangling: usize },

    #[error("smoothing rolled back at iteration {iteration}: element {element} would invert (scaled Jacobian {jacobian:.4})")]
    SmoothingRollback {
        iteration: usize,
        element: usize,
        jacobian: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum FemError {
    #[error("non-positive Jacobian during integration of element {element}")]
    NonPositiveJacobian { element: usize },

    #[error("inconsistent face winding: net pressure force |{net:.3e}| N on a closed surface (expected ~0)")]
    InconsistentWinding { net: f64 },

    #[error("solver did not converge in {iterations} iterations (relative residual {residual:.3e}); tail of residual history: {history_tail:?}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history_tail: Vec<f64>,
    },

    #[error("singular system: boundary conditions do not remove rigid-body modes ({0})")]
    RigidModes(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
