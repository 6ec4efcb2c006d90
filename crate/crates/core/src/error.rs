use num_complex::Complex64;
use thiserror::Error;

use crate::lemniscate::RationalFunction;

/// Failure modes shared by every stage of the continuation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate polynomial: {0}")]
    DegeneratePolynomial(String),
    #[error("point {xi} is within clustering tolerance of a critical value")]
    AtCriticalPoint { xi: Complex64 },
    #[error("root solver did not converge (residual {residual:e})")]
    RootSolverDivergence { residual: f64 },
    #[error("path passes within {distance:e} of critical value {critical}")]
    PathHitsCritical { critical: Complex64, distance: f64 },
    #[error("branch tracking lost near xi = {xi}")]
    TrackingLost { xi: Complex64 },
    #[error("quadrature did not converge after {nodes} nodes (change {change:e})")]
    QuadratureNotConverged { nodes: usize, change: f64 },
    #[error("pole hit at {0}")]
    PoleHit(Complex64),
    #[error("lemniscate component escapes the bounding box (half-width {half_width})")]
    ComponentEscapesBox { half_width: f64 },
    #[error("boundary cover did not shrink by depth {depth}")]
    DepthExhausted { depth: u32 },
    #[error("level-curve tracing stalled near {0}")]
    TracingStalled(Complex64),
    #[error("lemniscate search budget of {budget} candidates exhausted")]
    BudgetExhausted {
        budget: usize,
        best: Option<Box<RationalFunction>>,
        best_score: f64,
    },
    #[error("pole of the expansion kernel on the integration contour")]
    PoleOnContour,
    #[error("point lies outside the convergence lemniscate (|g| = {modulus}, limit {limit})")]
    OutsideLemniscate { modulus: f64, limit: f64 },
    #[error("series tail could not be bounded below {0:e}")]
    TailNotBounded(f64),
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("empty compact set")]
    EmptySet,
    #[error("fibers have unequal sizes at {count} grid nodes")]
    RaggedFibers { count: usize, z_indices: Vec<usize> },
    #[error("ill-conditioned fit (condition number {0:e})")]
    IllConditionedFit(f64),
    #[error("the inversion pole 0 lies in the set")]
    OriginInSet,
    #[error("atlas overlap discrepancy {discrepancy:e} exceeds tolerance {tolerance:e}")]
    InconsistentAtlas { discrepancy: f64, tolerance: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
