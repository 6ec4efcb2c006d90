//! Expansions of fiber functions in powers of a rational function `g`,
//! their radii of convergence, and the subharmonicity check on `-log R`.

mod expansion;
mod geometry;
mod lattice;
mod lift;
mod psh;
mod radius;

pub use crate::fiber::FiberFunction;
pub use expansion::{coefficients, evaluate_series, ExpansionConfig, ExpansionContext, HartogsExpansion, SeriesValue};
pub use geometry::{level_component, Geometry, KernelCoordinate, Piece, ReferenceCompact};
pub use lattice::ZLattice;
pub use lift::{lift_contour, LiftedContour, LiftedLoop};
pub use psh::{psh_check, PshReport, PshViolation, PSH_RADII};
pub use radius::{
    radius_at, radius_estimate, radius_field, radius_from_norms, radius_from_scaled, window_minimum, RadiusEstimate,
    RadiusField, RadiusFieldConfig, NOISE_FLOOR,
};
