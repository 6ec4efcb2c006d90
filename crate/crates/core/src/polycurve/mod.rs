//! Plane algebraic curves as ramified coverings of the xi-line.

mod critical;
mod curve;
mod derivative;
mod monodromy;
mod track;

pub use critical::{critical_points, CRITICAL_CLUSTER_TOL};
pub use curve::{AlgebraicCurve, BivariatePolynomial, BranchChart, CurvePoint, Irreducibility};
pub use derivative::curve_derivative;
pub use monodromy::{monodromy, monodromy_irreducible, MonodromyReport};
pub use track::PATH_SAFETY_MARGIN;
