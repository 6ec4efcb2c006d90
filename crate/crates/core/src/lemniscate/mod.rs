//! Rational functions with a single zero at the origin, certified
//! components of their sublevel sets, boundary contours, and the
//! constructor of lemniscates that hold a compact and avoid a finite set.

mod construct;
mod contour;
mod family;
mod rational;
mod region;

pub use construct::{
    lemma2_construct, lemma2_construct_certified, verify_construction, Construction, Disk, Verification,
    DEFAULT_DEPTH,
};
pub use contour::{boundary_contour, Contour};
pub use family::{enumerate_family, shape_key};
pub use rational::{GaussRational, RationalFunction, RationalSpec};
pub use region::{
    auto_half_width, component_region, component_region_with, exterior_bound, modulus_bounds, BoundingBox, Cell,
    CellClass, Lemniscate, Membership, RefinePredicate, RegionOptions,
};
