//! Singular fibers: detection by Laurent probes, capacities of the fibers and
//! Weierstrass polynomial fits of their motion.

mod capacity;
mod fibers;
mod probe;
mod weierstrass;

pub use capacity::{capacity, capacity_field, transfinite_diameter, CapacityEstimate, CapacityOptions, CapacityReport, CompactSet};
pub use fibers::{FiberPoint, SingularFiberSet};
pub use probe::{
    chart_circle, laurent_probe, locate_singularity, pseudoconcavity_probe, LaurentProbe, DEFAULT_LAURENT_NODES,
    LAURENT_NOISE_FLOOR,
};
pub use weierstrass::{elementary_symmetric, weierstrass_fit, FitVerdict, WeierstrassFit, DEFAULT_MODEL_DEGREE, FIT_THRESHOLD};
