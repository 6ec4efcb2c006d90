//! The continuation atlas over a family of rational functions, the singular
//! set left uncovered by it, and the end-to-end analyticity verdict.

mod atlas;
mod config;
mod pipeline;
mod probes;
mod singular_set;

pub use atlas::{
    base_level, build_atlas, build_slice, default_family, ContinuationAtlas, OverlapEntry, Slice, SliceOrigin,
};
pub use config::{EngineConfig, ProbeConfig};
pub use pipeline::{manifest, theorem_pipeline, Coverage, FiberInjection, PipelineInput, PipelineReport, Verdict};
pub use probes::{place_probes, Probe, ProbeSet};
pub use singular_set::{invert_chart, invert_points, singular_set, ProbeOutcome, SingularSetEstimate};
