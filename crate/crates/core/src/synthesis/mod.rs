//! Cut-and-paste dataset synthesis.
//!
//! Objects are cut from annotated frames into a fake pool and a real pool;
//! the real pool is split by size. Each sample pastes N fakes and then N
//! reals onto a background, where N at or below the pool switch takes reals
//! from the large half and above it from the small half. Later pastes
//! occlude earlier ones, and labels are read off the final ownership map,
//! so instance masks are disjoint and their union is the semantic mask.

mod compose;
mod config;
mod cutout;
mod dataset;

pub use compose::{
    compose_sample, paste_cutouts, synthesize_sample, Composite, Paste, Placement, Pools, Provenance, RealPool,
    SynthesizedSample,
};
pub use config::SynthesisConfig;
pub use cutout::{extract_cutouts, partition_by_size, Cutout, CutoutKind};
pub use dataset::{cutouts_from, sample_seed, synthesize_dataset};
