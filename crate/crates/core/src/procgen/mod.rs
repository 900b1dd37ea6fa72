//! Infinite map storage and procedural item generation.
//!
//! The map is a sparse set of `P x P` patches. A patch is *fixed* once it
//! has been sampled as the target of a generation request; patches created
//! only as sampling context around a target stay *speculative* and may be
//! re-sampled (or later fixed) by subsequent generation requests.

mod density;
mod generate;
mod map;
mod sampler;

pub use density::log_density;
pub use generate::{ensure_generated, generate_patch, patches_in_radius};
pub use map::{Item, Patch, PatchStatus, WorldMap};
pub use sampler::{mh_step, PatchSampler};
