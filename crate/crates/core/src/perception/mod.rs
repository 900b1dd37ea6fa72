//! Observations: the diffused scent field and the egocentric vision tensor.

mod geometry;
mod kernel;
mod scent;
mod vision;

pub use geometry::{fov_factor, fov_factor_egocentric, occlusion_factor};
pub use kernel::{DiffusionKernel, SPATIAL_EPSILON, TEMPORAL_EPSILON};
pub use scent::{scent_dense_reference, scent_from_events, DenseField, RetiredSource, ScentEvent, ScentLog};
pub use vision::{render_vision, VisionTensor};
