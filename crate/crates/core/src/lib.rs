//! Jelly Bean World: an infinite, procedurally generated grid world for
//! never-ending learning experiments.

pub mod action;
pub mod baselines;
pub mod bench;
pub mod config;
pub mod env;
pub mod error;
pub mod functions;
pub mod geom;
pub mod hash;
pub mod metrics;
pub mod perception;
pub mod presets;
pub mod reward;
pub mod procgen;
pub mod rng;
pub mod sim;
pub mod testing;

pub use action::{Action, ActionKind};
pub use config::WorldConfig;
pub use error::{ConfigError, PersistError, SimError};
pub use geom::{Direction, PatchCoord, Position};
pub use rng::Pcg32;
pub use sim::{AgentId, AgentState, AgentTransition, Observation, Simulator};
