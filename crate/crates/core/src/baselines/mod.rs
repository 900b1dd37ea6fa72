//! Reference agents: the greedy vision policy and a uniform random policy.

mod greedy;
mod random;

pub use greedy::{matches_ray, shortest_path, GreedyAgent, RAY_TOLERANCE};
pub use random::{random_action, RandomAgent};
