//! Reward functions: a small composable language and time-varying schedules.

mod dsl;
mod schedule;

pub use dsl::{parse_reward, DslError, RewardExpr};
pub use schedule::{parse_schedule, RewardSchedule};

use crate::config::WorldConfig;
use crate::sim::AgentTransition;
use crate::Action;

/// A reward expression flattened against a config: every primitive is
/// linear, so a combination reduces to per-primitive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledReward {
    action: f64,
    collect: Vec<f64>,
    explore: f64,
}

impl CompiledReward {
    pub fn new(expr: &RewardExpr, config: &WorldConfig) -> Result<Self, DslError> {
        let mut out = CompiledReward { action: 0.0, collect: vec![0.0; config.item_count()], explore: 0.0 };
        out.add(expr, config)?;
        Ok(out)
    }

    fn add(&mut self, expr: &RewardExpr, config: &WorldConfig) -> Result<(), DslError> {
        match expr {
            RewardExpr::Action(v) => self.action += v,
            RewardExpr::Explore(v) => self.explore += v,
            RewardExpr::Collect(name, v) => {
                let t = config.item_index(name).ok_or_else(|| DslError::new(0, format!("unknown item type `{name}`")))?;
                self.collect[t] += v;
            }
            RewardExpr::Combined(a, b) => {
                self.add(a, config)?;
                self.add(b, config)?;
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: &AgentTransition) -> f64 {
        let mut r = 0.0;
        if t.action != Action::NoOp {
            r += self.action;
        }
        for (w, &n) in self.collect.iter().zip(&t.items_collected) {
            r += w * n as f64;
        }
        if t.distance_from_start > t.previous_distance_max {
            r += self.explore;
        }
        r
    }
}

/// Reward of `expr` for one transition: Action pays for any non-NoOp
/// action, Collect per item of its type collected, Explore whenever the
/// agent reaches a new maximum distance from its start, Combined the sum.
pub fn eval_reward(expr: &RewardExpr, transition: &AgentTransition, config: &WorldConfig) -> Result<f64, DslError> {
    Ok(match expr {
        RewardExpr::Action(v) => {
            if transition.action != Action::NoOp {
                *v
            } else {
                0.0
            }
        }
        RewardExpr::Collect(name, v) => {
            let t = config.item_index(name).ok_or_else(|| DslError::new(0, format!("unknown item type `{name}`")))?;
            v * transition.items_collected[t] as f64
        }
        RewardExpr::Explore(v) => {
            if transition.distance_from_start > transition.previous_distance_max {
                *v
            } else {
                0.0
            }
        }
        RewardExpr::Combined(a, b) => eval_reward(a, transition, config)? + eval_reward(b, transition, config)?,
    })
}
