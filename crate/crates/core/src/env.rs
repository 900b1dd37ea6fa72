//! Single-agent reinforcement-learning environments and parallel batches.
//!
//! There is no reset: an environment lives for exactly one episode that
//! never ends.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::WorldConfig;
use crate::error::SimError;
use crate::perception::VisionTensor;
use crate::reward::{CompiledReward, DslError, RewardSchedule};
use crate::sim::{AgentId, AgentTransition, Simulator};
use crate::Action;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("reward schedule: {0}")]
    Reward(#[from] DslError),
    #[error("expected {expected} actions, got {got}")]
    BatchSize { expected: usize, got: usize },
    #[error("entry {entry}: {source}")]
    Entry { entry: usize, source: SimError },
    #[error("an environment needs exactly one agent, simulator has {0}")]
    AgentCount(usize),
}

/// Which observation parts to compute after each step. Scent queries scan
/// every item within the kernel radius, so policies that ignore scent can
/// switch it off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationSpec {
    pub vision: bool,
    pub scent: bool,
}

impl ObservationSpec {
    pub const FULL: ObservationSpec = ObservationSpec { vision: true, scent: true };
    pub const VISION: ObservationSpec = ObservationSpec { vision: true, scent: false };
    pub const NONE: ObservationSpec = ObservationSpec { vision: false, scent: false };
}

impl Default for ObservationSpec {
    fn default() -> Self {
        Self::FULL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvObservation {
    pub vision: Option<VisionTensor>,
    pub scent: Option<Vec<f64>>,
    pub moved: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: EnvObservation,
    pub reward: f64,
    pub transition: AgentTransition,
}

/// A simulator with one agent, a reward schedule and the reward history.
#[derive(Debug)]
pub struct Environment {
    sim: Simulator,
    agent: AgentId,
    schedule: Arc<RewardSchedule>,
    compiled: Vec<CompiledReward>,
    spec: ObservationSpec,
    rewards: Vec<f64>,
}

impl Environment {
    pub fn new(config: WorldConfig, schedule: Arc<RewardSchedule>, spec: ObservationSpec) -> Result<Self, EnvError> {
        Self::from_simulator(Simulator::new(config), schedule, spec)
    }

    /// Wraps an existing simulator. An empty simulator gets a fresh agent.
    pub fn from_simulator(mut sim: Simulator, schedule: Arc<RewardSchedule>, spec: ObservationSpec) -> Result<Self, EnvError> {
        let agent = match sim.agent_count() {
            0 => sim.add_agent()?,
            1 => sim.agents().next().expect("one agent").id,
            n => return Err(EnvError::AgentCount(n)),
        };
        let compiled = schedule.stages().into_iter().map(|e| CompiledReward::new(e, sim.config())).collect::<Result<_, _>>()?;
        Ok(Environment { sim, agent, schedule, compiled, spec, rewards: Vec::new() })
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn into_simulator(self) -> Simulator {
        self.sim
    }

    pub fn agent_id(&self) -> AgentId {
        self.agent
    }

    pub fn schedule(&self) -> &RewardSchedule {
        &self.schedule
    }

    pub fn spec(&self) -> ObservationSpec {
        self.spec
    }

    pub fn time(&self) -> u64 {
        self.sim.time()
    }

    /// Rewards of every step taken through this environment, in order.
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn observe(&self) -> Result<EnvObservation, SimError> {
        let agent = self.sim.agent(self.agent).ok_or(SimError::UnknownAgent(self.agent))?;
        let vision = if self.spec.vision { Some(self.sim.vision(self.agent)?) } else { None };
        let scent = if self.spec.scent { Some(self.sim.scent_at(agent.position)?) } else { None };
        Ok(EnvObservation { vision, scent, moved: agent.last_moved })
    }

    /// Applies `action`, rewarding it with the schedule entry in force at
    /// the time the step began.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, SimError> {
        let before = self.sim.time();
        let transition = self
            .sim
            .request_action(self.agent, action)?
            .and_then(|mut ts| ts.pop())
            .expect("a single-agent barrier completes on every request");
        let reward = self.compiled[self.schedule.stage_at(before)].eval(&transition);
        self.rewards.push(reward);
        Ok(StepOutcome { observation: self.observe()?, reward, transition })
    }
}

/// Independent environments sharing a config and schedule; entry `i` is
/// seeded with `seed + i`.
#[derive(Debug)]
pub struct EnvBatch {
    entries: Vec<Environment>,
}

impl EnvBatch {
    pub fn new(config: &WorldConfig, schedule: RewardSchedule, size: usize, spec: ObservationSpec) -> Result<Self, EnvError> {
        let schedule = Arc::new(schedule);
        let entries = (0..size)
            .into_par_iter()
            .map(|i| Environment::new(config.clone().with_seed(config.seed.wrapping_add(i as u64)), schedule.clone(), spec))
            .collect::<Result<_, _>>()?;
        Ok(EnvBatch { entries })
    }

    pub fn from_entries(entries: Vec<Environment>) -> Self {
        EnvBatch { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Environment] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &Environment {
        &self.entries[i]
    }

    pub fn into_entries(self) -> Vec<Environment> {
        self.entries
    }

    pub fn observe(&self) -> Result<Vec<EnvObservation>, EnvError> {
        self.entries.iter().enumerate().map(|(entry, e)| e.observe().map_err(|source| EnvError::Entry { entry, source })).collect()
    }

    /// Steps every entry in parallel. All actions are validated first, so an
    /// invalid action leaves the whole batch untouched.
    pub fn step(&mut self, actions: &[Action]) -> Result<Vec<StepOutcome>, EnvError> {
        if actions.len() != self.entries.len() {
            return Err(EnvError::BatchSize { expected: self.entries.len(), got: actions.len() });
        }
        for (entry, (e, &a)) in self.entries.iter().zip(actions).enumerate() {
            e.sim.validate_action(a).map_err(|source| EnvError::Entry { entry, source })?;
        }
        let results: Vec<Result<StepOutcome, SimError>> =
            self.entries.par_iter_mut().zip(actions.par_iter()).map(|(e, &a)| e.step(a)).collect();
        results.into_iter().enumerate().map(|(entry, r)| r.map_err(|source| EnvError::Entry { entry, source })).collect()
    }
}
