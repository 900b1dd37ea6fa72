//! The turn-based simulator.
//!
//! Agents submit one action per turn; once every agent has an action
//! pending, all actions execute simultaneously and time advances by one.

mod persist;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::action::Action;
use crate::config::{CollisionPolicy, WorldConfig};
use crate::error::SimError;
use crate::geom::{Direction, PatchCoord, Position};
use crate::perception::{render_vision, DiffusionKernel, RetiredSource, ScentLog, VisionTensor};
use crate::procgen::{ensure_generated, Item, WorldMap};
use crate::rng::Pcg32;

pub use persist::{FORMAT_VERSION, MAGIC};

pub type AgentId = u64;

const SPAWN_ATTEMPTS: u32 = 10_000;
const COMPACT_EVERY: u64 = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub position: Position,
    pub direction: Direction,
    /// Spawn cell; the Explore reward measures distance from here.
    pub start: Position,
    /// Count per item type.
    pub inventory: Vec<u32>,
    pub pending: Option<Action>,
    pub distance_max: f64,
    /// Time at which the agent started emitting scent at its current cell.
    pub scent_since: u64,
    pub last_moved: bool,
}

/// Outcome of one step for one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTransition {
    pub agent_id: AgentId,
    pub action: Action,
    pub previous_position: Position,
    pub previous_direction: Direction,
    pub position: Position,
    pub direction: Direction,
    pub moved: bool,
    /// Count per item type collected this step.
    pub items_collected: Vec<u32>,
    /// Count per item type dropped this step.
    pub items_dropped: Vec<u32>,
    /// A drop was requested but the cell was occupied or the inventory empty.
    pub drop_failed: bool,
    /// Time after the step.
    pub time: u64,
    /// Distance from the spawn cell after the step, under the configured metric.
    pub distance_from_start: f64,
    /// The running maximum of that distance before this step.
    pub previous_distance_max: f64,
}

/// What an agent perceives at the current time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub vision: VisionTensor,
    pub scent: Vec<f64>,
    pub moved: bool,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    config: WorldConfig,
    kernel: Arc<DiffusionKernel>,
    map: WorldMap,
    agents: BTreeMap<AgentId, AgentState>,
    next_id: AgentId,
    time: u64,
    scent_log: ScentLog,
    rng: Pcg32,
    // agents with a pending action, in arrival order
    arrivals: Vec<AgentId>,
}

impl Simulator {
    pub fn new(config: WorldConfig) -> Self {
        let kernel = DiffusionKernel::cached(config.scent_decay, config.scent_diffusion);
        Simulator {
            map: WorldMap::new(config.patch_size),
            rng: Pcg32::from_seed(config.seed),
            config,
            kernel,
            agents: BTreeMap::new(),
            next_id: 0,
            time: 0,
            scent_log: ScentLog::new(),
            arrivals: Vec::new(),
        }
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn map(&self) -> &WorldMap {
        &self.map
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn rng(&self) -> &Pcg32 {
        &self.rng
    }

    pub fn kernel(&self) -> &DiffusionKernel {
        &self.kernel
    }

    pub fn scent_log(&self) -> &ScentLog {
        &self.scent_log
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentState> {
        self.agents.values()
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentState> {
        self.agents.get(&id)
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    /// Agents that have requested an action this turn, in arrival order.
    pub fn arrivals(&self) -> &[AgentId] {
        &self.arrivals
    }

    /// Chebyshev radius around each agent that is kept generated: the visual
    /// range or the scent kernel radius, whichever is larger.
    pub fn generation_radius(&self) -> i64 {
        (self.config.agent.visual_range as i64).max(self.kernel.radius())
    }

    /// Fixes every patch within Chebyshev `radius` of `center`; returns the
    /// newly fixed patches. Consumes the world RNG like agent-driven
    /// generation does.
    pub fn generate_around(&mut self, center: Position, radius: i64) -> Vec<PatchCoord> {
        ensure_generated(&mut self.map, center, radius, &mut self.rng, &self.config)
    }

    fn cell_blocked(&self, pos: Position) -> bool {
        self.map.item_at(pos).is_some_and(|it| self.config.item_types[it.item_type as usize].blocks_movement)
    }

    fn cell_has_agent(&self, pos: Position) -> bool {
        self.agents.values().any(|a| a.position == pos)
    }

    fn spawn_ok(&self, pos: Position) -> bool {
        !self.cell_blocked(pos) && (self.config.collision_policy == CollisionPolicy::AllowOverlap || !self.cell_has_agent(pos))
    }

    fn insert_agent(&mut self, position: Position, direction: Direction) -> AgentId {
        let id = self.next_id;
        self.next_id += 1;
        self.agents.insert(
            id,
            AgentState {
                id,
                position,
                direction,
                start: position,
                inventory: vec![0; self.config.item_count()],
                pending: None,
                distance_max: 0.0,
                scent_since: self.time,
                last_moved: false,
            },
        );
        let radius = self.generation_radius();
        ensure_generated(&mut self.map, position, radius, &mut self.rng, &self.config);
        id
    }

    /// Adds an agent facing north. The first agent spawns at the origin;
    /// later agents (and a first agent whose origin cell is unusable) spawn
    /// at a uniformly random free cell of the origin patch.
    pub fn add_agent(&mut self) -> Result<AgentId, SimError> {
        ensure_generated(&mut self.map, Position::ORIGIN, 0, &mut self.rng, &self.config);
        let mut position = Position::ORIGIN;
        if self.next_id != 0 || !self.spawn_ok(position) {
            let p = self.config.patch_size;
            let origin = PatchCoord::new(0, 0).origin(p);
            let mut found = None;
            for _ in 0..SPAWN_ATTEMPTS {
                let cell = self.rng.below(p * p) as i64;
                let candidate = Position::new(origin.x + cell % p as i64, origin.y + cell / p as i64);
                if self.spawn_ok(candidate) {
                    found = Some(candidate);
                    break;
                }
            }
            position = found.ok_or(SimError::SpawnFailed(SPAWN_ATTEMPTS))?;
        }
        Ok(self.insert_agent(position, Direction::North))
    }

    /// Places an agent at a chosen cell for scripted scenarios. The cell's
    /// surroundings are generated first; fails if the cell is unusable.
    pub fn spawn_agent_at(&mut self, position: Position, direction: Direction) -> Result<AgentId, SimError> {
        ensure_generated(&mut self.map, position, 0, &mut self.rng, &self.config);
        if !self.spawn_ok(position) {
            return Err(SimError::SpawnFailed(0));
        }
        Ok(self.insert_agent(position, direction))
    }

    /// Puts an item into a fixed patch for scripted scenarios; it starts
    /// emitting scent at the current time. Returns false if the cell is
    /// occupied or not yet fixed.
    pub fn place_item(&mut self, position: Position, item_type: u32) -> bool {
        if item_type as usize >= self.config.item_count() || !self.map.is_fixed(position.patch(self.config.patch_size)) {
            return false;
        }
        self.map.insert_item(Item::new(position, item_type, self.time))
    }

    /// Removes an agent; its lingering scent stays in the event log. If the
    /// remaining agents all have actions pending, the step executes.
    pub fn remove_agent(&mut self, id: AgentId) -> Result<Option<Vec<AgentTransition>>, SimError> {
        let agent = self.agents.remove(&id).ok_or(SimError::UnknownAgent(id))?;
        self.arrivals.retain(|&a| a != id);
        self.scent_log.retire(RetiredSource {
            position: agent.position,
            scent: self.config.agent.scent.clone(),
            start: agent.scent_since,
            end: self.time,
        });
        if !self.agents.is_empty() && self.arrivals.len() == self.agents.len() {
            return self.step().map(Some);
        }
        Ok(None)
    }

    pub fn validate_action(&self, action: Action) -> Result<(), SimError> {
        if !self.config.agent.allows(action.kind()) {
            return Err(SimError::ActionNotAllowed(action.to_string()));
        }
        if let Action::Drop(t) = action {
            if t as usize >= self.config.item_count() {
                return Err(SimError::ActionNotAllowed(action.to_string()));
            }
        }
        Ok(())
    }

    /// Records an action for this turn. When it completes the barrier, the
    /// step runs and its transitions are returned.
    pub fn request_action(&mut self, id: AgentId, action: Action) -> Result<Option<Vec<AgentTransition>>, SimError> {
        self.validate_action(action)?;
        let agent = self.agents.get_mut(&id).ok_or(SimError::UnknownAgent(id))?;
        if agent.pending.is_some() {
            return Err(SimError::DuplicateAction(id));
        }
        agent.pending = Some(action);
        self.arrivals.push(id);
        if self.arrivals.len() == self.agents.len() {
            return self.step().map(Some);
        }
        Ok(None)
    }

    fn try_collect(&mut self, id: AgentId, pos: Position, collected: &mut [u32]) {
        let Some(item) = self.map.fixed_item_at(pos).copied() else { return };
        let ty = &self.config.item_types[item.item_type as usize];
        let agent = self.agents.get_mut(&id).expect("agent exists");
        let meets = |need: &[u32]| need.iter().zip(&agent.inventory).all(|(n, have)| have >= n);
        if !meets(&ty.collect_requirements) || !meets(&ty.collect_costs) {
            return;
        }
        for (have, cost) in agent.inventory.iter_mut().zip(&ty.collect_costs) {
            *have -= cost;
        }
        agent.inventory[item.item_type as usize] += 1;
        collected[item.item_type as usize] += 1;
        self.map.remove_item(pos);
        self.scent_log.retire(RetiredSource { position: pos, scent: ty.scent.clone(), start: item.created_at, end: self.time + 1 });
    }

    /// Executes all pending actions simultaneously and advances time.
    pub fn step(&mut self) -> Result<Vec<AgentTransition>, SimError> {
        let waiting = self.agents.len() - self.arrivals.len();
        if waiting > 0 || self.agents.is_empty() {
            return Err(SimError::BarrierIncomplete(waiting));
        }
        let order = std::mem::take(&mut self.arrivals);
        let types = self.config.item_count();
        let mut transitions: BTreeMap<AgentId, AgentTransition> = BTreeMap::new();
        for &id in &order {
            let a = &self.agents[&id];
            transitions.insert(
                id,
                AgentTransition {
                    agent_id: id,
                    action: a.pending.expect("pending action"),
                    previous_position: a.position,
                    previous_direction: a.direction,
                    position: a.position,
                    direction: a.direction,
                    moved: false,
                    items_collected: vec![0; types],
                    items_dropped: vec![0; types],
                    drop_failed: false,
                    time: self.time + 1,
                    distance_from_start: 0.0,
                    previous_distance_max: a.distance_max,
                },
            );
        }

        // turns
        for &id in &order {
            let agent = self.agents.get_mut(&id).expect("agent exists");
            match agent.pending {
                Some(Action::TurnLeft) => agent.direction = agent.direction.turn_left(),
                Some(Action::TurnRight) => agent.direction = agent.direction.turn_right(),
                _ => {}
            }
        }

        // moves
        let policy = self.config.collision_policy;
        let mut movers: Vec<AgentId> = order.iter().copied().filter(|id| self.agents[id].pending == Some(Action::MoveForward)).collect();
        if policy == CollisionPolicy::RandomWinner {
            for i in (1..movers.len()).rev() {
                let j = self.rng.below(i as u32 + 1) as usize;
                movers.swap(i, j);
            }
        }
        let occupied: HashSet<Position> = self.agents.values().map(|a| a.position).collect();
        let mut claimed: HashSet<Position> = HashSet::new();
        let mut moved_to = Vec::new();
        for id in movers {
            let agent = &self.agents[&id];
            let target = agent.position + agent.direction.forward();
            if self.cell_blocked(target) {
                continue;
            }
            if policy != CollisionPolicy::AllowOverlap && (occupied.contains(&target) || !claimed.insert(target)) {
                continue;
            }
            moved_to.push((id, target));
        }
        for &(id, target) in &moved_to {
            let agent = self.agents.get_mut(&id).expect("agent exists");
            self.scent_log.retire(RetiredSource {
                position: agent.position,
                scent: self.config.agent.scent.clone(),
                start: agent.scent_since,
                end: self.time + 1,
            });
            agent.position = target;
            agent.scent_since = self.time + 1;
            transitions.get_mut(&id).expect("transition").moved = true;
        }

        // collection, then drops, in arrival order
        let auto = self.config.auto_collect();
        for &id in &order {
            let (action, pos, moved) = {
                let a = &self.agents[&id];
                (a.pending.expect("pending"), a.position, transitions[&id].moved)
            };
            let mut collected = vec![0; types];
            if (auto && moved) || (!auto && action == Action::Collect) {
                self.try_collect(id, pos, &mut collected);
            }
            transitions.get_mut(&id).expect("transition").items_collected = collected;
        }
        for &id in &order {
            let (action, pos) = {
                let a = &self.agents[&id];
                (a.pending.expect("pending"), a.position)
            };
            if let Action::Drop(t) = action {
                let has = self.agents[&id].inventory[t as usize] > 0;
                let tr = transitions.get_mut(&id).expect("transition");
                if has && self.map.item_at(pos).is_none() && self.map.insert_item(Item::new(pos, t, self.time + 1)) {
                    self.agents.get_mut(&id).expect("agent exists").inventory[t as usize] -= 1;
                    tr.items_dropped[t as usize] += 1;
                } else {
                    tr.drop_failed = true;
                }
            }
        }

        self.time += 1;
        if self.time.is_multiple_of(COMPACT_EVERY) {
            self.scent_log.compact(self.time, self.kernel.tau_max());
        }

        let metric = self.config.agent.explore_metric;
        for (&id, tr) in transitions.iter_mut() {
            let agent = self.agents.get_mut(&id).expect("agent exists");
            agent.pending = None;
            agent.last_moved = tr.moved;
            tr.position = agent.position;
            tr.direction = agent.direction;
            let d = agent.position - agent.start;
            tr.distance_from_start = metric.distance(d.x, d.y);
            agent.distance_max = agent.distance_max.max(tr.distance_from_start);
        }

        let radius = self.generation_radius();
        let positions: Vec<Position> = self.agents.values().map(|a| a.position).collect();
        for pos in positions {
            ensure_generated(&mut self.map, pos, radius, &mut self.rng, &self.config);
        }

        Ok(order.iter().map(|id| transitions.remove(id).expect("transition")).collect())
    }

    /// Scent vector at `pos` and the current time: all present items and
    /// agents plus lingering retired sources.
    pub fn scent_at(&self, pos: Position) -> Result<Vec<f64>, SimError> {
        let r = self.kernel.radius();
        let min = Position::new(pos.x - r, pos.y - r);
        let max = Position::new(pos.x + r, pos.y + r);
        if !self.map.region_fixed(min, max) {
            return Err(SimError::UngeneratedRegion(pos));
        }
        let kernel = &*self.kernel;
        let t = self.time;
        let mut out = vec![0.0; self.config.scent_dims];
        let side = r as usize + 1;
        let steady = kernel.quadrant(u64::MAX);
        let scents: Vec<Option<&[f64]>> =
            self.config.item_types.iter().map(|it| it.scent.iter().any(|&s| s != 0.0).then_some(it.scent.as_slice())).collect();
        for patch in self.map.fixed_patches_in(min, max) {
            for item in patch.items() {
                let Some(scent) = scents[item.item_type as usize] else { continue };
                let (ax, ay) = ((pos.x - item.position.x).unsigned_abs() as usize, (pos.y - item.position.y).unsigned_abs() as usize);
                if ax >= side || ay >= side || item.created_at > t {
                    continue;
                }
                let age = t - item.created_at;
                let w = if age > kernel.tau_max() { steady[ay * side + ax] } else { kernel.quadrant(age)[ay * side + ax] };
                for (o, s) in out.iter_mut().zip(scent) {
                    *o += w * s;
                }
            }
        }
        for agent in self.agents.values() {
            let (dx, dy) = (pos.x - agent.position.x, pos.y - agent.position.y);
            let w = kernel.value(t - agent.scent_since, dx, dy);
            if w != 0.0 {
                for (o, s) in out.iter_mut().zip(&self.config.agent.scent) {
                    *o += w * s;
                }
            }
        }
        self.scent_log.accumulate(kernel, pos, t, &mut out);
        Ok(out)
    }

    pub fn vision(&self, id: AgentId) -> Result<VisionTensor, SimError> {
        let agent = self.agents.get(&id).ok_or(SimError::UnknownAgent(id))?;
        let positions: Vec<Position> = self.agents.values().map(|a| a.position).collect();
        render_vision(&self.map, &self.config, &positions, agent.position, agent.direction)
    }

    pub fn observe(&self, id: AgentId) -> Result<Observation, SimError> {
        let agent = self.agents.get(&id).ok_or(SimError::UnknownAgent(id))?;
        Ok(Observation { vision: self.vision(id)?, scent: self.scent_at(agent.position)?, moved: agent.last_moved })
    }

    /// Hex SHA-256 of the canonical save encoding.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.save()))
    }
}
