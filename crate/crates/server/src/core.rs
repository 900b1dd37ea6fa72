//! The single-writer server state machine. Transports feed it frames; it
//! mutates the simulator and queues outgoing frames per session.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use jbw_core::procgen::PatchStatus;
use jbw_core::reward::{CompiledReward, RewardSchedule};
use jbw_core::{AgentId, AgentTransition, Position, SimError, Simulator};
use tokio::sync::Notify;

use crate::protocol::{
    codes, decode, encode, AgentView, ItemView, ObservationBody, PatchRect, PatchState, PatchView, Reply, Request,
    MAX_MAP_PATCHES, PROTOCOL_VERSION,
};

pub type SessionId = u64;

#[derive(Debug)]
struct Frame {
    text: String,
    droppable: bool,
}

#[derive(Debug, Default)]
struct OutboxState {
    frames: VecDeque<Frame>,
    droppable: usize,
    dropped: u64,
    closed: bool,
}

/// Outgoing frames of one session. Replies and observations are never
/// dropped; beyond `capacity` queued broadcasts the oldest is discarded.
#[derive(Debug)]
pub struct Outbox {
    state: Mutex<OutboxState>,
    capacity: usize,
    notify: Notify,
}

impl Outbox {
    pub fn new(capacity: usize) -> Self {
        Outbox { state: Mutex::new(OutboxState::default()), capacity: capacity.max(1), notify: Notify::new() }
    }

    fn push(&self, text: String, droppable: bool) {
        let mut s = self.state.lock().expect("outbox lock");
        if s.closed {
            return;
        }
        if droppable {
            if s.droppable >= self.capacity {
                let oldest = s.frames.iter().position(|f| f.droppable).expect("counted broadcast present");
                s.frames.remove(oldest);
                s.droppable -= 1;
                s.dropped += 1;
            }
            s.droppable += 1;
        }
        s.frames.push_back(Frame { text, droppable });
        drop(s);
        self.notify.notify_one();
    }

    pub fn dropped(&self) -> u64 {
        self.state.lock().expect("outbox lock").dropped
    }

    /// Takes every queued frame.
    pub fn drain(&self) -> Vec<String> {
        let mut s = self.state.lock().expect("outbox lock");
        s.droppable = 0;
        s.frames.drain(..).map(|f| f.text).collect()
    }

    /// Marks the outbox so writers finish after flushing what is queued.
    pub fn close(&self) {
        self.state.lock().expect("outbox lock").closed = true;
        self.notify.notify_one();
    }

    pub fn is_closed(&self) -> bool {
        self.state.lock().expect("outbox lock").closed
    }

    /// Waits until frames are queued or the outbox is closed.
    pub async fn ready(&self) {
        loop {
            let notified = self.notify.notified();
            {
                let s = self.state.lock().expect("outbox lock");
                if !s.frames.is_empty() || s.closed {
                    return;
                }
            }
            notified.await;
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoreOptions {
    /// How long a disconnected session's agents keep blocking the turn
    /// before they are removed.
    pub grace: Duration,
    /// Per-session bound on queued broadcasts.
    pub broadcast_queue: usize,
    /// Directory for `save` and `load` requests.
    pub save_dir: PathBuf,
    /// When set, observations carry the reward of this schedule.
    pub schedule: Option<RewardSchedule>,
}

impl Default for CoreOptions {
    fn default() -> Self {
        CoreOptions { grace: Duration::from_secs(30), broadcast_queue: 64, save_dir: PathBuf::from("."), schedule: None }
    }
}

#[derive(Debug)]
struct Session {
    outbox: Arc<Outbox>,
    owned: BTreeSet<AgentId>,
    region: Option<PatchRect>,
    disconnected_at: Option<Instant>,
}

#[derive(Debug)]
pub struct ServerCore {
    sim: Simulator,
    options: CoreOptions,
    rewards: Vec<CompiledReward>,
    sessions: BTreeMap<SessionId, Session>,
    owners: BTreeMap<AgentId, SessionId>,
    next_session: SessionId,
}

impl ServerCore {
    pub fn new(sim: Simulator, options: CoreOptions) -> Result<Self, jbw_core::reward::DslError> {
        let rewards = match &options.schedule {
            Some(s) => s.stages().into_iter().map(|e| CompiledReward::new(e, sim.config())).collect::<Result<_, _>>()?,
            None => Vec::new(),
        };
        Ok(ServerCore { sim, options, rewards, sessions: BTreeMap::new(), owners: BTreeMap::new(), next_session: 1 })
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn into_simulator(self) -> Simulator {
        self.sim
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    /// Closes every session's outbox; used at shutdown.
    pub fn close_all(&mut self) {
        for s in self.sessions.values() {
            s.outbox.close();
        }
    }

    pub fn connect(&mut self) -> (SessionId, Arc<Outbox>) {
        let id = self.next_session;
        self.next_session += 1;
        let outbox = Arc::new(Outbox::new(self.options.broadcast_queue));
        self.sessions.insert(id, Session { outbox: outbox.clone(), owned: BTreeSet::new(), region: None, disconnected_at: None });
        (id, outbox)
    }

    /// The transport is gone. Sessions without agents vanish at once; the
    /// others linger for the grace period so a client can reclaim them.
    pub fn disconnect(&mut self, session: SessionId, now: Instant) {
        let Some(s) = self.sessions.get_mut(&session) else { return };
        if s.disconnected_at.is_some() {
            return;
        }
        s.outbox.close();
        s.region = None;
        if s.owned.is_empty() {
            self.sessions.remove(&session);
        } else {
            s.disconnected_at = Some(now);
        }
    }

    /// Removes agents of sessions disconnected for longer than the grace
    /// period.
    pub fn expire(&mut self, now: Instant) {
        let grace = self.options.grace;
        let expired: Vec<SessionId> = self
            .sessions
            .iter()
            .filter(|(_, s)| s.disconnected_at.is_some_and(|t| now.duration_since(t) >= grace))
            .map(|(&id, _)| id)
            .collect();
        for id in expired {
            let session = self.sessions.remove(&id).expect("listed");
            for agent in session.owned {
                self.owners.remove(&agent);
                if let Ok(Some(transitions)) = self.sim.remove_agent(agent) {
                    self.after_step(&transitions);
                }
            }
        }
    }

    fn send(&self, session: SessionId, id: u64, reply: &Reply) {
        if let Some(s) = self.sessions.get(&session) {
            s.outbox.push(encode(id, reply), false);
        }
    }

    /// Sends a server-side error (id 0) to a session.
    pub fn reject(&self, session: SessionId, code: &str, message: &str) {
        self.send(session, 0, &Reply::error(code, message));
    }

    /// Handles one inbound frame. Returns false when the session must be
    /// closed (malformed input).
    pub fn handle_frame(&mut self, session: SessionId, frame: &str) -> bool {
        match decode::<Request>(frame) {
            Ok(envelope) => {
                let reply = self.handle(session, envelope.id, envelope.message);
                if let Some(reply) = reply {
                    self.send(session, envelope.id, &reply);
                }
                true
            }
            Err(e) => {
                self.send(session, e.id, &Reply::error(e.code, e.message));
                false
            }
        }
    }

    fn agent_view(&self, id: AgentId) -> Option<AgentView> {
        self.sim.agent(id).map(|a| AgentView { agent_id: a.id, position: a.position, direction: a.direction })
    }

    /// The error reply when `session` may not act for `agent`.
    fn ownership_error(&self, session: SessionId, agent: AgentId) -> Option<Reply> {
        if self.sim.agent(agent).is_none() {
            return Some(Reply::error(codes::UNKNOWN_AGENT, format!("no agent {agent}")));
        }
        if self.owners.get(&agent) != Some(&session) {
            return Some(Reply::error(codes::NOT_OWNER, format!("agent {agent} is not owned by this session")));
        }
        None
    }

    /// Processes a request. `None` means the reply was already queued
    /// (acts that complete a turn are acknowledged before observations).
    fn handle(&mut self, session: SessionId, id: u64, request: Request) -> Option<Reply> {
        Some(match request {
            Request::Hello { .. } => Reply::Hello {
                version: PROTOCOL_VERSION,
                session_id: session,
                time: self.sim.time(),
                config_digest: self.sim.config().digest(),
            },
            Request::AddAgent { claim: None } => match self.sim.add_agent() {
                Ok(agent) => {
                    self.owners.insert(agent, session);
                    self.sessions.get_mut(&session).expect("live session").owned.insert(agent);
                    let v = self.agent_view(agent).expect("just added");
                    Reply::AddAgent { agent_id: agent, position: v.position, direction: v.direction }
                }
                Err(e) => Reply::error(codes::SPAWN_FAILED, e.to_string()),
            },
            Request::AddAgent { claim: Some(agent) } => {
                let Some(v) = self.agent_view(agent) else {
                    return Some(Reply::error(codes::UNKNOWN_AGENT, format!("no agent {agent}")));
                };
                let claimable = match self.owners.get(&agent) {
                    None => true,
                    Some(&owner) => owner == session || self.sessions.get(&owner).is_some_and(|s| s.disconnected_at.is_some()),
                };
                if !claimable {
                    return Some(Reply::error(codes::NOT_OWNER, format!("agent {agent} belongs to a connected session")));
                }
                if let Some(old) = self.owners.insert(agent, session) {
                    if let Some(s) = self.sessions.get_mut(&old) {
                        s.owned.remove(&agent);
                        if s.owned.is_empty() && s.disconnected_at.is_some() {
                            self.sessions.remove(&old);
                        }
                    }
                }
                self.sessions.get_mut(&session).expect("live session").owned.insert(agent);
                Reply::AddAgent { agent_id: agent, position: v.position, direction: v.direction }
            }
            Request::RemoveAgent { agent_id } => {
                if self.sim.agent(agent_id).is_none() {
                    return Some(Reply::error(codes::UNKNOWN_AGENT, format!("no agent {agent_id}")));
                }
                if self.owners.get(&agent_id).is_some_and(|&o| o != session) {
                    return Some(Reply::error(codes::NOT_OWNER, format!("agent {agent_id} is not owned by this session")));
                }
                self.owners.remove(&agent_id);
                self.sessions.get_mut(&session).expect("live session").owned.remove(&agent_id);
                match self.sim.remove_agent(agent_id) {
                    Ok(step) => {
                        self.send(session, id, &Reply::RemoveAgent { agent_id });
                        if let Some(transitions) = step {
                            self.after_step(&transitions);
                        }
                        return None;
                    }
                    Err(e) => Reply::error(codes::INTERNAL, e.to_string()),
                }
            }
            Request::Act { agent_id, action } => {
                if let Some(reply) = self.ownership_error(session, agent_id) {
                    return Some(reply);
                }
                let time = self.sim.time();
                match self.sim.request_action(agent_id, action) {
                    Ok(step) => {
                        self.send(session, id, &Reply::Act { agent_id, time });
                        if let Some(transitions) = step {
                            self.after_step(&transitions);
                        }
                        return None;
                    }
                    Err(SimError::DuplicateAction(_)) => {
                        Reply::error(codes::DUPLICATE_ACTION, format!("agent {agent_id} already acted this turn"))
                    }
                    Err(e) => Reply::error(codes::INVALID_ACTION, e.to_string()),
                }
            }
            Request::GetMap { rect, scent } => match rect.area() {
                Some(n) if n <= MAX_MAP_PATCHES as u128 => {
                    Reply::MapPatches { patches: rect.coords().map(|c| self.patch_view(c, scent)).collect() }
                }
                _ => Reply::error(codes::OVERSIZED_REGION, format!("a map request covers at most {MAX_MAP_PATCHES} patches")),
            },
            Request::Subscribe { rect } => {
                if rect.area().is_none() {
                    return Some(Reply::error(codes::MALFORMED, "empty subscription rectangle"));
                }
                self.sessions.get_mut(&session).expect("live session").region = Some(rect);
                Reply::Subscribe { rect }
            }
            Request::Unsubscribe {} => {
                self.sessions.get_mut(&session).expect("live session").region = None;
                Reply::Unsubscribe {}
            }
            Request::Save { name } => {
                let Some(path) = self.save_path(&name) else {
                    return Some(Reply::error(codes::BAD_NAME, "save names are plain file names"));
                };
                match self.sim.save_to(&path) {
                    Ok(()) => Reply::Save { name, time: self.sim.time(), digest: self.sim.digest() },
                    Err(e) => Reply::error(codes::PERSIST, e.to_string()),
                }
            }
            Request::Load { name } => {
                let Some(path) = self.save_path(&name) else {
                    return Some(Reply::error(codes::BAD_NAME, "save names are plain file names"));
                };
                match Simulator::load_from(&path) {
                    Ok(sim) => {
                        self.replace_simulator(sim);
                        Reply::Load { name, time: self.sim.time(), digest: self.sim.digest() }
                    }
                    Err(e) => Reply::error(codes::PERSIST, e.to_string()),
                }
            }
        })
    }

    fn save_path(&self, name: &str) -> Option<PathBuf> {
        let plain = !name.is_empty() && name != "." && name != ".." && !name.contains(['/', '\\']) && !name.contains('\0');
        plain.then(|| self.options.save_dir.join(name))
    }

    /// Swaps in a loaded world. Agents of the new world start unowned and
    /// can be claimed with `add_agent`.
    fn replace_simulator(&mut self, sim: Simulator) {
        self.sim = sim;
        self.owners.clear();
        self.sessions.retain(|_, s| s.disconnected_at.is_none());
        for s in self.sessions.values_mut() {
            s.owned.clear();
        }
        if let Some(schedule) = &self.options.schedule {
            self.rewards = schedule
                .stages()
                .into_iter()
                .map(|e| CompiledReward::new(e, self.sim.config()))
                .collect::<Result<_, _>>()
                .unwrap_or_default();
        }
    }

    fn patch_view(&self, coord: jbw_core::PatchCoord, with_scent: bool) -> PatchView {
        let map = self.sim.map();
        let p = map.patch_size();
        let Some(patch) = map.patch(coord) else {
            return PatchView { coord, status: PatchState::Absent, items: vec![], agents: vec![], scent: None };
        };
        if patch.status() == PatchStatus::Speculative {
            return PatchView { coord, status: PatchState::Speculative, items: vec![], agents: vec![], scent: None };
        }
        let items = patch.items().iter().map(|it| ItemView { position: it.position, item_type: it.item_type }).collect();
        let agents = self
            .sim
            .agents()
            .filter(|a| coord.contains(a.position, p))
            .map(|a| AgentView { agent_id: a.id, position: a.position, direction: a.direction })
            .collect();
        let scent = with_scent.then(|| self.patch_scent(coord)).flatten();
        PatchView { coord, status: PatchState::Fixed, items, agents, scent }
    }

    fn patch_scent(&self, coord: jbw_core::PatchCoord) -> Option<Vec<f64>> {
        let p = self.sim.map().patch_size() as i64;
        let origin = coord.origin(p as u32);
        let mut out = Vec::with_capacity((p * p) as usize * self.sim.config().scent_dims);
        for y in 0..p {
            for x in 0..p {
                out.extend(self.sim.scent_at(Position::new(origin.x + x, origin.y + y)).ok()?);
            }
        }
        Some(out)
    }

    fn after_step(&mut self, transitions: &[AgentTransition]) {
        let time = self.sim.time();
        for t in transitions {
            let Some(&owner) = self.owners.get(&t.agent_id) else { continue };
            let Some(session) = self.sessions.get(&owner) else { continue };
            let obs = match self.sim.observe(t.agent_id) {
                Ok(o) => o,
                Err(e) => {
                    session.outbox.push(encode(0, &Reply::error(codes::INTERNAL, e.to_string())), false);
                    continue;
                }
            };
            let reward = self.options.schedule.as_ref().map(|s| self.rewards[s.stage_at(time - 1)].eval(t));
            let body = ObservationBody {
                agent_id: t.agent_id,
                time,
                position: t.position,
                direction: t.direction,
                vision: obs.vision.into(),
                scent: obs.scent,
                moved: t.moved,
                collected: t.items_collected.clone(),
                reward,
            };
            session.outbox.push(encode(0, &Reply::Observation(body)), false);
        }
        let p = self.sim.map().patch_size();
        let all: Vec<AgentView> =
            self.sim.agents().map(|a| AgentView { agent_id: a.id, position: a.position, direction: a.direction }).collect();
        for s in self.sessions.values() {
            if s.disconnected_at.is_some() || (s.region.is_none() && s.owned.is_empty()) {
                continue;
            }
            let agents = match s.region {
                Some(r) => all.iter().filter(|a| r.contains(a.position.patch(p)) || s.owned.contains(&a.agent_id)).cloned().collect(),
                None => all.iter().filter(|a| s.owned.contains(&a.agent_id)).cloned().collect(),
            };
            s.outbox.push(encode(0, &Reply::StepDone { time, agents, dropped: s.outbox.dropped() }), true);
        }
    }
}
