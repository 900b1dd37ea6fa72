//! Protocol v1: JSON envelopes `{"v": 1, "id": n, "type": "...", "body": {...}}`.
//!
//! Clients send [`Request`]s; the server answers each request with exactly
//! one [`Reply`] carrying the same `id`, and pushes `observation` and
//! `step_done` messages with `id = 0`. Unknown fields are ignored.

use jbw_core::perception::VisionTensor;
use jbw_core::{Action, Direction, PatchCoord, Position};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PROTOCOL_VERSION: u32 = 1;

/// Largest number of patches a single map request may cover.
pub const MAX_MAP_PATCHES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<M> {
    pub v: u32,
    pub id: u64,
    #[serde(flatten)]
    pub message: M,
}

/// Inclusive rectangle in patch coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchRect {
    pub min: PatchCoord,
    pub max: PatchCoord,
}

impl PatchRect {
    /// Number of patches covered, `None` if the rectangle is inverted.
    pub fn area(&self) -> Option<u128> {
        if self.max.x < self.min.x || self.max.y < self.min.y {
            return None;
        }
        let w = (self.max.x as i128 - self.min.x as i128 + 1) as u128;
        let h = (self.max.y as i128 - self.min.y as i128 + 1) as u128;
        Some(w * h)
    }

    pub fn contains(&self, c: PatchCoord) -> bool {
        (self.min.x..=self.max.x).contains(&c.x) && (self.min.y..=self.max.y).contains(&c.y)
    }

    /// Patches in row-major order (south to north, west to east).
    pub fn coords(&self) -> impl Iterator<Item = PatchCoord> + '_ {
        (self.min.y..=self.max.y).flat_map(move |y| (self.min.x..=self.max.x).map(move |x| PatchCoord::new(x, y)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum Request {
    Hello {
        #[serde(default)]
        client: Option<String>,
    },
    /// Spawns a new agent, or with `claim` takes over an existing agent
    /// that no connected session owns.
    AddAgent {
        #[serde(default)]
        claim: Option<u64>,
    },
    RemoveAgent {
        agent_id: u64,
    },
    Act {
        agent_id: u64,
        action: Action,
    },
    GetMap {
        #[serde(flatten)]
        rect: PatchRect,
        #[serde(default)]
        scent: bool,
    },
    Subscribe {
        #[serde(flatten)]
        rect: PatchRect,
    },
    Unsubscribe {},
    /// Writes a save file named `name` in the server's save directory.
    Save {
        name: String,
    },
    Load {
        name: String,
    },
}

impl Request {
    pub fn type_name(&self) -> &'static str {
        match self {
            Request::Hello { .. } => "hello",
            Request::AddAgent { .. } => "add_agent",
            Request::RemoveAgent { .. } => "remove_agent",
            Request::Act { .. } => "act",
            Request::GetMap { .. } => "get_map",
            Request::Subscribe { .. } => "subscribe",
            Request::Unsubscribe {} => "unsubscribe",
            Request::Save { .. } => "save",
            Request::Load { .. } => "load",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub agent_id: u64,
    pub position: Position,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub position: Position,
    pub item_type: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchState {
    Fixed,
    Speculative,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchView {
    pub coord: PatchCoord,
    pub status: PatchState,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<ItemView>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agents: Vec<AgentView>,
    /// Row-major (south to north, west to east) per-cell scent vectors,
    /// present when requested and the surrounding region is generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scent: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisionView {
    pub range: u32,
    pub dims: usize,
    /// Egocentric, row-major: row 0 is farthest ahead, column 0 farthest left.
    pub data: Vec<f64>,
}

impl From<VisionTensor> for VisionView {
    fn from(v: VisionTensor) -> Self {
        VisionView { range: v.range, dims: v.dims, data: v.data }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationBody {
    pub agent_id: u64,
    pub time: u64,
    pub position: Position,
    pub direction: Direction,
    pub vision: VisionView,
    pub scent: Vec<f64>,
    pub moved: bool,
    pub collected: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
}

/// Machine-readable error codes.
pub mod codes {
    pub const MALFORMED: &str = "malformed";
    pub const VERSION: &str = "version";
    pub const NOT_OWNER: &str = "not-owner";
    pub const UNKNOWN_AGENT: &str = "unknown-agent";
    pub const DUPLICATE_ACTION: &str = "duplicate-action";
    pub const INVALID_ACTION: &str = "invalid-action";
    pub const SPAWN_FAILED: &str = "spawn-failed";
    pub const OVERSIZED_REGION: &str = "oversized-region";
    pub const BAD_NAME: &str = "bad-name";
    pub const PERSIST: &str = "persist";
    pub const INTERNAL: &str = "internal";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum Reply {
    Hello { version: u32, session_id: u64, time: u64, config_digest: String },
    AddAgent { agent_id: u64, position: Position, direction: Direction },
    RemoveAgent { agent_id: u64 },
    /// Acknowledges a queued action for the turn starting at `time`.
    Act { agent_id: u64, time: u64 },
    MapPatches { patches: Vec<PatchView> },
    Subscribe {
        #[serde(flatten)]
        rect: PatchRect,
    },
    Unsubscribe {},
    Save { name: String, time: u64, digest: String },
    Load { name: String, time: u64, digest: String },
    Observation(ObservationBody),
    /// Broadcast after every step. `dropped` counts broadcasts this session
    /// lost to backpressure so far.
    StepDone { time: u64, agents: Vec<AgentView>, dropped: u64 },
    Error { code: String, message: String },
}

impl Reply {
    pub fn error(code: &str, message: impl Into<String>) -> Self {
        Reply::Error { code: code.to_string(), message: message.into() }
    }
}

pub fn encode<M: Serialize>(id: u64, message: &M) -> String {
    serde_json::to_string(&Envelope { v: PROTOCOL_VERSION, id, message }).expect("protocol messages serialize")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeError {
    /// Correlation id, when the frame had a readable one.
    pub id: u64,
    pub code: &'static str,
    pub message: String,
}

/// Decodes one frame. A missing `body` is read as `{}`.
pub fn decode<M: for<'de> Deserialize<'de>>(frame: &str) -> Result<Envelope<M>, DecodeError> {
    let mut value: Value =
        serde_json::from_str(frame).map_err(|e| DecodeError { id: 0, code: codes::MALFORMED, message: e.to_string() })?;
    let obj = value.as_object_mut().ok_or(DecodeError { id: 0, code: codes::MALFORMED, message: "frame is not an object".into() })?;
    let id = obj.get("id").and_then(Value::as_u64).unwrap_or(0);
    match obj.get("v").and_then(Value::as_u64) {
        Some(v) if v == PROTOCOL_VERSION as u64 => {}
        other => {
            return Err(DecodeError { id, code: codes::VERSION, message: format!("unsupported protocol version {other:?}") });
        }
    }
    obj.entry("body").or_insert_with(|| Value::Object(Default::default()));
    serde_json::from_value(value).map_err(|e| DecodeError { id, code: codes::MALFORMED, message: e.to_string() })
}
