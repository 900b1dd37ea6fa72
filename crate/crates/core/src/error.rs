use thiserror::Error;

use crate::geom::Position;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unsupported config version {0} (expected {expected})", expected = crate::config::CONFIG_VERSION)]
    Version(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown item type `{0}`")]
    UnknownItem(String),
    #[error("cannot parse function `{text}`: {reason}")]
    Function { text: String, reason: String },
    #[error("config json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("unknown agent {0}")]
    UnknownAgent(u64),
    #[error("agent {0} already has a pending action this turn")]
    DuplicateAction(u64),
    #[error("action {0} is not in the configured action space")]
    ActionNotAllowed(String),
    #[error("no unblocked spawn cell found after {0} attempts")]
    SpawnFailed(u32),
    #[error("observation at {0} reads ungenerated or speculative patches")]
    UngeneratedRegion(Position),
    #[error("{0} agent(s) have not requested an action this turn")]
    BarrierIncomplete(usize),
}

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("not a save file (bad magic)")]
    BadMagic,
    #[error("save format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checksum mismatch: save file is truncated or corrupt")]
    Checksum,
    #[error("malformed save payload: {0}")]
    Malformed(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
