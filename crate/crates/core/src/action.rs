use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Action kinds as listed in a config's action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    MoveForward,
    TurnLeft,
    TurnRight,
    Collect,
    Drop,
    NoOp,
}

impl ActionKind {
    pub const MOVEMENT: [ActionKind; 3] = [ActionKind::MoveForward, ActionKind::TurnLeft, ActionKind::TurnRight];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::MoveForward => "MoveForward",
            ActionKind::TurnLeft => "TurnLeft",
            ActionKind::TurnRight => "TurnRight",
            ActionKind::Collect => "Collect",
            ActionKind::Drop => "Drop",
            ActionKind::NoOp => "NoOp",
        }
    }
}

/// A concrete agent action. `Drop` carries the item type index to drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "item")]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Collect,
    Drop(u32),
    NoOp,
}

impl Action {
    pub fn kind(self) -> ActionKind {
        match self {
            Action::MoveForward => ActionKind::MoveForward,
            Action::TurnLeft => ActionKind::TurnLeft,
            Action::TurnRight => ActionKind::TurnRight,
            Action::Collect => ActionKind::Collect,
            Action::Drop(_) => ActionKind::Drop,
            Action::NoOp => ActionKind::NoOp,
        }
    }

    /// Compact one-byte code used by save files and action logs.
    pub fn code(self) -> (u8, u32) {
        match self {
            Action::MoveForward => (0, 0),
            Action::TurnLeft => (1, 0),
            Action::TurnRight => (2, 0),
            Action::Collect => (3, 0),
            Action::Drop(t) => (4, t),
            Action::NoOp => (5, 0),
        }
    }

    pub fn from_code(code: u8, arg: u32) -> Option<Action> {
        Some(match code {
            0 => Action::MoveForward,
            1 => Action::TurnLeft,
            2 => Action::TurnRight,
            3 => Action::Collect,
            4 => Action::Drop(arg),
            5 => Action::NoOp,
            _ => return None,
        })
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Drop(t) => write!(f, "Drop:{t}"),
            other => f.write_str(other.kind().name()),
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "MoveForward" => Action::MoveForward,
            "TurnLeft" => Action::TurnLeft,
            "TurnRight" => Action::TurnRight,
            "Collect" => Action::Collect,
            "NoOp" => Action::NoOp,
            other => match other.strip_prefix("Drop:") {
                Some(t) => Action::Drop(t.parse().map_err(|_| format!("bad drop item `{t}`"))?),
                None => return Err(format!("unknown action `{other}`")),
            },
        })
    }
}
