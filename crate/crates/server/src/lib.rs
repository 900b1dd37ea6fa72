//! Serves a running simulator to agents, visualizers and human players.
//!
//! All simulator mutations go through one actor ([`ServerCore`]); each
//! session owns a bounded outbox, so slow readers never hold up a turn.
//! See `docs/protocol.md` for the message catalog.

pub mod core;
pub mod net;
pub mod protocol;

pub use crate::core::{CoreOptions, Outbox, ServerCore, SessionId};
pub use net::{serve, Endpoints, ServerHandle};
