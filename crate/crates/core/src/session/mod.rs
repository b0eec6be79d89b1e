//! Persistent sessions: state, an append-only event log, and the engine
//! that turns requests into state changes.

mod engine;
mod state;
mod store;

pub use engine::{fixed_epoch, Clock, Engine, EngineConfig, EngineError, PaperInput, RunMode, MAX_INPUT_PAPERS};
pub use state::{EventKind, Mutation, SessionEvent, SessionState, StateError};
pub use store::{SessionDir, SessionStore, StoreError, EVENTS_FILE, SESSION_FILE, SNAPSHOT_EVERY, SNAPSHOT_FILE};
