use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::state::{SessionEvent, SessionState, StateError};

/// Events between snapshots.
pub const SNAPSHOT_EVERY: u64 = 20;

pub const EVENTS_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
/// Current state, rewritten after every append.
pub const SESSION_FILE: &str = "session.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("no session at {0}")]
    Missing(PathBuf),
    #[error(transparent)]
    State(#[from] StateError),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// One session's directory: an append-only event log, a periodic snapshot
/// and a copy of the current state.
#[derive(Debug, Clone)]
pub struct SessionDir {
    dir: PathBuf,
}

impl SessionDir {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        SessionDir { dir: dir.into() }
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn exists(&self) -> bool {
        self.dir.join(EVENTS_FILE).is_file()
    }

    /// Appends `event`, which must already be applied to `state`.
    pub fn append(&self, event: &SessionEvent, state: &SessionState) -> Result<(), StoreError> {
        std::fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        let path = self.dir.join(EVENTS_FILE);
        let mut line = serde_json::to_string(event).expect("events serialize");
        line.push('\n');
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&path).map_err(io(&path))?;
        f.write_all(line.as_bytes()).map_err(io(&path))?;
        f.sync_data().map_err(io(&path))?;
        if state.revision.is_multiple_of(SNAPSHOT_EVERY) {
            self.write_json(SNAPSHOT_FILE, state)?;
        }
        self.write_json(SESSION_FILE, state)
    }

    fn write_json(&self, name: &str, state: &SessionState) -> Result<(), StoreError> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let body = serde_json::to_string_pretty(state).expect("state serializes");
        std::fs::write(&tmp, body).map_err(io(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(io(&path))
    }

    /// Rebuilds the state from the latest snapshot plus later events.
    /// A torn final line is ignored.
    pub fn load(&self) -> Result<SessionState, StoreError> {
        let path = self.dir.join(EVENTS_FILE);
        if !path.is_file() {
            return Err(StoreError::Missing(self.dir.clone()));
        }
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        let snap_path = self.dir.join(SNAPSHOT_FILE);
        let mut state: Option<SessionState> = if snap_path.is_file() {
            let body = std::fs::read_to_string(&snap_path).map_err(io(&snap_path))?;
            Some(serde_json::from_str(&body).map_err(|e| StoreError::Corrupt {
                path: snap_path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?)
        } else {
            None
        };
        let lines: Vec<&str> = text.lines().collect();
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let event: SessionEvent = match serde_json::from_str(line) {
                Ok(e) => e,
                Err(_) if i + 1 == lines.len() && !text.ends_with('\n') => break,
                Err(e) => return Err(StoreError::Corrupt { path, line: i + 1, message: e.to_string() }),
            };
            match &mut state {
                None => state = Some(SessionState::from_event(&event)?),
                Some(s) if event.revision <= s.revision => {}
                Some(s) => s.apply(&event)?,
            }
        }
        state.ok_or(StoreError::Missing(self.dir.clone()))
    }
}

/// A directory of session directories, one per session id.
#[derive(Debug, Clone)]
pub struct SessionStore {
    root: PathBuf,
}

impl SessionStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        SessionStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, session_id: &str) -> SessionDir {
        SessionDir::new(self.root.join(session_id))
    }

    /// Every session on disk.
    pub fn load_all(&self) -> Result<Vec<SessionState>, StoreError> {
        let Ok(entries) = std::fs::read_dir(&self.root) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_dir()).collect();
        dirs.sort();
        for d in dirs {
            let dir = SessionDir::new(d);
            if dir.exists() {
                out.push(dir.load()?);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::finder::{IdeationContext, Overarching};
    use crate::session::state::{EventKind, Mutation};

    fn created() -> (SessionState, SessionEvent) {
        let context = IdeationContext {
            topic: "t".into(),
            input_paper_ids: Vec::new(),
            very_near_ids: Vec::new(),
            analogous: BTreeMap::new(),
            summary: String::new(),
            overarching: Overarching { purpose: String::new(), mechanism: String::new() },
            queries: Vec::new(),
        };
        let event = SessionEvent {
            revision: 1,
            at: crate::session::fixed_epoch(),
            id_counter: 0,
            kind: EventKind::Created {
                session_id: "s-1".into(),
                topic: "t".into(),
                id_seed: 1,
                context: Box::new(context),
                papers: Vec::new(),
                facets: Vec::new(),
            },
        };
        (SessionState::from_event(&event).unwrap(), event)
    }

    #[test]
    fn torn_tail_is_ignored_and_order_is_enforced() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = SessionDir::new(tmp.path().join("s-1"));
        let (mut state, first) = created();
        dir.append(&first, &state).unwrap();
        let facet = crate::domain::validate_facet(
            crate::domain::FacetKind::Evaluation,
            "user study",
            "A study.",
            crate::domain::Provenance::UserAdded,
            &mut state.id_gen(),
        )
        .unwrap();
        let ev = state.commit(Mutation { kind: EventKind::FacetAdded { facet }, id_counter: 1 }, first.at).unwrap();
        dir.append(&ev, &state).unwrap();
        let mut f = std::fs::OpenOptions::new().append(true).open(dir.path().join(EVENTS_FILE)).unwrap();
        f.write_all(b"{\"revision\":3,\"at\"").unwrap();
        assert_eq!(dir.load().unwrap(), state);
        assert_eq!(state.revision, 2);
        let mut stale = state.clone();
        assert!(matches!(stale.apply(&ev), Err(StateError::OutOfOrder { at: 2, got: 2 })));
        assert!(SessionDir::new(tmp.path().join("none")).load().is_err());
    }
}
