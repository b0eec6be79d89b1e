use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tracing::{debug, warn};

use super::parse::ParseError;
use super::request::{ChatMessage, LlmRequest};
use super::templates::render;
use super::LlmError;

/// Binding key that marks a corrective re-ask. Templates never read it, but
/// it gives the re-ask its own digest.
pub const REASK_BINDING: &str = "__reask";

/// A chat model. Receives both the typed request and its rendered messages.
#[async_trait]
pub trait LlmProvider: Send + Sync {
    async fn complete(&self, request: &LlmRequest, messages: &[ChatMessage]) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlmMode {
    Live,
    Replay,
    Record,
}

impl FromStr for LlmMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(LlmMode::Live),
            "replay" => Ok(LlmMode::Replay),
            "record" => Ok(LlmMode::Record),
            other => Err(format!("unknown llm mode `{other}`")),
        }
    }
}

/// One recorded exchange, stored as `<digest>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub digest: String,
    pub request: LlmRequest,
    pub messages: Vec<ChatMessage>,
    pub response: String,
}

#[derive(Debug, Clone)]
pub struct ReplayStore {
    dir: PathBuf,
}

impl ReplayStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub async fn load(&self, digest: &str) -> Result<Option<ReplayEntry>, LlmError> {
        let path = self.path(digest);
        match tokio::fs::read(&path).await {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| LlmError::Template(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(LlmError::Provider { status: None, message: format!("{}: {e}", path.display()) }),
        }
    }

    pub async fn save(&self, entry: &ReplayEntry) -> Result<(), LlmError> {
        let io = |e: std::io::Error| LlmError::Provider { status: None, message: e.to_string() };
        tokio::fs::create_dir_all(&self.dir).await.map_err(io)?;
        let mut json = serde_json::to_string_pretty(entry).expect("replay entry serializes");
        json.push('\n');
        tokio::fs::write(self.path(&entry.digest), json).await.map_err(io)
    }
}

/// Renders requests, routes them to a provider or replay store and parses answers.
pub struct LlmGateway {
    mode: LlmMode,
    provider: Option<Arc<dyn LlmProvider>>,
    store: Option<ReplayStore>,
    attempts: u32,
    base_delay: Duration,
    calls: AtomicUsize,
}

impl LlmGateway {
    pub fn live(provider: Arc<dyn LlmProvider>) -> Self {
        Self::build(LlmMode::Live, Some(provider), None)
    }

    pub fn replay(store: ReplayStore) -> Self {
        Self::build(LlmMode::Replay, None, Some(store))
    }

    pub fn record(provider: Arc<dyn LlmProvider>, store: ReplayStore) -> Self {
        Self::build(LlmMode::Record, Some(provider), Some(store))
    }

    fn build(mode: LlmMode, provider: Option<Arc<dyn LlmProvider>>, store: Option<ReplayStore>) -> Self {
        LlmGateway { mode, provider, store, attempts: 3, base_delay: Duration::from_millis(500), calls: AtomicUsize::new(0) }
    }

    pub fn with_retry(mut self, attempts: u32, base_delay: Duration) -> Self {
        self.attempts = attempts.max(1);
        self.base_delay = base_delay;
        self
    }

    pub fn mode(&self) -> LlmMode {
        self.mode
    }

    /// Number of answers obtained so far, replayed ones included.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    /// Raw answer text for a request.
    pub async fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        let mut messages = render(request)?;
        if let Some(Value::String(note)) = request.bindings.get(REASK_BINDING) {
            messages.push(ChatMessage::user(note.clone()));
        }
        let digest = request.digest();
        if self.mode == LlmMode::Replay {
            let store = self.store.as_ref().expect("replay gateway has a store");
            let entry = store
                .load(&digest)
                .await?
                .ok_or_else(|| LlmError::ReplayMiss(format!("{} {digest}", request.template_id)))?;
            self.calls.fetch_add(1, Ordering::Relaxed);
            return Ok(entry.response);
        }
        if self.mode == LlmMode::Record {
            if let Some(entry) = self.store.as_ref().unwrap().load(&digest).await? {
                self.calls.fetch_add(1, Ordering::Relaxed);
                return Ok(entry.response);
            }
        }
        let response = self.send(request, &messages).await?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        if let (LlmMode::Record, Some(store)) = (self.mode, &self.store) {
            let entry = ReplayEntry { digest, request: request.clone(), messages, response: response.clone() };
            store.save(&entry).await?;
        }
        Ok(response)
    }

    async fn send(&self, request: &LlmRequest, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let provider = self.provider.as_ref().expect("live gateway has a provider");
        let mut attempt = 0;
        loop {
            attempt += 1;
            match provider.complete(request, messages).await {
                Ok(text) if text.trim().is_empty() => return Err(LlmError::EmptyResponse),
                Ok(text) => return Ok(text),
                Err(e) if e.is_retryable() && attempt < self.attempts => {
                    let delay = self.base_delay * 2u32.pow(attempt - 1);
                    warn!(template = %request.template_id, attempt, error = %e, "retrying model call");
                    tokio::time::sleep(delay).await;
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Answer parsed with `parser`. A parse failure triggers one re-ask with
    /// a corrective note; a second failure is returned.
    pub async fn call<T>(
        &self,
        request: &LlmRequest,
        parser: impl Fn(&str) -> Result<T, ParseError>,
    ) -> Result<T, LlmError> {
        let raw = self.complete(request).await?;
        let err = match parser(&raw) {
            Ok(v) => return Ok(v),
            Err(e) => e,
        };
        debug!(template = %request.template_id, error = %err, "re-asking after parse failure");
        let retry = reask(request, &err);
        let raw = self.complete(&retry).await?;
        parser(&raw).map_err(LlmError::Parse)
    }
}

/// The corrective follow-up request for a failed parse.
pub fn reask(request: &LlmRequest, err: &ParseError) -> LlmRequest {
    let mut retry = request.clone();
    retry.bindings.insert(
        REASK_BINDING.to_string(),
        Value::String(format!(
            "Your previous answer could not be read ({err}). Answer again and follow the required answer format exactly."
        )),
    );
    retry
}
