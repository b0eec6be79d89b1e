//! Scholarly-corpus client with an in-memory cache and a record/replay
//! fixture store.
//!
//! Fixture layout: one file per cache key, `<dir>/<sha256(key)[..24]>.json`,
//! holding `{"key": {...}, "body": "<verbatim backend body>"}`.

mod client;
mod http;
mod store;
mod types;

pub use client::{Corpus, CorpusMode, RetryPolicy};
pub use http::HttpCorpusBackend;
pub use store::{CacheKey, FixtureStore};
pub use types::{
    BackendRequest, CorpusFilter, CorpusQuery, EmbeddingVector, EmbeddingsBody, Endpoint,
    PapersBody, SnippetHit, SnippetsBody, WireAuthor, WireEmbedding, WirePaper, WireSnippet,
    IDEA_EMBEDDING_ID,
};

use async_trait::async_trait;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("corpus transport error (status {status:?}): {message}")]
    Transport { status: Option<u16>, message: String },
    #[error("corpus rate limited, retry after {retry_after_ms:?} ms")]
    RateLimited { retry_after_ms: Option<u64> },
    #[error("corpus returned no usable results")]
    EmptyResult,
    #[error("no embeddings for {missing:?}")]
    PartialResult { missing: Vec<String>, vectors: Vec<EmbeddingVector> },
    #[error("no replay fixture for {0}")]
    ReplayMiss(String),
    #[error("invalid corpus request: {0}")]
    InvalidRequest(String),
    #[error("malformed corpus response: {0}")]
    Malformed(String),
}

impl CorpusError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, CorpusError::Transport { .. } | CorpusError::RateLimited { .. })
    }
}

/// Anything that can answer raw corpus requests with a wire body.
#[async_trait]
pub trait CorpusBackend: Send + Sync {
    async fn fetch(&self, request: &BackendRequest) -> Result<String, CorpusError>;
}
