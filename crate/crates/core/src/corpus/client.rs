use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use tokio::sync::{Mutex, OnceCell};
use tracing::{debug, warn};

use super::store::{CacheKey, FixtureStore};
use super::types::*;
use super::{CorpusBackend, CorpusError};
use crate::domain::PaperRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusMode {
    Live,
    Replay,
    Record,
}

impl FromStr for CorpusMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(CorpusMode::Live),
            "replay" => Ok(CorpusMode::Replay),
            "record" => Ok(CorpusMode::Record),
            other => Err(format!("unknown corpus mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, base_delay: Duration::from_millis(500) }
    }
}

type Slot = Arc<OnceCell<String>>;

/// Cached, shareable corpus client.
pub struct Corpus {
    backend: Option<Arc<dyn CorpusBackend>>,
    store: Option<FixtureStore>,
    mode: CorpusMode,
    retry: RetryPolicy,
    cache: Mutex<HashMap<CacheKey, Slot>>,
}

impl Corpus {
    pub fn live(backend: Arc<dyn CorpusBackend>) -> Self {
        Self::build(Some(backend), None, CorpusMode::Live)
    }

    pub fn replay(store: FixtureStore) -> Self {
        Self::build(None, Some(store), CorpusMode::Replay)
    }

    pub fn record(backend: Arc<dyn CorpusBackend>, store: FixtureStore) -> Self {
        Self::build(Some(backend), Some(store), CorpusMode::Record)
    }

    fn build(backend: Option<Arc<dyn CorpusBackend>>, store: Option<FixtureStore>, mode: CorpusMode) -> Self {
        Corpus { backend, store, mode, retry: RetryPolicy::default(), cache: Mutex::new(HashMap::new()) }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn mode(&self) -> CorpusMode {
        self.mode
    }

    /// Raw body for a request, from cache, fixtures or the backend.
    pub async fn raw(&self, request: &BackendRequest) -> Result<String, CorpusError> {
        let key = CacheKey::for_request(request);
        let slot = {
            let mut cache = self.cache.lock().await;
            cache.entry(key.clone()).or_default().clone()
        };
        slot.get_or_try_init(|| self.resolve(&key, request)).await.cloned()
    }

    async fn resolve(&self, key: &CacheKey, request: &BackendRequest) -> Result<String, CorpusError> {
        match self.mode {
            CorpusMode::Replay => {
                let store = self.store.as_ref().expect("replay corpus has a store");
                store
                    .load(key)
                    .await?
                    .ok_or_else(|| CorpusError::ReplayMiss(format!("{:?} `{}`", key.endpoint, key.query)))
            }
            CorpusMode::Live => self.fetch_with_retry(request).await,
            CorpusMode::Record => {
                let body = self.fetch_with_retry(request).await?;
                self.store.as_ref().expect("record corpus has a store").save(key, &body).await?;
                Ok(body)
            }
        }
    }

    async fn fetch_with_retry(&self, request: &BackendRequest) -> Result<String, CorpusError> {
        let backend = self.backend.as_ref().expect("live corpus has a backend");
        let mut attempt = 0;
        loop {
            attempt += 1;
            match backend.fetch(request).await {
                Ok(body) => return Ok(body),
                Err(e) if e.is_retryable() && attempt < self.retry.attempts => {
                    let delay = match &e {
                        CorpusError::RateLimited { retry_after_ms: Some(ms) } => Duration::from_millis(*ms),
                        _ => self.retry.base_delay * 2u32.pow(attempt - 1),
                    };
                    warn!(attempt, ?delay, error = %e, "corpus request failed, retrying");
                    tokio::time::sleep(delay).await;
                }
                Err(e) => return Err(e),
            }
        }
    }

    async fn papers_body(&self, request: BackendRequest) -> Result<PapersBody, CorpusError> {
        let body = self.raw(&request).await?;
        serde_json::from_str(&body).map_err(|e| CorpusError::Malformed(e.to_string()))
    }

    /// Upstream over-fetch so that skipped records do not starve `limit`.
    fn upstream_limit(limit: usize) -> usize {
        (limit * 2).max(limit + 5).min(100)
    }

    fn usable(body: PapersBody, limit: usize) -> Result<Vec<PaperRecord>, CorpusError> {
        let mut seen = std::collections::HashSet::new();
        let records: Vec<PaperRecord> = body
            .data
            .into_iter()
            .filter_map(WirePaper::into_record)
            .filter(|r| seen.insert(r.corpus_id.clone()))
            .take(limit)
            .collect();
        if records.is_empty() {
            return Err(CorpusError::EmptyResult);
        }
        Ok(records)
    }

    pub async fn search_papers(&self, query: &CorpusQuery) -> Result<Vec<PaperRecord>, CorpusError> {
        if query.text.trim().is_empty() {
            return Err(CorpusError::InvalidRequest("empty query text".into()));
        }
        if query.limit == 0 {
            return Err(CorpusError::InvalidRequest("limit must be at least 1".into()));
        }
        let body = self
            .papers_body(BackendRequest {
                endpoint: Endpoint::Search,
                text: query.text.clone(),
                filter: Some(query.corpus_filter),
                limit: Self::upstream_limit(query.limit),
                ids: Vec::new(),
            })
            .await?;
        let out = Self::usable(body, query.limit);
        debug!(query = %query.text, filter = query.corpus_filter.as_str(), hits = out.as_ref().map(|v| v.len()).unwrap_or(0), "search");
        out
    }

    pub async fn fetch_related(&self, corpus_id: &str, limit: usize) -> Result<Vec<PaperRecord>, CorpusError> {
        if limit == 0 {
            return Err(CorpusError::InvalidRequest("limit must be at least 1".into()));
        }
        let body = self
            .papers_body(BackendRequest {
                endpoint: Endpoint::Related,
                text: String::new(),
                filter: None,
                limit: Self::upstream_limit(limit),
                ids: vec![corpus_id.to_string()],
            })
            .await?;
        Self::usable(body, limit)
    }

    /// Recommendations seeded by several papers, drawn from one corpus pool.
    /// Seeds never appear in the result.
    pub async fn fetch_similar(
        &self,
        seed_ids: &[String],
        pool: CorpusFilter,
        limit: usize,
    ) -> Result<Vec<PaperRecord>, CorpusError> {
        if seed_ids.is_empty() {
            return Err(CorpusError::InvalidRequest("no seed papers".into()));
        }
        if limit == 0 {
            return Err(CorpusError::InvalidRequest("limit must be at least 1".into()));
        }
        let body = self
            .papers_body(BackendRequest {
                endpoint: Endpoint::Related,
                text: String::new(),
                filter: Some(pool),
                limit: Self::upstream_limit(limit + seed_ids.len()),
                ids: seed_ids.to_vec(),
            })
            .await?;
        let seeds: std::collections::HashSet<&str> = seed_ids.iter().map(String::as_str).collect();
        let body = PapersBody { data: body.data.into_iter().filter(|p| !seeds.contains(p.paper_id.as_str())).collect() };
        Self::usable(body, limit)
    }

    /// Looks up papers by id. Unknown or abstract-less ids are dropped.
    pub async fn fetch_papers(&self, ids: &[String]) -> Result<Vec<PaperRecord>, CorpusError> {
        if ids.is_empty() {
            return Ok(Vec::new());
        }
        let body = self
            .papers_body(BackendRequest {
                endpoint: Endpoint::Papers,
                text: String::new(),
                filter: None,
                limit: ids.len(),
                ids: ids.to_vec(),
            })
            .await?;
        let by_id: HashMap<String, PaperRecord> = body
            .data
            .into_iter()
            .filter_map(WirePaper::into_record)
            .map(|r| (r.corpus_id.clone(), r))
            .collect();
        let mut seen = std::collections::HashSet::new();
        Ok(ids
            .iter()
            .filter(|id| seen.insert(id.as_str()))
            .filter_map(|id| by_id.get(id).cloned())
            .collect())
    }

    pub async fn get_paper(&self, id: &str) -> Result<PaperRecord, CorpusError> {
        self.fetch_papers(&[id.to_string()]).await?.pop().ok_or(CorpusError::EmptyResult)
    }

    pub async fn search_snippets(&self, idea_text: &str, limit: usize) -> Result<Vec<SnippetHit>, CorpusError> {
        if idea_text.trim().is_empty() {
            return Err(CorpusError::InvalidRequest("empty idea text".into()));
        }
        let body = self
            .raw(&BackendRequest {
                endpoint: Endpoint::Snippets,
                text: idea_text.to_string(),
                filter: None,
                limit,
                ids: Vec::new(),
            })
            .await?;
        let body: SnippetsBody = serde_json::from_str(&body).map_err(|e| CorpusError::Malformed(e.to_string()))?;
        let hits = collapse_snippets(body.data);
        if hits.is_empty() {
            return Err(CorpusError::EmptyResult);
        }
        Ok(hits)
    }

    /// One vector per resolvable id followed by the idea vector. Missing ids
    /// yield `PartialResult`, which still carries every vector found.
    pub async fn fetch_embeddings(&self, ids: &[String], idea_text: &str) -> Result<Vec<EmbeddingVector>, CorpusError> {
        if ids.is_empty() {
            return Err(CorpusError::InvalidRequest("no ids to embed".into()));
        }
        let body = self
            .raw(&BackendRequest {
                endpoint: Endpoint::Embeddings,
                text: idea_text.to_string(),
                filter: None,
                limit: ids.len(),
                ids: ids.to_vec(),
            })
            .await?;
        let body: EmbeddingsBody = serde_json::from_str(&body).map_err(|e| CorpusError::Malformed(e.to_string()))?;
        let found: HashMap<String, Vec<f64>> = body
            .data
            .into_iter()
            .filter_map(|e| Some((e.paper_id, e.embedding?)))
            .filter(|(_, v)| v.iter().all(|x| x.is_finite()) && !v.is_empty())
            .collect();
        let idea = body
            .query_embedding
            .ok_or_else(|| CorpusError::Malformed("missing idea embedding".into()))?;
        let mut vectors = Vec::new();
        let mut missing = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for id in ids.iter().filter(|id| seen.insert(id.as_str())) {
            match found.get(id) {
                Some(v) if v.len() == idea.len() => {
                    vectors.push(EmbeddingVector { corpus_id: id.clone(), values: v.clone() })
                }
                _ => missing.push(id.clone()),
            }
        }
        vectors.push(EmbeddingVector { corpus_id: IDEA_EMBEDDING_ID.into(), values: idea });
        if missing.is_empty() {
            Ok(vectors)
        } else {
            Err(CorpusError::PartialResult { missing, vectors })
        }
    }
}

/// Maps snippets to papers, keeping each paper's best score and the order of
/// first appearance among the best-scoring entries.
fn collapse_snippets(data: Vec<WireSnippet>) -> Vec<SnippetHit> {
    let mut best: BTreeMap<String, (usize, SnippetHit)> = BTreeMap::new();
    for (rank, s) in data.into_iter().enumerate() {
        if !s.score.is_finite() {
            continue;
        }
        let hit = SnippetHit { corpus_id: s.paper_id.clone(), snippet_text: s.text, score: s.score };
        match best.get(&s.paper_id) {
            Some((_, existing)) if existing.score >= hit.score => {}
            Some((r, _)) => {
                let r = *r;
                best.insert(s.paper_id, (r, hit));
            }
            None => {
                best.insert(s.paper_id, (rank, hit));
            }
        }
    }
    let mut hits: Vec<(usize, SnippetHit)> = best.into_values().collect();
    hits.sort_by_key(|(r, _)| *r);
    hits.into_iter().map(|(_, h)| h).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use async_trait::async_trait;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Canned {
        calls: AtomicUsize,
        failures: usize,
        body: String,
    }

    #[async_trait]
    impl CorpusBackend for Canned {
        async fn fetch(&self, _: &BackendRequest) -> Result<String, CorpusError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                return Err(CorpusError::Transport { status: Some(503), message: "busy".into() });
            }
            Ok(self.body.clone())
        }
    }

    fn canned(failures: usize, body: &str) -> Arc<Canned> {
        Arc::new(Canned { calls: AtomicUsize::new(0), failures, body: body.into() })
    }

    fn fast(backend: Arc<Canned>) -> Corpus {
        Corpus::live(backend).with_retry(RetryPolicy { attempts: 3, base_delay: Duration::from_millis(1) })
    }

    const TWO: &str = r#"{"data":[
        {"paperId":"p0","title":"No abstract","abstract":null},
        {"paperId":"p1","title":"One","abstract":"A."},
        {"paperId":"p2","title":"Two","abstract":"B."},
        {"paperId":"p3","title":"Three","abstract":"C."}]}"#;

    #[tokio::test]
    async fn skips_records_without_abstract() {
        let corpus = fast(canned(0, TWO));
        let got = corpus.search_papers(&CorpusQuery::new("q", CorpusFilter::AllCs, 2)).await.unwrap();
        let ids: Vec<_> = got.iter().map(|r| r.corpus_id.as_str()).collect();
        assert_eq!(ids, ["p1", "p2"]);
    }

    #[tokio::test]
    async fn empty_body_is_empty_result() {
        let corpus = fast(canned(0, r#"{"data":[]}"#));
        let err = corpus.search_papers(&CorpusQuery::new("q", CorpusFilter::Recent, 2)).await.unwrap_err();
        assert_eq!(err, CorpusError::EmptyResult);
    }

    #[tokio::test]
    async fn retries_then_succeeds_and_caches() {
        let backend = canned(2, TWO);
        let corpus = fast(backend.clone());
        let q = CorpusQuery::new("q", CorpusFilter::AllCs, 1);
        corpus.search_papers(&q).await.unwrap();
        corpus.search_papers(&CorpusQuery::new("  Q ", CorpusFilter::AllCs, 1)).await.unwrap();
        assert_eq!(backend.calls.load(Ordering::SeqCst), 3);
    }

    #[tokio::test]
    async fn gives_up_after_three_attempts() {
        let backend = canned(5, TWO);
        let corpus = fast(backend.clone());
        let err = corpus.search_papers(&CorpusQuery::new("q", CorpusFilter::AllCs, 1)).await.unwrap_err();
        assert!(matches!(err, CorpusError::Transport { status: Some(503), .. }));
        assert_eq!(backend.calls.load(Ordering::SeqCst), 3);
    }

    #[tokio::test]
    async fn concurrent_identical_requests_fetch_once() {
        let backend = canned(0, TWO);
        let corpus = Arc::new(fast(backend.clone()));
        let q = CorpusQuery::new("same", CorpusFilter::AllCs, 2);
        let tasks: Vec<_> = (0..8)
            .map(|_| {
                let (c, q) = (corpus.clone(), q.clone());
                tokio::spawn(async move { c.search_papers(&q).await.unwrap() })
            })
            .collect();
        for t in tasks {
            t.await.unwrap();
        }
        assert_eq!(backend.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn snippets_collapse_to_best_score() {
        let hits = collapse_snippets(vec![
            WireSnippet { paper_id: "a".into(), text: "x".into(), score: 0.4 },
            WireSnippet { paper_id: "b".into(), text: "y".into(), score: 0.5 },
            WireSnippet { paper_id: "a".into(), text: "z".into(), score: 0.9 },
        ]);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].corpus_id, "a");
        assert_eq!(hits[0].snippet_text, "z");
    }

    #[tokio::test]
    async fn embeddings_report_missing_ids() {
        let body = r#"{"data":[{"paperId":"a","embedding":[1.0,0.0]},{"paperId":"b","embedding":null},
            {"paperId":"c","embedding":[0.0,1.0]}],"query_embedding":[1.0,1.0]}"#;
        let corpus = fast(canned(0, body));
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        match corpus.fetch_embeddings(&ids, "idea").await {
            Err(CorpusError::PartialResult { missing, vectors }) => {
                assert_eq!(missing, ["b"]);
                assert_eq!(vectors.len(), 3);
                assert!(vectors.last().unwrap().is_idea());
            }
            other => panic!("expected partial result, got {other:?}"),
        }
        assert!(matches!(corpus.fetch_embeddings(&[], "idea").await, Err(CorpusError::InvalidRequest(_))));
    }
}
