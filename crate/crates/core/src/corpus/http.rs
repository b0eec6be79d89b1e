use async_trait::async_trait;
use serde::Deserialize;
use serde_json::{json, Value};

use super::types::*;
use super::{CorpusBackend, CorpusError};

const FIELDS: &str = "title,abstract,authors,venue,url,year";
pub const DEFAULT_BASE_URL: &str = "https://api.semanticscholar.org";
pub const DEFAULT_EMBED_URL: &str = "https://model-apis.semanticscholar.org/specter/v1/invoke";
/// Lower bound on publication year for the `recent` filter.
pub const RECENT_FROM_YEAR: i32 = 2022;

/// Backend for a Semantic Scholar style HTTP API.
pub struct HttpCorpusBackend {
    client: reqwest::Client,
    base_url: String,
    embed_url: String,
    api_key: Option<String>,
}

impl HttpCorpusBackend {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Self {
        HttpCorpusBackend {
            client: reqwest::Client::new(),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            embed_url: DEFAULT_EMBED_URL.to_string(),
            api_key,
        }
    }

    /// Reads `CORPUS_BASE_URL` and `CORPUS_API_KEY`.
    pub fn from_env() -> Self {
        let base = std::env::var("CORPUS_BASE_URL").unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        Self::new(base, std::env::var("CORPUS_API_KEY").ok().filter(|k| !k.is_empty()))
    }

    pub fn with_embed_url(mut self, url: impl Into<String>) -> Self {
        self.embed_url = url.into();
        self
    }

    fn authed(&self, req: reqwest::RequestBuilder) -> reqwest::RequestBuilder {
        match &self.api_key {
            Some(k) => req.header("x-api-key", k),
            None => req,
        }
    }

    async fn send(&self, req: reqwest::RequestBuilder) -> Result<Value, CorpusError> {
        let resp = self
            .authed(req)
            .send()
            .await
            .map_err(|e| CorpusError::Transport { status: None, message: e.to_string() })?;
        let status = resp.status();
        if status.as_u16() == 429 {
            let retry_after_ms = resp
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse::<u64>().ok())
                .map(|s| s * 1000);
            return Err(CorpusError::RateLimited { retry_after_ms });
        }
        if status.as_u16() == 404 {
            return Ok(json!({ "data": [] }));
        }
        if !status.is_success() {
            let message = resp.text().await.unwrap_or_default();
            return Err(CorpusError::Transport { status: Some(status.as_u16()), message });
        }
        resp.json().await.map_err(|e| CorpusError::Malformed(e.to_string()))
    }

    async fn batch(&self, ids: &[String], fields: &str) -> Result<Vec<Value>, CorpusError> {
        let url = format!("{}/graph/v1/paper/batch", self.base_url);
        let req = self.client.post(url).query(&[("fields", fields)]).json(&json!({ "ids": ids }));
        match self.send(req).await? {
            Value::Array(items) => Ok(items),
            _ => Ok(Vec::new()),
        }
    }
}

fn papers_from(items: &[Value]) -> PapersBody {
    PapersBody {
        data: items
            .iter()
            .filter(|v| !v.is_null())
            .filter_map(|v| serde_json::from_value::<WirePaper>(v.clone()).ok())
            .collect(),
    }
}

fn to_body<T: serde::Serialize>(body: &T) -> String {
    serde_json::to_string(body).expect("wire body serializes")
}

#[derive(Deserialize)]
struct UpstreamSnippet {
    snippet: UpstreamSnippetText,
    score: f64,
    paper: UpstreamSnippetPaper,
}

#[derive(Deserialize)]
struct UpstreamSnippetText {
    text: String,
}

#[derive(Deserialize)]
struct UpstreamSnippetPaper {
    #[serde(rename = "corpusId")]
    corpus_id: Value,
}

#[async_trait]
impl CorpusBackend for HttpCorpusBackend {
    async fn fetch(&self, request: &BackendRequest) -> Result<String, CorpusError> {
        match request.endpoint {
            Endpoint::Search => {
                let url = format!("{}/graph/v1/paper/search", self.base_url);
                let mut params = vec![
                    ("query", request.text.clone()),
                    ("limit", request.limit.to_string()),
                    ("fields", FIELDS.to_string()),
                    ("fieldsOfStudy", "Computer Science".to_string()),
                ];
                if request.filter == Some(CorpusFilter::Recent) {
                    params.push(("year", format!("{RECENT_FROM_YEAR}-")));
                }
                let v = self.send(self.client.get(url).query(&params)).await?;
                let items = v.get("data").and_then(Value::as_array).cloned().unwrap_or_default();
                Ok(to_body(&papers_from(&items)))
            }
            Endpoint::Related if request.filter.is_some() => {
                let url = format!("{}/recommendations/v1/papers", self.base_url);
                let pool = match request.filter {
                    Some(CorpusFilter::Recent) => "recent",
                    _ => "all-cs",
                };
                let params = [("from", pool.to_string()), ("limit", request.limit.to_string()), ("fields", FIELDS.to_string())];
                let req = self.client.post(url).query(&params).json(&json!({ "positivePaperIds": request.ids }));
                let v = self.send(req).await?;
                let items = v.get("recommendedPapers").and_then(Value::as_array).cloned().unwrap_or_default();
                Ok(to_body(&papers_from(&items)))
            }
            Endpoint::Related => {
                let id = request.ids.first().ok_or_else(|| CorpusError::InvalidRequest("no id".into()))?;
                let url = format!("{}/recommendations/v1/papers/forpaper/{id}", self.base_url);
                let params = [("limit", request.limit.to_string()), ("fields", FIELDS.to_string())];
                let v = self.send(self.client.get(url).query(&params)).await?;
                let items = v.get("recommendedPapers").and_then(Value::as_array).cloned().unwrap_or_default();
                Ok(to_body(&papers_from(&items)))
            }
            Endpoint::Papers => Ok(to_body(&papers_from(&self.batch(&request.ids, FIELDS).await?))),
            Endpoint::Snippets => {
                let url = format!("{}/graph/v1/snippet/search", self.base_url);
                let params = [("query", request.text.clone()), ("limit", request.limit.to_string())];
                let v = self.send(self.client.get(url).query(&params)).await?;
                let items = v.get("data").and_then(Value::as_array).cloned().unwrap_or_default();
                let data = items
                    .into_iter()
                    .filter_map(|i| serde_json::from_value::<UpstreamSnippet>(i).ok())
                    .map(|s| WireSnippet {
                        paper_id: match s.paper.corpus_id {
                            Value::String(s) => format!("CorpusId:{s}"),
                            other => format!("CorpusId:{other}"),
                        },
                        text: s.snippet.text,
                        score: s.score,
                    })
                    .collect();
                Ok(to_body(&SnippetsBody { data }))
            }
            Endpoint::Embeddings => {
                let items = self.batch(&request.ids, "embedding.specter_v2").await?;
                let data = items
                    .iter()
                    .filter(|v| !v.is_null())
                    .filter_map(|v| {
                        let paper_id = v.get("paperId")?.as_str()?.to_string();
                        let embedding = v
                            .pointer("/embedding/vector")
                            .and_then(|e| serde_json::from_value::<Vec<f64>>(e.clone()).ok());
                        Some(WireEmbedding { paper_id, embedding })
                    })
                    .collect();
                let payload = json!([{ "paper_id": IDEA_EMBEDDING_ID, "title": "", "abstract": request.text }]);
                let v = self.send(self.client.post(&self.embed_url).json(&payload)).await?;
                let query_embedding = v
                    .pointer("/preds/0/embedding")
                    .and_then(|e| serde_json::from_value::<Vec<f64>>(e.clone()).ok());
                Ok(to_body(&EmbeddingsBody { data, query_embedding }))
            }
        }
    }
}
