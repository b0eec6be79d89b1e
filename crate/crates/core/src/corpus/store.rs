use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::types::{BackendRequest, CorpusFilter, Endpoint};
use super::CorpusError;

/// Normalized identity of a corpus request.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub endpoint: Endpoint,
    pub query: String,
    pub filter: Option<CorpusFilter>,
    pub limit: usize,
}

impl CacheKey {
    pub fn for_request(request: &BackendRequest) -> Self {
        let text = normalize(&request.text);
        let query = if request.ids.is_empty() {
            text
        } else {
            let mut ids = request.ids.clone();
            ids.sort();
            ids.dedup();
            if text.is_empty() {
                ids.join(",")
            } else {
                format!("{}|{}", ids.join(","), text)
            }
        };
        CacheKey { endpoint: request.endpoint, query, filter: request.filter, limit: request.limit }
    }

    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("cache key serializes");
        hex::encode(Sha256::digest(json))[..24].to_string()
    }
}

/// Lowercases and collapses whitespace.
pub fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Serialize, Deserialize)]
struct FixtureFile {
    key: CacheKey,
    body: String,
}

/// Directory of recorded corpus responses.
#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.digest()))
    }

    pub async fn load(&self, key: &CacheKey) -> Result<Option<String>, CorpusError> {
        let path = self.path(key);
        match tokio::fs::read(&path).await {
            Ok(bytes) => {
                let file: FixtureFile = serde_json::from_slice(&bytes)
                    .map_err(|e| CorpusError::Malformed(format!("{}: {e}", path.display())))?;
                Ok(Some(file.body))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(CorpusError::Transport { status: None, message: e.to_string() }),
        }
    }

    pub async fn save(&self, key: &CacheKey, body: &str) -> Result<(), CorpusError> {
        let io = |e: std::io::Error| CorpusError::Transport { status: None, message: e.to_string() };
        tokio::fs::create_dir_all(&self.dir).await.map_err(io)?;
        let file = FixtureFile { key: key.clone(), body: body.to_string() };
        let mut json = serde_json::to_string_pretty(&file).expect("fixture serializes");
        json.push('\n');
        tokio::fs::write(self.path(key), json).await.map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(text: &str, ids: &[&str]) -> BackendRequest {
        BackendRequest {
            endpoint: Endpoint::Search,
            text: text.into(),
            filter: Some(CorpusFilter::AllCs),
            limit: 2,
            ids: ids.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn normalization_merges_trivial_variants() {
        let a = CacheKey::for_request(&req("Human-AI   Art", &[]));
        let b = CacheKey::for_request(&req(" human-ai art\n", &[]));
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a, CacheKey::for_request(&req("human-ai arts", &[])));
    }

    #[test]
    fn id_order_does_not_matter() {
        let a = CacheKey::for_request(&req("x", &["b", "a"]));
        let b = CacheKey::for_request(&req("x", &["a", "b", "a"]));
        assert_eq!(a, b);
    }

    #[tokio::test]
    async fn save_then_load_is_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::new(dir.path());
        let key = CacheKey::for_request(&req("q", &[]));
        assert_eq!(store.load(&key).await.unwrap(), None);
        let body = "{\"data\": [ ]}";
        store.save(&key, body).await.unwrap();
        assert_eq!(store.load(&key).await.unwrap().as_deref(), Some(body));
    }
}
