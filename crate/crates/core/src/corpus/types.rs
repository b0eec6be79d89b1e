use serde::{Deserialize, Serialize};

use crate::domain::{DistanceClass, PaperRecord};

/// Which slice of the corpus a search runs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFilter {
    AllCs,
    Recent,
}

impl CorpusFilter {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusFilter::AllCs => "all_cs",
            CorpusFilter::Recent => "recent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusQuery {
    pub text: String,
    pub corpus_filter: CorpusFilter,
    pub limit: usize,
}

impl CorpusQuery {
    pub fn new(text: impl Into<String>, corpus_filter: CorpusFilter, limit: usize) -> Self {
        CorpusQuery { text: text.into(), corpus_filter, limit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetHit {
    pub corpus_id: String,
    pub snippet_text: String,
    pub score: f64,
}

/// Id used for the idea's own vector in an embedding batch.
pub const IDEA_EMBEDDING_ID: &str = "idea";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    /// A corpus id, or [`IDEA_EMBEDDING_ID`].
    pub corpus_id: String,
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn is_idea(&self) -> bool {
        self.corpus_id == IDEA_EMBEDDING_ID
    }
}

/// Upstream endpoint families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Search,
    Snippets,
    Related,
    Embeddings,
    Papers,
}

/// A request as seen by a backend. Field meaning depends on the endpoint:
/// `text` is the query (search, snippets) or the idea text (embeddings);
/// `ids` holds the paper ids (related: one seed, or several when `filter`
/// names a recommendation pool; embeddings, papers: many).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub endpoint: Endpoint,
    pub text: String,
    pub filter: Option<CorpusFilter>,
    pub limit: usize,
    pub ids: Vec<String>,
}

// Wire bodies. Backends answer with these shapes; they are what the fixture
// store persists.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePaper {
    #[serde(rename = "paperId")]
    pub paper_id: String,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(rename = "abstract", default)]
    pub abstract_text: Option<String>,
    #[serde(default)]
    pub authors: Vec<WireAuthor>,
    #[serde(default)]
    pub venue: Option<String>,
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default)]
    pub year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireAuthor {
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PapersBody {
    #[serde(default)]
    pub data: Vec<WirePaper>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSnippet {
    #[serde(rename = "paperId")]
    pub paper_id: String,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnippetsBody {
    #[serde(default)]
    pub data: Vec<WireSnippet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEmbedding {
    #[serde(rename = "paperId")]
    pub paper_id: String,
    #[serde(default)]
    pub embedding: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingsBody {
    #[serde(default)]
    pub data: Vec<WireEmbedding>,
    pub query_embedding: Option<Vec<f64>>,
}

impl WirePaper {
    /// `None` when the title or abstract is missing or blank.
    pub fn into_record(self) -> Option<PaperRecord> {
        let title = self.title.filter(|t| !t.trim().is_empty())?;
        let abstract_text = self.abstract_text.filter(|a| !a.trim().is_empty())?;
        let mut record = PaperRecord::new(self.paper_id, title, abstract_text, DistanceClass::Input);
        record.authors = self.authors.into_iter().filter_map(|a| a.name).collect();
        record.venue = self.venue.unwrap_or_default();
        record.url = self.url.unwrap_or_default();
        record.year = self.year;
        Some(record)
    }

    pub fn from_record(record: &PaperRecord) -> Self {
        WirePaper {
            paper_id: record.corpus_id.clone(),
            title: Some(record.title.clone()),
            abstract_text: Some(record.abstract_text.clone()),
            authors: record.authors.iter().map(|n| WireAuthor { name: Some(n.clone()) }).collect(),
            venue: Some(record.venue.clone()),
            url: Some(record.url.clone()),
            year: record.year,
        }
    }
}
