use serde::{Deserialize, Serialize};

use super::facet::FacetId;
use super::kinds::DistanceClass;

/// The purpose, mechanism and evaluation facet ids attached to a paper.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetTriple {
    pub purpose: FacetId,
    pub mechanism: FacetId,
    pub evaluation: FacetId,
}

impl FacetTriple {
    pub fn ids(&self) -> [&FacetId; 3] {
        [&self.purpose, &self.mechanism, &self.evaluation]
    }

    pub fn contains(&self, id: &FacetId) -> bool {
        self.ids().contains(&id)
    }
}

/// A scholarly paper known to a session. Only title and abstract feed prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub corpus_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default)]
    pub venue: String,
    #[serde(default)]
    pub url: String,
    #[serde(default)]
    pub year: Option<i32>,
    pub distance: DistanceClass,
    #[serde(default)]
    pub relevant_query: Option<String>,
    #[serde(default)]
    pub facets: Option<FacetTriple>,
    #[serde(default)]
    pub context_paper_ids: Vec<String>,
}

impl PaperRecord {
    /// A record with only the required fields set.
    pub fn new(
        corpus_id: impl Into<String>,
        title: impl Into<String>,
        abstract_text: impl Into<String>,
        distance: DistanceClass,
    ) -> Self {
        PaperRecord {
            corpus_id: corpus_id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
            authors: Vec::new(),
            venue: String::new(),
            url: String::new(),
            year: None,
            distance,
            relevant_query: None,
            facets: None,
            context_paper_ids: Vec::new(),
        }
    }

    /// Title and abstract are both present after trimming.
    pub fn is_usable(&self) -> bool {
        !self.title.trim().is_empty() && !self.abstract_text.trim().is_empty()
    }

    pub fn with_distance(mut self, distance: DistanceClass) -> Self {
        self.distance = distance;
        self
    }
}
