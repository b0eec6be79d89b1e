use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::facet::FacetId;
use super::kinds::FacetKind;
use super::paper::PaperRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Novel,
    NotNovel,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Novel => "novel",
            Classification::NotNovel => "not_novel",
        }
    }

    /// Spelling used in prompts and model answers.
    pub fn prompt_label(self) -> &'static str {
        match self {
            Classification::Novel => "novel",
            Classification::NotNovel => "not novel",
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Classification::Novel => Classification::NotNovel,
            Classification::NotNovel => Classification::Novel,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Classification {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c == '_' || c == '-' { ' ' } else { c })
            .filter(|c| c.is_ascii_alphabetic() || *c == ' ')
            .collect();
        match norm.split_whitespace().collect::<Vec<_>>().join(" ").as_str() {
            "novel" => Ok(Classification::Novel),
            "not novel" => Ok(Classification::NotNovel),
            other => Err(format!("unknown classification `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserOverride {
    pub classification: Classification,
    pub reason: String,
}

/// A proposed variant of a non-novel idea with exactly one facet swapped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NovelSuggestion {
    pub kind: FacetKind,
    pub removed_facet_id: FacetId,
    pub added_facet_id: FacetId,
    pub idea_text: String,
    pub why_more_novel: String,
    pub why_useful: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyAssessment {
    pub idea_id: String,
    pub relevant_papers: Vec<PaperRecord>,
    pub classification: Classification,
    pub review: String,
    pub user_override: Option<UserOverride>,
    pub suggestions: Vec<NovelSuggestion>,
}

impl NoveltyAssessment {
    /// The override wins over the model's classification.
    pub fn effective_classification(&self) -> Classification {
        self.user_override.as_ref().map(|o| o.classification).unwrap_or(self.classification)
    }

    pub fn effective_review(&self) -> &str {
        self.user_override.as_ref().map(|o| o.reason.as_str()).unwrap_or(&self.review)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoveltyConfig {
    pub embed_top_n: usize,
    pub rerank_top_k: usize,
    pub keyword_count_range: (usize, usize),
    pub title_count_range: (usize, usize),
    pub suggestion_temperature: f64,
    /// Related papers fetched per session paper during candidate gathering.
    pub related_per_paper: usize,
    /// Upstream results kept per keyword or title query.
    pub hits_per_query: usize,
    pub rerank_window: usize,
    pub rerank_stride: usize,
    /// In-context examples per class for the classifier.
    pub examples_per_class: usize,
    pub example_seed: u64,
}

impl Default for NoveltyConfig {
    fn default() -> Self {
        NoveltyConfig {
            embed_top_n: 100,
            rerank_top_k: 10,
            keyword_count_range: (3, 6),
            title_count_range: (3, 4),
            suggestion_temperature: 0.75,
            related_per_paper: 4,
            hits_per_query: 10,
            rerank_window: 20,
            rerank_stride: 10,
            examples_per_class: 15,
            example_seed: 100,
        }
    }
}

impl NoveltyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.rerank_top_k < 1 || self.rerank_top_k > self.embed_top_n {
            return Err(format!(
                "rerank_top_k must be in [1, embed_top_n]; got k={} n={}",
                self.rerank_top_k, self.embed_top_n
            ));
        }
        if self.rerank_stride == 0 || self.rerank_stride > self.rerank_window {
            return Err("rerank_stride must be in [1, rerank_window]".into());
        }
        Ok(())
    }
}

static CITATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[\s*(\d+)\s*\]").unwrap());

/// Every bracketed integer citation (`[3]`) in the text, in order of appearance.
pub fn citations(review: &str) -> Vec<usize> {
    CITATION
        .captures_iter(review)
        .filter_map(|c| c[1].parse().ok())
        .collect()
}
