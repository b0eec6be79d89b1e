//! Typed slot values for every template. Each struct serializes to the
//! binding map of an [`LlmRequest`] and back.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::request::{LlmRequest, TemplateId};
use super::LlmError;

/// Typed bindings for one template.
pub trait Bindings: Serialize + DeserializeOwned {
    const TEMPLATE: TemplateId;

    fn to_map(&self) -> BTreeMap<String, Value> {
        match serde_json::to_value(self).expect("bindings serialize") {
            Value::Object(map) => map.into_iter().collect(),
            _ => unreachable!("bindings are structs"),
        }
    }

    fn from_map(map: &BTreeMap<String, Value>) -> Result<Self, LlmError> {
        let obj: serde_json::Map<String, Value> = map.clone().into_iter().collect();
        serde_json::from_value(Value::Object(obj))
            .map_err(|e| LlmError::Template(format!("{}: {e}", Self::TEMPLATE)))
    }

    fn request(&self) -> LlmRequest {
        LlmRequest::new(Self::TEMPLATE, self.to_map())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperText {
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

/// A paper as shown in summary and idea prompts, with its facets inlined.
/// A `stub` entry stands for a user-selected facet with no paper behind it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPaper {
    #[serde(default)]
    pub stub: bool,
    #[serde(default)]
    pub distance: String,
    #[serde(default)]
    pub theme: Option<String>,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub purpose_text: String,
    #[serde(default)]
    pub purpose_id: String,
    #[serde(default)]
    pub mechanism_text: String,
    #[serde(default)]
    pub mechanism_id: String,
    #[serde(default)]
    pub evaluation_text: String,
    #[serde(default)]
    pub evaluation_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetRef {
    pub text: String,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetExtraction {
    /// Free text used instead of `papers` when present.
    pub text: Option<String>,
    pub papers: Vec<PaperText>,
}

impl Bindings for FacetExtraction {
    const TEMPLATE: TemplateId = TemplateId::FacetExtraction;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPaperFacets {
    pub papers: Vec<PaperText>,
    pub query: String,
    pub facet_type: Option<String>,
    pub query2: Option<String>,
    pub type2: Option<String>,
}

impl Bindings for QueryPaperFacets {
    const TEMPLATE: TemplateId = TemplateId::QueryPaperFacets;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyQueries {
    pub purpose: String,
    pub mechanism: String,
    pub previous_queries: Vec<String>,
    pub number: usize,
}

impl Bindings for AnalogyQueries {
    const TEMPLATE: TemplateId = TemplateId::AnalogyQueries;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortenQuery {
    pub query: String,
}

impl Bindings for ShortenQuery {
    const TEMPLATE: TemplateId = TemplateId::ShortenQuery;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarizePapers {
    pub papers: Vec<PromptPaper>,
}

impl Bindings for SummarizePapers {
    const TEMPLATE: TemplateId = TemplateId::SummarizePapers;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialIdeas {
    pub topic: String,
    pub summary: String,
    pub prior_ideas: String,
    pub custom_instructions: String,
    pub number: usize,
    pub idea_number: usize,
    pub query: Option<String>,
    pub designated: Vec<PromptPaper>,
    pub analogous: Vec<PromptPaper>,
    pub set_eval: Vec<FacetRef>,
}

impl Bindings for InitialIdeas {
    const TEMPLATE: TemplateId = TemplateId::InitialIdeas;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillAnalogyIdeas {
    pub topic: String,
    pub summary: String,
    pub prior_ideas: String,
    pub custom_instructions: String,
    pub number: usize,
    pub idea_number: usize,
    /// True when set 1 carries the selected purposes, false for mechanisms.
    pub relevant_purposes: bool,
    pub set1: Vec<PromptPaper>,
    pub set2: Vec<PromptPaper>,
    pub set_eval: Vec<FacetRef>,
}

impl Bindings for FillAnalogyIdeas {
    const TEMPLATE: TemplateId = TemplateId::FillAnalogyIdeas;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetsToIdeas {
    pub topic: String,
    pub summary: String,
    pub prior_ideas: String,
    pub custom_instructions: String,
    pub number: usize,
    pub idea_number: usize,
    pub set1: Vec<PromptPaper>,
    pub set2: Vec<PromptPaper>,
    pub set_eval: Vec<FacetRef>,
    /// Distinguishes otherwise identical calls. Not rendered.
    pub sample: u32,
}

impl Bindings for FacetsToIdeas {
    const TEMPLATE: TemplateId = TemplateId::FacetsToIdeas;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoveltyClassify {
    pub idea: String,
    pub incontext: String,
    pub papers: Vec<PaperText>,
}

impl Bindings for NoveltyClassify {
    const TEMPLATE: TemplateId = TemplateId::NoveltyClassify;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdeaKeywords {
    pub idea: String,
}

impl Bindings for IdeaKeywords {
    const TEMPLATE: TemplateId = TemplateId::IdeaKeywords;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdeaFacetsForRerank {
    pub idea: String,
}

impl Bindings for IdeaFacetsForRerank {
    const TEMPLATE: TemplateId = TemplateId::IdeaFacetsForRerank;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rerank {
    pub query: String,
    pub facets: String,
    pub passages: Vec<String>,
    pub num: usize,
}

impl Bindings for Rerank {
    const TEMPLATE: TemplateId = TemplateId::Rerank;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RerankRelevance {
    pub query: String,
    pub passages: Vec<String>,
    pub num: usize,
}

impl Bindings for RerankRelevance {
    const TEMPLATE: TemplateId = TemplateId::RerankRelevance;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoreNovelIdeas {
    pub topic: String,
    pub short_text: String,
    pub long_text: String,
    pub papers: Vec<PaperText>,
    pub review: String,
    pub available_add: Vec<FacetRef>,
    pub available_remove: Vec<FacetRef>,
}

impl Bindings for MoreNovelIdeas {
    const TEMPLATE: TemplateId = TemplateId::MoreNovelIdeas;
}
