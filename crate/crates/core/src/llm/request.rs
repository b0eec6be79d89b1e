use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    FacetExtraction,
    QueryPaperFacets,
    AnalogyQueries,
    ShortenQuery,
    SummarizePapers,
    InitialIdeas,
    FillAnalogyIdeas,
    FacetsToIdeas,
    NoveltyClassify,
    IdeaKeywords,
    IdeaFacetsForRerank,
    Rerank,
    /// Plain relevance ranking without the facet rubric, used by ablations.
    RerankRelevance,
    MoreNovelIdeas,
}

impl TemplateId {
    pub const ALL: [TemplateId; 14] = [
        TemplateId::FacetExtraction,
        TemplateId::QueryPaperFacets,
        TemplateId::AnalogyQueries,
        TemplateId::ShortenQuery,
        TemplateId::SummarizePapers,
        TemplateId::InitialIdeas,
        TemplateId::FillAnalogyIdeas,
        TemplateId::FacetsToIdeas,
        TemplateId::NoveltyClassify,
        TemplateId::IdeaKeywords,
        TemplateId::IdeaFacetsForRerank,
        TemplateId::Rerank,
        TemplateId::RerankRelevance,
        TemplateId::MoreNovelIdeas,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::FacetExtraction => "facet_extraction",
            TemplateId::QueryPaperFacets => "query_paper_facets",
            TemplateId::AnalogyQueries => "analogy_queries",
            TemplateId::ShortenQuery => "shorten_query",
            TemplateId::SummarizePapers => "summarize_papers",
            TemplateId::InitialIdeas => "initial_ideas",
            TemplateId::FillAnalogyIdeas => "fill_analogy_ideas",
            TemplateId::FacetsToIdeas => "facets_to_ideas",
            TemplateId::NoveltyClassify => "novelty_classify",
            TemplateId::IdeaKeywords => "idea_keywords",
            TemplateId::IdeaFacetsForRerank => "idea_facets_for_rerank",
            TemplateId::Rerank => "rerank",
            TemplateId::RerankRelevance => "rerank_relevance",
            TemplateId::MoreNovelIdeas => "more_novel_ideas",
        }
    }

    /// Default sampling temperature for the template.
    pub fn default_temperature(self) -> f64 {
        match self {
            TemplateId::InitialIdeas
            | TemplateId::FillAnalogyIdeas
            | TemplateId::FacetsToIdeas
            | TemplateId::MoreNovelIdeas => 0.75,
            _ => 0.0,
        }
    }

    pub fn default_role(self) -> ModelRole {
        match self {
            TemplateId::NoveltyClassify => ModelRole::Reasoning,
            _ => ModelRole::General,
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRole {
    General,
    Reasoning,
}

impl ModelRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelRole::General => "general",
            ModelRole::Reasoning => "reasoning",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "system" => Ok(Role::System),
            "user" => Ok(Role::User),
            "assistant" => Ok(Role::Assistant),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }
}

/// One model call: a template, its slot values and sampling settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub template_id: TemplateId,
    pub bindings: BTreeMap<String, Value>,
    pub model_role: ModelRole,
    pub temperature: f64,
}

impl LlmRequest {
    /// Request with the template's default role and temperature.
    pub fn new(template_id: TemplateId, bindings: BTreeMap<String, Value>) -> Self {
        LlmRequest {
            template_id,
            bindings,
            model_role: template_id.default_role(),
            temperature: template_id.default_temperature(),
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_role(mut self, role: ModelRole) -> Self {
        self.model_role = role;
        self
    }

    /// Hex sha256 over the canonical JSON of template, bindings, role and
    /// temperature. Bindings are a sorted map, so key order never matters.
    pub fn digest(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            template_id: TemplateId,
            bindings: &'a BTreeMap<String, Value>,
            model_role: ModelRole,
            temperature: String,
        }
        let canonical = Canonical {
            template_id: self.template_id,
            bindings: &self.bindings,
            model_role: self.model_role,
            temperature: format!("{:.4}", self.temperature),
        };
        let bytes = serde_json::to_vec(&canonical).expect("request serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
