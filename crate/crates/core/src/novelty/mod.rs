//! Idea to novelty: candidate retrieval from five sources, cosine filtering,
//! listwise re-ranking, cited classification and facet-swap suggestions.

mod examples;
mod ranking;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use futures::future::join_all;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, warn};

use crate::corpus::{Corpus, CorpusError, CorpusFilter, CorpusQuery};
use crate::domain::{
    citations, Classification, Facet, FacetId, Idea, NovelSuggestion, NoveltyConfig, PaperRecord,
};
use crate::llm::bindings::{
    Bindings, FacetRef, IdeaFacetsForRerank, IdeaKeywords, MoreNovelIdeas, NoveltyClassify, PaperText, Rerank,
    RerankRelevance,
};
use crate::llm::parse::{
    clean_id, parse_idea_facets, parse_keywords_titles, parse_novelty, parse_ranking, parse_suggestions, NoveltyDraft,
    ParseError, SuggestionDraft,
};
use crate::llm::{reask, LlmError, LlmGateway};

pub use examples::{builtin_examples, format_examples, load_examples, sample_examples, LabeledExample};
pub use ranking::{apply_permutation, cosine, rank_by_cosine, sliding_windows};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoveltyError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("no candidate has an embedding")]
    NoEmbeddings,
    #[error("no candidate papers were found")]
    NoCandidates,
    #[error("review cites [{0}], outside the related papers")]
    CitationOutOfRange(usize),
    #[error("at least one labeled example is required")]
    NoExamples,
    #[error("no related papers to compare against")]
    NoRelevantPapers,
    #[error("suggestions apply only to ideas judged not novel")]
    IdeaIsNovel,
    #[error("idea text is empty")]
    EmptyIdea,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    PriorModule,
    Related,
    Keyword,
    Title,
    Snippet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub paper: PaperRecord,
    pub tags: BTreeSet<SourceTag>,
}

/// Deduplicated candidate papers plus each single source's native ordering.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub idea_id: String,
    pub papers: BTreeMap<String, Candidate>,
    /// Keyword-search hits in query order, then upstream order.
    pub keyword_order: Vec<String>,
    /// Snippet hits in upstream order.
    pub snippet_order: Vec<String>,
    /// Sources that failed and were skipped.
    pub failures: Vec<String>,
}

impl CandidateSet {
    fn add(&mut self, paper: PaperRecord, tag: SourceTag) {
        self.papers
            .entry(paper.corpus_id.clone())
            .or_insert_with(|| Candidate { paper, tags: BTreeSet::new() })
            .tags
            .insert(tag);
    }

    pub fn tags(&self) -> BTreeSet<SourceTag> {
        self.papers.values().flat_map(|c| c.tags.iter().copied()).collect()
    }

    pub fn paper(&self, id: &str) -> Option<&PaperRecord> {
        self.papers.get(id).map(|c| &c.paper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Complete,
    RelevanceRerank,
    EmbeddingOnly,
    SnippetOnly,
    KeywordOnly,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::Complete, Variant::RelevanceRerank, Variant::EmbeddingOnly, Variant::SnippetOnly, Variant::KeywordOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Complete => "complete",
            Variant::RelevanceRerank => "relevance_rerank",
            Variant::EmbeddingOnly => "embedding_only",
            Variant::SnippetOnly => "snippet_only",
            Variant::KeywordOnly => "keyword_only",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL.into_iter().find(|v| v.as_str() == s.trim()).ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedRelevant {
    pub idea_id: String,
    pub top_n: Vec<String>,
    pub top_k: Vec<String>,
    pub similarity: BTreeMap<String, f64>,
    /// Candidates dropped for lack of an embedding.
    #[serde(default)]
    pub unembedded: Vec<String>,
}

/// The idea text every novelty step reads.
pub fn idea_text(idea: &Idea) -> &str {
    idea.short_text.trim()
}

/// One line per passage for the ranking prompts.
pub fn passage(p: &PaperRecord) -> String {
    let text = format!("{}. {}", p.title.trim(), p.abstract_text.trim());
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn paper_text(p: &PaperRecord) -> PaperText {
    PaperText { title: p.title.clone(), abstract_text: p.abstract_text.clone() }
}

/// Rejects any citation index at or past `k`.
pub fn check_citations(review: &str, k: usize) -> Result<(), usize> {
    match citations(review).into_iter().find(|&i| i >= k) {
        Some(i) => Err(i),
        None => Ok(()),
    }
}

pub struct NoveltyChecker<'a> {
    corpus: &'a Corpus,
    llm: &'a LlmGateway,
    config: NoveltyConfig,
}

impl<'a> NoveltyChecker<'a> {
    pub fn new(corpus: &'a Corpus, llm: &'a LlmGateway, config: NoveltyConfig) -> Self {
        NoveltyChecker { corpus, llm, config }
    }

    pub fn config(&self) -> &NoveltyConfig {
        &self.config
    }

    /// Union of session papers, their related papers, keyword and title
    /// searches and a snippet search. A failing source is logged and skipped.
    pub async fn gather_candidates(
        &self,
        idea_id: &str,
        text: &str,
        session_papers: &[PaperRecord],
    ) -> Result<CandidateSet, NoveltyError> {
        if text.trim().is_empty() {
            return Err(NoveltyError::EmptyIdea);
        }
        let cfg = &self.config;
        let mut set = CandidateSet { idea_id: idea_id.to_string(), ..Default::default() };
        for p in session_papers.iter().filter(|p| p.is_usable()) {
            set.add(p.clone(), SourceTag::PriorModule);
        }

        let related = join_all(
            session_papers
                .iter()
                .filter(|p| !p.corpus_id.starts_with(crate::finder::USER_PREFIX))
                .map(|p| self.corpus.fetch_related(&p.corpus_id, cfg.related_per_paper)),
        );
        let keywords = self.keywords_and_titles(text);
        let snippets = self.corpus.search_snippets(text, cfg.hits_per_query);
        let (related, keywords, snippets) = futures::join!(related, keywords, snippets);

        for r in related {
            match r {
                Ok(hits) => hits.into_iter().for_each(|p| set.add(p, SourceTag::Related)),
                Err(e) => note_failure(&mut set, "related", e),
            }
        }

        match keywords {
            Ok((kws, titles)) => {
                let (kw_hits, title_hits) = futures::join!(self.searches(&kws), self.searches(&titles));
                for r in kw_hits {
                    match r {
                        Ok(hits) => {
                            for p in hits {
                                if !set.keyword_order.contains(&p.corpus_id) {
                                    set.keyword_order.push(p.corpus_id.clone());
                                }
                                set.add(p, SourceTag::Keyword);
                            }
                        }
                        Err(e) => note_failure(&mut set, "keyword", e),
                    }
                }
                for r in title_hits {
                    match r {
                        Ok(hits) => hits.into_iter().for_each(|p| set.add(p, SourceTag::Title)),
                        Err(e) => note_failure(&mut set, "title", e),
                    }
                }
            }
            Err(e) => {
                warn!(error = %e, "keyword generation failed");
                set.failures.push(format!("keywords: {e}"));
            }
        }

        match snippets {
            Ok(hits) => {
                let ids: Vec<String> = hits.iter().map(|h| h.corpus_id.clone()).collect();
                match self.corpus.fetch_papers(&ids).await {
                    Ok(papers) => {
                        let found: BTreeMap<String, PaperRecord> =
                            papers.into_iter().map(|p| (p.corpus_id.clone(), p)).collect();
                        for id in ids {
                            if let Some(p) = found.get(&id) {
                                set.snippet_order.push(id.clone());
                                set.add(p.clone(), SourceTag::Snippet);
                            }
                        }
                    }
                    Err(e) => note_failure(&mut set, "snippet papers", e),
                }
            }
            Err(e) => note_failure(&mut set, "snippet", e),
        }

        if set.papers.is_empty() {
            return Err(NoveltyError::NoCandidates);
        }
        debug!(idea = idea_id, candidates = set.papers.len(), "gathered candidates");
        Ok(set)
    }

    async fn searches(&self, queries: &[String]) -> Vec<Result<Vec<PaperRecord>, CorpusError>> {
        let queries: Vec<CorpusQuery> =
            queries.iter().map(|q| CorpusQuery::new(q.clone(), CorpusFilter::AllCs, self.config.hits_per_query)).collect();
        join_all(queries.iter().map(|q| self.corpus.search_papers(q))).await
    }

    async fn keywords_and_titles(&self, text: &str) -> Result<(Vec<String>, Vec<String>), LlmError> {
        let req = IdeaKeywords { idea: text.to_string() }.request();
        let (kr, tr) = (self.config.keyword_count_range, self.config.title_count_range);
        let draft = self
            .llm
            .call(&req, |raw| {
                let d = parse_keywords_titles(raw, kr)?;
                if d.titles.len() < tr.0 || d.titles.len() > tr.1 {
                    return Err(ParseError::CountOutOfRange {
                        what: "titles".into(),
                        found: d.titles.len(),
                        min: tr.0,
                        max: tr.1,
                    });
                }
                Ok(d)
            })
            .await?;
        Ok((draft.keywords, draft.titles))
    }

    /// The `n` embeddable candidates most similar to the idea.
    pub async fn embed_filter(&self, text: &str, candidates: &CandidateSet, n: usize) -> Result<RankedRelevant, NoveltyError> {
        let ids: Vec<String> = candidates.papers.keys().cloned().collect();
        if ids.is_empty() {
            return Err(NoveltyError::NoCandidates);
        }
        let (vectors, missing) = match self.corpus.fetch_embeddings(&ids, text).await {
            Ok(v) => (v, Vec::new()),
            Err(CorpusError::PartialResult { missing, vectors }) => (vectors, missing),
            Err(e) => return Err(e.into()),
        };
        let (idea, papers): (Vec<_>, Vec<_>) = vectors.into_iter().partition(|v| v.is_idea());
        let idea = idea.into_iter().next().ok_or(NoveltyError::NoEmbeddings)?;
        if papers.is_empty() {
            return Err(NoveltyError::NoEmbeddings);
        }
        let pairs: Vec<(String, Vec<f64>)> = papers.into_iter().map(|v| (v.corpus_id, v.values)).collect();
        let ranked = rank_by_cosine(&idea.values, &pairs, n);
        if !missing.is_empty() {
            debug!(missing = missing.len(), "candidates without embeddings");
        }
        Ok(RankedRelevant {
            idea_id: candidates.idea_id.clone(),
            top_n: ranked.iter().map(|(id, _)| id.clone()).collect(),
            top_k: Vec::new(),
            similarity: ranked.into_iter().collect(),
            unembedded: missing,
        })
    }

    /// Listwise re-rank of `top_n`, returning the first `k`. `facet_based`
    /// selects the facet rubric over plain relevance.
    pub async fn rerank(
        &self,
        text: &str,
        top_n: &[String],
        candidates: &CandidateSet,
        k: usize,
        facet_based: bool,
    ) -> Result<Vec<String>, NoveltyError> {
        if top_n.is_empty() {
            return Ok(Vec::new());
        }
        let facets = if facet_based {
            let req = IdeaFacetsForRerank { idea: text.to_string() }.request();
            Some(self.llm.call(&req, parse_idea_facets).await?)
        } else {
            None
        };
        let mut order: Vec<String> = top_n.to_vec();
        for (start, end) in sliding_windows(order.len(), self.config.rerank_window, self.config.rerank_stride) {
            let passages: Vec<String> =
                order[start..end].iter().map(|id| candidates.paper(id).map(passage).unwrap_or_default()).collect();
            let num = passages.len();
            let req = match &facets {
                Some(f) => Rerank { query: text.to_string(), facets: f.clone(), passages, num }.request(),
                None => RerankRelevance { query: text.to_string(), passages, num }.request(),
            };
            let perm = self.llm.call(&req, |raw| parse_ranking(raw, num)).await?;
            apply_permutation(&mut order, start, &perm);
        }
        order.truncate(k);
        Ok(order)
    }

    /// Full ranking for one variant over an already gathered candidate set.
    pub async fn run_variant(&self, text: &str, candidates: &CandidateSet, variant: Variant) -> Result<RankedRelevant, NoveltyError> {
        let k = self.config.rerank_top_k;
        let native = |order: &[String]| RankedRelevant {
            idea_id: candidates.idea_id.clone(),
            top_n: order.to_vec(),
            top_k: order.iter().take(k).cloned().collect(),
            ..Default::default()
        };
        match variant {
            Variant::SnippetOnly => Ok(native(&candidates.snippet_order)),
            Variant::KeywordOnly => Ok(native(&candidates.keyword_order)),
            Variant::EmbeddingOnly => {
                let mut r = self.embed_filter(text, candidates, self.config.embed_top_n).await?;
                r.top_k = r.top_n.iter().take(k).cloned().collect();
                Ok(r)
            }
            Variant::Complete | Variant::RelevanceRerank => {
                let mut r = self.embed_filter(text, candidates, self.config.embed_top_n).await?;
                r.top_k = self.rerank(text, &r.top_n, candidates, k, variant == Variant::Complete).await?;
                Ok(r)
            }
        }
    }

    /// Classification and review against `papers`, citing them by index.
    pub async fn classify(
        &self,
        text: &str,
        papers: &[PaperText],
        examples: &[&LabeledExample],
    ) -> Result<NoveltyDraft, NoveltyError> {
        if examples.is_empty() {
            return Err(NoveltyError::NoExamples);
        }
        if papers.is_empty() {
            return Err(NoveltyError::NoRelevantPapers);
        }
        let req = NoveltyClassify { idea: text.to_string(), incontext: format_examples(examples), papers: papers.to_vec() }
            .request();
        let k = papers.len();
        let checked = |raw: &str| {
            let d = parse_novelty(raw)?;
            check_citations(&d.review, k)
                .map_err(|i| ParseError::Invalid { block: 1, reason: format!("citation [{i}] is out of range") })?;
            Ok(d)
        };
        let raw = self.llm.complete(&req).await?;
        let err = match checked(&raw) {
            Ok(d) => return Ok(d),
            Err(e) => e,
        };
        let raw = self.llm.complete(&reask(&req, &err)).await?;
        let d = parse_novelty(&raw).map_err(LlmError::Parse)?;
        check_citations(&d.review, k).map_err(NoveltyError::CitationOutOfRange)?;
        Ok(d)
    }

    /// Three variants of a non-novel idea, one per facet kind.
    #[allow(clippy::too_many_arguments)]
    pub async fn suggest_more_novel(
        &self,
        topic: &str,
        idea: &Idea,
        classification: Classification,
        papers: &[PaperText],
        review: &str,
        facets: &BTreeMap<FacetId, Facet>,
    ) -> Result<Vec<NovelSuggestion>, NoveltyError> {
        if classification != Classification::NotNovel {
            return Err(NoveltyError::IdeaIsNovel);
        }
        let own: BTreeSet<&FacetId> = idea.facet_ids().into_iter().collect();
        let refs = |f: &Facet| FacetRef { text: f.text.clone(), id: f.id.to_string() };
        let available_remove: Vec<FacetRef> =
            idea.facet_ids().into_iter().filter_map(|id| facets.get(id)).map(refs).collect();
        let available_add: Vec<FacetRef> = facets.values().filter(|f| !own.contains(&f.id)).map(refs).collect();
        let mut req = MoreNovelIdeas {
            topic: topic.to_string(),
            short_text: idea.short_text.clone(),
            long_text: idea.expanded_text.clone(),
            papers: papers.to_vec(),
            review: review.to_string(),
            available_add,
            available_remove,
        }
        .request();
        req.temperature = self.config.suggestion_temperature;
        let drafts = self.llm.call(&req, |raw| check_suggestions(&parse_suggestions(raw)?, idea, facets)).await?;
        Ok(drafts)
    }
}

fn note_failure(set: &mut CandidateSet, source: &str, e: CorpusError) {
    if e == CorpusError::EmptyResult {
        return;
    }
    warn!(source, error = %e, "candidate source failed");
    set.failures.push(format!("{source}: {e}"));
}

/// Resolves suggestion drafts: each removes the idea's facet of its kind and
/// adds a different existing facet of the same kind.
pub fn check_suggestions(
    drafts: &[SuggestionDraft],
    idea: &Idea,
    facets: &BTreeMap<FacetId, Facet>,
) -> Result<Vec<NovelSuggestion>, ParseError> {
    let mut kinds = BTreeSet::new();
    drafts
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let block = i + 1;
            let invalid = |reason: String| ParseError::Invalid { block, reason };
            if !kinds.insert(d.kind) {
                return Err(invalid(format!("second {} suggestion", d.kind)));
            }
            let removed = FacetId::from_raw(clean_id(&d.removed_id));
            let added = FacetId::from_raw(clean_id(&d.added_id));
            if &removed != idea.facet_id(d.kind) {
                return Err(ParseError::UnknownFacetId(removed.to_string()));
            }
            let facet = facets.get(&added).ok_or_else(|| ParseError::UnknownFacetId(added.to_string()))?;
            if facet.kind != d.kind {
                return Err(invalid(format!("added facet is a {}, not a {}", facet.kind, d.kind)));
            }
            if added == removed {
                return Err(invalid("added facet equals the removed one".into()));
            }
            Ok(NovelSuggestion {
                kind: d.kind,
                removed_facet_id: removed,
                added_facet_id: added,
                idea_text: d.idea_text.trim().to_string(),
                why_more_novel: d.why_more_novel.trim().to_string(),
                why_useful: d.why_useful.trim().to_string(),
            })
        })
        .collect()
}
