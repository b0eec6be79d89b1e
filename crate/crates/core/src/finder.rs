//! Papers to facets: very-near retrieval, a summary of relevant work, the
//! overarching purpose and mechanism, distance-tiered analogy queries,
//! retrieval with query shortening, and facet extraction.

use std::collections::{BTreeMap, HashSet};

use futures::future::join_all;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{info, warn};

use crate::corpus::{Corpus, CorpusError, CorpusFilter, CorpusQuery};
use crate::domain::{check_facet, DistanceClass, Facet, FacetId, FacetKind, FacetTriple, IdGen, PaperRecord, Provenance, ValidFacet};
use crate::llm::bindings::{AnalogyQueries, Bindings, FacetExtraction, PaperText, PromptPaper, QueryPaperFacets, ShortenQuery, SummarizePapers};
use crate::llm::parse::{parse_analogy_queries, parse_facet_extraction, parse_shortened_query, parse_summary, FacetTripleDraft, ParseError};
use crate::llm::{LlmError, LlmGateway};

pub const QUERIES_PER_TIER: usize = 4;
pub const PAPERS_PER_QUERY: usize = 4;
pub const MAX_SHORTENINGS: usize = 3;
/// Very-near papers drawn from each recommendation pool.
pub const VERY_NEAR_PER_POOL: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinderError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("at least one input paper is required")]
    NoInputPapers,
    #[error("topic is empty")]
    EmptyTopic,
    #[error("no paper found even after shortening to `{0}`")]
    ExhaustedShortenings(String),
}

/// One generated analogy and the search query it implies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogousQuery {
    pub purpose: String,
    pub mechanism: String,
    pub analogy: String,
    pub distance: DistanceClass,
    pub query: String,
    /// Topic or subarea label given by the model for far and very-far queries.
    #[serde(default)]
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overarching {
    pub purpose: String,
    pub mechanism: String,
}

/// What the idea generator needs to know about the literature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdeationContext {
    pub topic: String,
    pub input_paper_ids: Vec<String>,
    pub very_near_ids: Vec<String>,
    /// Current representatives per analogous tier, at most four each.
    pub analogous: BTreeMap<DistanceClass, Vec<String>>,
    pub summary: String,
    pub overarching: Overarching,
    /// Every analogy query issued so far, oldest first.
    pub queries: Vec<AnalogousQuery>,
}

impl IdeationContext {
    pub fn tier(&self, distance: DistanceClass) -> &[String] {
        self.analogous.get(&distance).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Outcome of one analogy query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryHit {
    pub representative: PaperRecord,
    pub context: Vec<PaperRecord>,
    pub final_query: String,
    pub shortenings: usize,
}

/// Papers and facets to merge into a session. Papers come in commit order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FinderUpdate {
    pub papers: Vec<PaperRecord>,
    pub facets: Vec<Facet>,
    pub queries: Vec<AnalogousQuery>,
}

impl FinderUpdate {
    /// Ids of faceted papers at `distance`, in commit order.
    pub fn representatives(&self, distance: DistanceClass) -> Vec<String> {
        self.papers.iter().filter(|p| p.distance == distance && p.facets.is_some()).map(|p| p.corpus_id.clone()).collect()
    }
}

pub struct FacetFinder<'a> {
    corpus: &'a Corpus,
    llm: &'a LlmGateway,
}

impl<'a> FacetFinder<'a> {
    pub fn new(corpus: &'a Corpus, llm: &'a LlmGateway) -> Self {
        FacetFinder { corpus, llm }
    }

    /// Two papers from each recommendation pool, seeded by the inputs that
    /// have corpus ids, deduplicated against the inputs. A shortfall after
    /// deduplication triggers one larger request to the recent pool.
    pub async fn retrieve_very_near(&self, topic: &str, inputs: &[PaperRecord]) -> Result<Vec<PaperRecord>, FinderError> {
        if inputs.is_empty() {
            return Err(FinderError::NoInputPapers);
        }
        let seeds: Vec<String> = inputs.iter().filter(|p| !p.corpus_id.starts_with(USER_PREFIX)).map(|p| p.corpus_id.clone()).collect();
        let mut taken: HashSet<String> = inputs.iter().map(|p| p.corpus_id.clone()).collect();
        let fetch = |pool: CorpusFilter, limit: usize| {
            let seeds = seeds.clone();
            async move {
                if seeds.is_empty() {
                    self.corpus.search_papers(&CorpusQuery::new(topic, pool, limit)).await
                } else {
                    self.corpus.fetch_similar(&seeds, pool, limit).await
                }
            }
        };
        let target = 2 * VERY_NEAR_PER_POOL;
        let mut out = Vec::new();
        let mut empty = 0;
        for pool in [CorpusFilter::AllCs, CorpusFilter::Recent] {
            match fetch(pool, VERY_NEAR_PER_POOL).await {
                Ok(hits) => {
                    let upto = out.len() + VERY_NEAR_PER_POOL;
                    take_new(&mut out, &mut taken, hits, upto)
                }
                Err(CorpusError::EmptyResult) => empty += 1,
                Err(e) => return Err(e.into()),
            }
        }
        if empty == 2 {
            return Err(CorpusError::EmptyResult.into());
        }
        if out.len() < target {
            match fetch(CorpusFilter::Recent, target).await {
                Ok(hits) => take_new(&mut out, &mut taken, hits, target),
                Err(CorpusError::EmptyResult) => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(out.into_iter().map(|p| p.with_distance(DistanceClass::VeryNear)).collect())
    }

    pub async fn summarize(&self, papers: &[PaperRecord], facets: &BTreeMap<FacetId, Facet>) -> Result<String, FinderError> {
        if papers.is_empty() {
            return Err(FinderError::NoInputPapers);
        }
        let req = SummarizePapers { papers: papers.iter().map(|p| prompt_paper(p, facets)).collect() }.request();
        Ok(self.llm.call(&req, parse_summary).await?)
    }

    /// Facet extraction over the inputs' joined text; the first triple's
    /// purpose and mechanism.
    pub async fn derive_overarching(&self, inputs: &[PaperRecord]) -> Result<Overarching, FinderError> {
        if inputs.is_empty() {
            return Err(FinderError::NoInputPapers);
        }
        let text = inputs
            .iter()
            .map(|p| format!("Title: {}\nAbstract: {}", p.title, p.abstract_text))
            .collect::<Vec<_>>()
            .join("\n\n");
        let req = FacetExtraction { text: Some(text), papers: Vec::new() }.request();
        let drafts = self.llm.call(&req, parse_facet_extraction).await?;
        let first = &drafts[0];
        Ok(Overarching { purpose: first.purpose.text.clone(), mechanism: first.mechanism.text.clone() })
    }

    /// Four queries per analogous tier, avoiding every earlier query.
    pub async fn analogy_queries(
        &self,
        topic: &str,
        overarching: &Overarching,
        prior: &[String],
    ) -> Result<Vec<AnalogousQuery>, FinderError> {
        if topic.trim().is_empty() {
            return Err(FinderError::EmptyTopic);
        }
        let req = AnalogyQueries {
            purpose: overarching.purpose.clone(),
            mechanism: overarching.mechanism.clone(),
            previous_queries: prior.to_vec(),
            number: QUERIES_PER_TIER,
        }
        .request();
        let draft = self.llm.call(&req, |raw| parse_analogy_queries(raw, QUERIES_PER_TIER)).await?;
        let mut out = Vec::new();
        for (distance, group) in
            [(DistanceClass::Near, draft.near), (DistanceClass::Far, draft.far), (DistanceClass::VeryFar, draft.very_far)]
        {
            for a in group {
                if prior.iter().any(|p| p.eq_ignore_ascii_case(a.query.trim())) {
                    warn!(query = %a.query, "model repeated an earlier query");
                }
                out.push(AnalogousQuery {
                    purpose: a.purpose,
                    mechanism: a.mechanism,
                    analogy: a.analogy,
                    distance,
                    query: a.query,
                    context: a.context,
                });
            }
        }
        Ok(out)
    }

    /// Top four `all_cs` hits; on an empty result the query is shortened and
    /// retried, at most three times.
    pub async fn retrieve_for_query(&self, query: &str) -> Result<QueryHit, FinderError> {
        let mut current = query.trim().to_string();
        if current.is_empty() {
            return Err(CorpusError::InvalidRequest("empty query text".into()).into());
        }
        let mut shortenings = 0;
        loop {
            match self.corpus.search_papers(&CorpusQuery::new(current.clone(), CorpusFilter::AllCs, PAPERS_PER_QUERY)).await {
                Ok(mut hits) => {
                    let representative = hits.remove(0);
                    return Ok(QueryHit { representative, context: hits, final_query: current, shortenings });
                }
                Err(CorpusError::EmptyResult) if shortenings < MAX_SHORTENINGS => {
                    let req = ShortenQuery { query: current.clone() }.request();
                    let shorter = self.llm.call(&req, parse_shortened_query).await?;
                    if shorter.eq_ignore_ascii_case(&current) {
                        return Err(FinderError::ExhaustedShortenings(current));
                    }
                    info!(from = %current, to = %shorter, "shortened query");
                    current = shorter;
                    shortenings += 1;
                }
                Err(CorpusError::EmptyResult) => return Err(FinderError::ExhaustedShortenings(current)),
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// One validated facet triple per paper. A constraint query switches to
    /// the query-guided prompt.
    pub async fn extract_facets(
        &self,
        papers: &[PaperRecord],
        constraint: Option<&str>,
    ) -> Result<Vec<[ValidFacet; 3]>, FinderError> {
        let calls = papers.iter().map(|p| async move {
            let text = PaperText { title: p.title.clone(), abstract_text: p.abstract_text.clone() };
            let req = match constraint {
                Some(q) => QueryPaperFacets { papers: vec![text], query: q.to_string(), facet_type: None, query2: None, type2: None }.request(),
                None => FacetExtraction { text: None, papers: vec![text] }.request(),
            };
            self.llm.call(&req, |raw| validated_triples(raw, 1).map(|mut v| v.remove(0))).await
        });
        join_all(calls).await.into_iter().map(|r| r.map_err(FinderError::from)).collect()
    }

    /// Full initialization for a topic and resolved input papers.
    pub async fn initialize(
        &self,
        topic: &str,
        inputs: Vec<PaperRecord>,
        ids: &mut IdGen,
    ) -> Result<(IdeationContext, FinderUpdate), FinderError> {
        if topic.trim().is_empty() {
            return Err(FinderError::EmptyTopic);
        }
        if inputs.is_empty() {
            return Err(FinderError::NoInputPapers);
        }
        let inputs: Vec<PaperRecord> = inputs.into_iter().map(|p| p.with_distance(DistanceClass::Input)).collect();
        let very_near = self.retrieve_very_near(topic, &inputs).await?;
        let mut update = FinderUpdate::default();
        let near_set: Vec<PaperRecord> = inputs.iter().chain(&very_near).cloned().collect();
        let triples = self.extract_facets(&near_set, None).await?;
        for (paper, triple) in near_set.into_iter().zip(triples) {
            attach(&mut update, paper, triple, ids, None);
        }
        let by_id: BTreeMap<FacetId, Facet> = update.facets.iter().map(|f| (f.id.clone(), f.clone())).collect();
        let summary = self.summarize(&update.papers, &by_id).await?;
        let overarching = self.derive_overarching(&inputs).await?;
        let mut ctx = IdeationContext {
            topic: topic.to_string(),
            input_paper_ids: inputs.iter().map(|p| p.corpus_id.clone()).collect(),
            very_near_ids: very_near.iter().map(|p| p.corpus_id.clone()).collect(),
            analogous: BTreeMap::new(),
            summary,
            overarching,
            queries: Vec::new(),
        };
        let known: HashSet<String> = update.papers.iter().map(|p| p.corpus_id.clone()).collect();
        let more = self.analogous_round(&ctx, &known, ids).await?;
        ctx.queries.extend(more.queries.iter().cloned());
        for d in DistanceClass::ANALOGOUS {
            ctx.analogous.insert(d, more.representatives(d));
        }
        update.papers.extend(more.papers);
        update.facets.extend(more.facets);
        update.queries = more.queries;
        Ok((ctx, update))
    }

    /// New analogy queries, retrieval and extraction. `known` holds every
    /// corpus id already in the session.
    pub async fn analogous_round(
        &self,
        ctx: &IdeationContext,
        known: &HashSet<String>,
        ids: &mut IdGen,
    ) -> Result<FinderUpdate, FinderError> {
        let prior: Vec<String> = ctx.queries.iter().map(|q| q.query.clone()).collect();
        let queries = self.analogy_queries(&ctx.topic, &ctx.overarching, &prior).await?;
        let hits = join_all(queries.iter().map(|q| self.retrieve_for_query(&q.query))).await;

        // Commit order: near, far, very far, query order within a tier.
        // Representatives first so a paper never loses its slot to a context entry.
        let mut order: Vec<usize> = (0..queries.len()).collect();
        order.sort_by_key(|&i| (queries[i].distance, i));
        let mut taken = known.clone();
        let mut reps: Vec<(usize, PaperRecord, Vec<PaperRecord>)> = Vec::new();
        let mut hits: Vec<Option<Result<QueryHit, FinderError>>> = hits.into_iter().map(Some).collect();
        for &i in &order {
            match hits[i].take().expect("each hit visited once") {
                Ok(hit) => {
                    if !taken.insert(hit.representative.corpus_id.clone()) {
                        info!(paper = %hit.representative.corpus_id, query = %queries[i].query, "representative already present");
                        continue;
                    }
                    let mut rep = hit.representative.with_distance(queries[i].distance);
                    rep.relevant_query = Some(hit.final_query.clone());
                    reps.push((i, rep, hit.context));
                }
                Err(FinderError::ExhaustedShortenings(q)) => warn!(query = %q, "no paper for analogy query"),
                Err(e) => return Err(e),
            }
        }
        let mut contexts = Vec::new();
        for (i, rep, context) in reps.iter_mut() {
            for c in context.drain(..) {
                if taken.insert(c.corpus_id.clone()) {
                    rep.context_paper_ids.push(c.corpus_id.clone());
                    let mut c = c.with_distance(queries[*i].distance);
                    c.relevant_query = rep.relevant_query.clone();
                    contexts.push(c);
                }
            }
        }
        let papers: Vec<PaperRecord> = reps.into_iter().map(|(_, p, _)| p).collect();
        let triples = self.extract_facets(&papers, None).await?;
        let mut update = FinderUpdate { queries, ..Default::default() };
        for (paper, triple) in papers.into_iter().zip(triples) {
            attach(&mut update, paper, triple, ids, None);
        }
        update.papers.extend(contexts);
        Ok(update)
    }

    /// Four papers relevant to a user query (two per pool) with facets
    /// guided by the query.
    pub async fn facets_for_query(
        &self,
        query: &str,
        known: &HashSet<String>,
        ids: &mut IdGen,
    ) -> Result<FinderUpdate, FinderError> {
        let query = query.trim();
        if query.is_empty() {
            return Err(CorpusError::InvalidRequest("empty query text".into()).into());
        }
        if crate::domain::word_count(query) > crate::llm::parse::MAX_QUERY_WORDS {
            warn!(query, "facet query longer than five words");
        }
        let mut taken = known.clone();
        let mut papers = Vec::new();
        for (pool, limit) in [(CorpusFilter::AllCs, 2), (CorpusFilter::Recent, 2), (CorpusFilter::Recent, 4), (CorpusFilter::AllCs, 4)] {
            if papers.len() >= 2 * VERY_NEAR_PER_POOL {
                break;
            }
            let want = if limit == 2 { papers.len() + 2 } else { 2 * VERY_NEAR_PER_POOL };
            match self.corpus.search_papers(&CorpusQuery::new(query, pool, limit)).await {
                Ok(hits) => take_new(&mut papers, &mut taken, hits, want),
                Err(CorpusError::EmptyResult) => {}
                Err(e) => return Err(e.into()),
            }
        }
        if papers.is_empty() {
            return Err(CorpusError::EmptyResult.into());
        }
        let papers: Vec<PaperRecord> = papers
            .into_iter()
            .map(|p| {
                let mut p = p.with_distance(DistanceClass::Near);
                p.relevant_query = Some(query.to_string());
                p
            })
            .collect();
        let triples = self.extract_facets(&papers, Some(query)).await?;
        let mut update = FinderUpdate::default();
        for (paper, triple) in papers.into_iter().zip(triples) {
            attach(&mut update, paper, triple, ids, Some(query));
        }
        Ok(update)
    }
}

/// Prefix of ids minted for input papers the corpus does not know.
pub const USER_PREFIX: &str = "user-";

fn take_new(out: &mut Vec<PaperRecord>, taken: &mut HashSet<String>, hits: Vec<PaperRecord>, upto: usize) {
    for p in hits {
        if out.len() >= upto {
            break;
        }
        if taken.insert(p.corpus_id.clone()) {
            out.push(p);
        }
    }
}

fn attach(update: &mut FinderUpdate, mut paper: PaperRecord, triple: [ValidFacet; 3], ids: &mut IdGen, query: Option<&str>) {
    let provenance = match query {
        Some(q) => Provenance::QueryGenerated { query: q.to_string() },
        None => Provenance::Paper { paper_id: paper.corpus_id.clone(), distance: paper.distance },
    };
    let [p, m, e] = triple.map(|v| v.into_facet(ids, provenance.clone()));
    paper.facets = Some(FacetTriple { purpose: p.id.clone(), mechanism: m.id.clone(), evaluation: e.id.clone() });
    update.papers.push(paper);
    update.facets.extend([p, m, e]);
}

/// Parses an extraction answer and checks every facet rule.
pub fn validated_triples(raw: &str, expected: usize) -> Result<Vec<[ValidFacet; 3]>, ParseError> {
    let drafts = parse_facet_extraction(raw)?;
    if drafts.len() != expected {
        return Err(ParseError::MalformedBlock { block: drafts.len().min(expected) + 1, field: "text".into() });
    }
    drafts.iter().enumerate().map(|(i, d)| validate_triple(i + 1, d)).collect()
}

pub fn validate_triple(block: usize, d: &FacetTripleDraft) -> Result<[ValidFacet; 3], ParseError> {
    let check = |kind: FacetKind| {
        let f = d.get(kind);
        check_facet(kind, &f.text, &f.definition).map_err(|e| ParseError::Invalid { block, reason: format!("{kind}: {e}") })
    };
    Ok([check(FacetKind::Purpose)?, check(FacetKind::Mechanism)?, check(FacetKind::Evaluation)?])
}

/// A paper as shown to summary and idea prompts.
pub fn prompt_paper(p: &PaperRecord, facets: &BTreeMap<FacetId, Facet>) -> PromptPaper {
    let get = |id: Option<&FacetId>| {
        id.and_then(|id| facets.get(id)).map(|f| (f.text.clone(), f.id.to_string())).unwrap_or_default()
    };
    let t = p.facets.as_ref();
    let (purpose_text, purpose_id) = get(t.map(|t| &t.purpose));
    let (mechanism_text, mechanism_id) = get(t.map(|t| &t.mechanism));
    let (evaluation_text, evaluation_id) = get(t.map(|t| &t.evaluation));
    PromptPaper {
        stub: false,
        distance: p.distance.prompt_label().to_string(),
        theme: p.relevant_query.clone(),
        title: p.title.clone(),
        abstract_text: p.abstract_text.clone(),
        purpose_text,
        purpose_id,
        mechanism_text,
        mechanism_id,
        evaluation_text,
        evaluation_id,
    }
}
