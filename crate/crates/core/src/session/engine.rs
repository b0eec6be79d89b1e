use std::collections::HashSet;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use super::state::{EventKind, Mutation, SessionEvent, SessionState, StateError};
use super::store::{SessionDir, StoreError};
use crate::corpus::{Corpus, CorpusError, CorpusFilter, CorpusQuery, FixtureStore, HttpCorpusBackend};
use crate::domain::{
    stable_hash, validate_facet, Classification, DistanceClass, FacetKind, FacetValidationError, IdGen, Idea,
    IdeaParts, NoveltyAssessment, NoveltyConfig, PaperRecord, Provenance, UserOverride,
};
use crate::finder::{FacetFinder, FinderError, USER_PREFIX};
use crate::ideas::{FacetSelection, IdeaGenError, IdeaGenerator, SessionView};
use crate::llm::{LlmError, LlmGateway, OpenAiProvider, ReplayStore};
use crate::novelty::{
    builtin_examples, idea_text, load_examples, paper_text, sample_examples, LabeledExample, NoveltyChecker,
    NoveltyError, Variant,
};
use crate::offline;

pub const MAX_INPUT_PAPERS: usize = 5;

/// Timestamp used in replay and offline modes so that runs are byte-identical.
pub fn fixed_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    System,
    Fixed(DateTime<Utc>),
}

impl Clock {
    pub fn now(self) -> DateTime<Utc> {
        match self {
            Clock::System => Utc::now(),
            Clock::Fixed(t) => t,
        }
    }
}

/// How the engine reaches the corpus and the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Live,
    #[default]
    Replay,
    Record,
    /// The built-in simulated catalog and scripted model.
    Offline,
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(RunMode::Live),
            "replay" => Ok(RunMode::Replay),
            "record" => Ok(RunMode::Record),
            "offline" => Ok(RunMode::Offline),
            other => Err(format!("unknown mode `{other}` (live, replay, record, offline)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub mode: RunMode,
    /// Holds `corpus/` and `llm/` fixture directories.
    pub fixtures_dir: PathBuf,
    pub seed: u64,
    pub corpus_base_url: Option<String>,
    pub llm_base_url: Option<String>,
    pub general_model: Option<String>,
    pub reasoning_model: Option<String>,
    /// Labeled ideas for in-context examples; the built-in set when unset.
    pub labeled_examples: Option<PathBuf>,
    pub novelty: NoveltyConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mode: RunMode::Replay,
            fixtures_dir: PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures")),
            seed: 0,
            corpus_base_url: None,
            llm_base_url: None,
            general_model: None,
            reasoning_model: None,
            labeled_examples: None,
            novelty: NoveltyConfig::default(),
        }
    }
}

/// Error classes map one-to-one onto HTTP statuses and CLI exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("upstream failure: {message}")]
    Upstream { message: String, partial: bool },
    #[error("internal error: {0}")]
    Internal(String),
}

impl EngineError {
    fn upstream(e: impl std::fmt::Display) -> Self {
        EngineError::Upstream { message: e.to_string(), partial: false }
    }
}

impl From<FinderError> for EngineError {
    fn from(e: FinderError) -> Self {
        match e {
            FinderError::NoInputPapers | FinderError::EmptyTopic | FinderError::Corpus(CorpusError::InvalidRequest(_)) => {
                EngineError::Invalid(e.to_string())
            }
            FinderError::Corpus(CorpusError::EmptyResult) => EngineError::Invalid("no new papers found".into()),
            _ => EngineError::upstream(e),
        }
    }
}

impl From<IdeaGenError> for EngineError {
    fn from(e: IdeaGenError) -> Self {
        match e {
            IdeaGenError::UnknownFacet(_)
            | IdeaGenError::WrongKind { .. }
            | IdeaGenError::InstructionsTooLong
            | IdeaGenError::EmptyIdeaText
            | IdeaGenError::EmptyTier(_) => EngineError::Invalid(e.to_string()),
            IdeaGenError::Llm(_) | IdeaGenError::Idea(_) => EngineError::upstream(e),
        }
    }
}

impl From<NoveltyError> for EngineError {
    fn from(e: NoveltyError) -> Self {
        match e {
            NoveltyError::EmptyIdea => EngineError::Invalid(e.to_string()),
            NoveltyError::IdeaIsNovel => EngineError::Conflict(e.to_string()),
            _ => EngineError::upstream(e),
        }
    }
}

impl From<StateError> for EngineError {
    fn from(e: StateError) -> Self {
        match e {
            StateError::UnknownIdea(_) => EngineError::NotFound(e.to_string()),
            StateError::NotAssessed(_) => EngineError::Conflict(e.to_string()),
            _ => EngineError::Internal(e.to_string()),
        }
    }
}

impl From<StoreError> for EngineError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Missing(_) => EngineError::NotFound(e.to_string()),
            _ => EngineError::Internal(e.to_string()),
        }
    }
}

impl From<FacetValidationError> for EngineError {
    fn from(e: FacetValidationError) -> Self {
        EngineError::Invalid(e.to_string())
    }
}

impl From<CorpusError> for EngineError {
    fn from(e: CorpusError) -> Self {
        EngineError::upstream(e)
    }
}

impl From<LlmError> for EngineError {
    fn from(e: LlmError) -> Self {
        EngineError::upstream(e)
    }
}

/// An input paper: a corpus id, or a title and abstract.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperInput {
    #[serde(default)]
    pub corpus_id: Option<String>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default, rename = "abstract")]
    pub abstract_text: Option<String>,
}

impl PaperInput {
    pub fn id(id: impl Into<String>) -> Self {
        PaperInput { corpus_id: Some(id.into()), ..Default::default() }
    }

    pub fn text(title: impl Into<String>, abstract_text: impl Into<String>) -> Self {
        PaperInput { corpus_id: None, title: Some(title.into()), abstract_text: Some(abstract_text.into()) }
    }

    fn key(&self) -> String {
        match &self.corpus_id {
            Some(id) => id.trim().to_string(),
            None => format!("{}\n{}", norm(self.title.as_deref().unwrap_or("")), norm(self.abstract_text.as_deref().unwrap_or(""))),
        }
    }
}

fn norm(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

pub struct Engine {
    corpus: Arc<Corpus>,
    llm: Arc<LlmGateway>,
    novelty: NoveltyConfig,
    examples: Arc<Vec<LabeledExample>>,
    seed: u64,
    clock: Clock,
}

impl Engine {
    pub fn new(corpus: Arc<Corpus>, llm: Arc<LlmGateway>) -> Self {
        Engine {
            corpus,
            llm,
            novelty: NoveltyConfig::default(),
            examples: Arc::new(builtin_examples().to_vec()),
            seed: 0,
            clock: Clock::System,
        }
    }

    /// Corpus and gateway for `config.mode`.
    pub fn from_config(config: &EngineConfig) -> Result<Self, EngineError> {
        config.novelty.validate().map_err(EngineError::Invalid)?;
        let corpus_store = || FixtureStore::new(config.fixtures_dir.join("corpus"));
        let llm_store = || ReplayStore::new(config.fixtures_dir.join("llm"));
        let http = || {
            let mut b = HttpCorpusBackend::from_env();
            if let Some(url) = &config.corpus_base_url {
                b = HttpCorpusBackend::new(url.clone(), std::env::var("CORPUS_API_KEY").ok().filter(|k| !k.is_empty()));
            }
            Arc::new(b)
        };
        let provider = || {
            let mut p = OpenAiProvider::from_env();
            if let Some(url) = &config.llm_base_url {
                p = OpenAiProvider::new(url.clone(), std::env::var("LLM_API_KEY").ok().filter(|k| !k.is_empty()));
            }
            if let (Some(g), Some(r)) = (&config.general_model, &config.reasoning_model) {
                p = p.with_models(g.clone(), r.clone());
            }
            Arc::new(p)
        };
        let (corpus, llm, clock) = match config.mode {
            RunMode::Live => (Corpus::live(http()), LlmGateway::live(provider()), Clock::System),
            RunMode::Replay => (Corpus::replay(corpus_store()), LlmGateway::replay(llm_store()), Clock::Fixed(fixed_epoch())),
            RunMode::Record => {
                (Corpus::record(http(), corpus_store()), LlmGateway::record(provider(), llm_store()), Clock::System)
            }
            RunMode::Offline => (offline::corpus(), offline::gateway(), Clock::Fixed(fixed_epoch())),
        };
        let examples = match &config.labeled_examples {
            Some(path) => load_examples(path).map_err(EngineError::Invalid)?,
            None => builtin_examples().to_vec(),
        };
        Ok(Engine::new(Arc::new(corpus), Arc::new(llm))
            .with_novelty(config.novelty.clone())
            .with_examples(examples)
            .with_seed(config.seed)
            .with_clock(clock))
    }

    pub fn with_novelty(mut self, config: NoveltyConfig) -> Self {
        self.novelty = config;
        self
    }

    pub fn with_examples(mut self, examples: Vec<LabeledExample>) -> Self {
        self.examples = Arc::new(examples);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn llm(&self) -> &LlmGateway {
        &self.llm
    }

    pub fn novelty_config(&self) -> &NoveltyConfig {
        &self.novelty
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn checker(&self) -> NoveltyChecker<'_> {
        NoveltyChecker::new(&self.corpus, &self.llm, self.novelty.clone())
    }

    /// Applies a mutation and appends it to the session's log.
    pub fn commit(
        &self,
        state: &mut SessionState,
        mutation: Mutation,
        dir: Option<&SessionDir>,
    ) -> Result<SessionEvent, EngineError> {
        let event = state.commit(mutation, self.clock.now())?;
        if let Some(dir) = dir {
            dir.append(&event, state)?;
        }
        Ok(event)
    }

    /// Resolves the input papers and runs facet initialization.
    pub async fn create(&self, topic: &str, inputs: &[PaperInput]) -> Result<(SessionState, SessionEvent), EngineError> {
        let topic = topic.split_whitespace().collect::<Vec<_>>().join(" ");
        if topic.is_empty() {
            return Err(EngineError::Invalid("topic is empty".into()));
        }
        if inputs.is_empty() || inputs.len() > MAX_INPUT_PAPERS {
            return Err(EngineError::Invalid(format!("expected 1 to {MAX_INPUT_PAPERS} input papers, got {}", inputs.len())));
        }
        let mut papers = Vec::new();
        for input in inputs {
            let p = self.resolve(input).await?;
            if papers.iter().any(|q: &PaperRecord| q.corpus_id == p.corpus_id) {
                return Err(EngineError::Invalid(format!("input paper `{}` given twice", p.corpus_id)));
            }
            papers.push(p);
        }
        let refs: Vec<String> = inputs.iter().map(PaperInput::key).collect();
        let session_id = format!("s-{:012x}", stable_hash(&format!("{}|{topic}|{}", self.seed, refs.join("|"))) >> 16);
        let id_seed = stable_hash(&format!("{}|{session_id}", self.seed));
        let mut ids = IdGen::new(id_seed);
        let (context, update) = FacetFinder::new(&self.corpus, &self.llm).initialize(&topic, papers, &mut ids).await?;
        let event = SessionEvent {
            revision: 1,
            at: self.clock.now(),
            id_counter: ids.counter,
            kind: EventKind::Created {
                session_id,
                topic,
                id_seed,
                context: Box::new(context),
                papers: update.papers,
                facets: update.facets,
            },
        };
        let state = SessionState::from_event(&event)?;
        Ok((state, event))
    }

    async fn resolve(&self, input: &PaperInput) -> Result<PaperRecord, EngineError> {
        if let Some(id) = input.corpus_id.as_deref().map(str::trim).filter(|s| !s.is_empty()) {
            return match self.corpus.get_paper(id).await {
                Ok(p) if p.is_usable() => Ok(p.with_distance(DistanceClass::Input)),
                Ok(_) => Err(EngineError::Invalid(format!("paper `{id}` has no title or abstract"))),
                Err(CorpusError::EmptyResult) => Err(EngineError::Invalid(format!("unknown corpus id `{id}`"))),
                Err(e) => Err(e.into()),
            };
        }
        let title = input.title.as_deref().map(str::trim).unwrap_or("");
        let abstract_text = input.abstract_text.as_deref().map(str::trim).unwrap_or("");
        if title.is_empty() || abstract_text.is_empty() {
            return Err(EngineError::Invalid("each input paper needs a corpus id or a title and abstract".into()));
        }
        match self.corpus.search_papers(&CorpusQuery::new(title, CorpusFilter::AllCs, 5)).await {
            Ok(hits) => {
                if let Some(p) = hits.into_iter().find(|p| norm(&p.title) == norm(title) && p.is_usable()) {
                    return Ok(p.with_distance(DistanceClass::Input));
                }
            }
            Err(CorpusError::EmptyResult) => {}
            Err(e) => return Err(e.into()),
        }
        let id = format!("{USER_PREFIX}{:012x}", stable_hash(&input.key()) >> 16);
        Ok(PaperRecord::new(id, title, abstract_text, DistanceClass::Input))
    }

    pub fn add_facet(&self, state: &SessionState, kind: FacetKind, text: &str, definition: &str) -> Result<Mutation, EngineError> {
        let mut ids = state.id_gen();
        let facet = validate_facet(kind, text, definition, Provenance::UserAdded, &mut ids)?;
        Ok(Mutation { kind: EventKind::FacetAdded { facet }, id_counter: ids.counter })
    }

    /// Facets for a user query, or a fresh round of analogous papers when
    /// no query is given.
    pub async fn generate_facets(&self, state: &SessionState, query: Option<&str>) -> Result<Mutation, EngineError> {
        let finder = FacetFinder::new(&self.corpus, &self.llm);
        let known: HashSet<String> = state.papers.keys().cloned().collect();
        let mut ids = state.id_gen();
        let mut context = state.context.clone();
        let update = match query.map(str::trim).filter(|q| !q.is_empty()) {
            Some(q) => finder.facets_for_query(q, &known, &mut ids).await?,
            None => {
                let update = finder.analogous_round(&context, &known, &mut ids).await?;
                context.queries.extend(update.queries.iter().cloned());
                for d in DistanceClass::ANALOGOUS {
                    let reps = update.representatives(d);
                    if !reps.is_empty() {
                        context.analogous.insert(d, reps);
                    }
                }
                update
            }
        };
        Ok(Mutation {
            kind: EventKind::FacetsGenerated { papers: update.papers, facets: update.facets, context: Box::new(context) },
            id_counter: ids.counter,
        })
    }

    pub async fn generate_ideas(&self, state: &SessionState, selection: &FacetSelection) -> Result<Mutation, EngineError> {
        let ideas = state.ordered_ideas();
        let view = SessionView { context: &state.context, papers: &state.papers, facets: &state.facets, ideas: &ideas };
        let mut ids = state.id_gen();
        let (round, ideas) = IdeaGenerator::new(&self.llm).generate(selection, state.first_round(), &view, &mut ids).await?;
        Ok(Mutation { kind: EventKind::IdeasGenerated { round, ideas }, id_counter: ids.counter })
    }

    /// Records a user-written idea with facets extracted from its text.
    pub async fn add_idea(&self, state: &SessionState, text: &str) -> Result<Mutation, EngineError> {
        let mut ids = state.id_gen();
        let (idea, facets) = IdeaGenerator::new(&self.llm).extract_idea_facets(text, &mut ids).await?;
        Ok(Mutation { kind: EventKind::IdeaAdded { idea, facets }, id_counter: ids.counter })
    }

    /// Retrieval, ranking and classification, with suggestions for a
    /// not-novel verdict. A suggestion failure leaves the list empty.
    pub async fn assess(&self, state: &SessionState, idea_id: &str, variant: Variant) -> Result<Mutation, EngineError> {
        let idea = state.idea(idea_id)?;
        let text = idea_text(idea);
        let checker = self.checker();
        let session_papers: Vec<PaperRecord> = state.papers.values().filter(|p| p.is_usable()).cloned().collect();
        let candidates = checker.gather_candidates(idea_id, text, &session_papers).await?;
        let ranked = checker.run_variant(text, &candidates, variant).await?;
        let relevant: Vec<PaperRecord> = ranked.top_k.iter().filter_map(|id| candidates.paper(id)).cloned().collect();
        let texts: Vec<_> = relevant.iter().map(paper_text).collect();
        let examples = sample_examples(&self.examples, self.novelty.examples_per_class, self.novelty.example_seed, Some(text));
        let draft = checker.classify(text, &texts, &examples).await?;
        let suggestions = if draft.classification == Classification::NotNovel {
            match checker.suggest_more_novel(&state.topic, idea, draft.classification, &texts, &draft.review, &state.facets).await
            {
                Ok(s) => s,
                Err(e) => {
                    warn!(idea = idea_id, error = %e, "suggestions failed; they can be requested again");
                    Vec::new()
                }
            }
        } else {
            Vec::new()
        };
        let assessment = NoveltyAssessment {
            idea_id: idea_id.to_string(),
            relevant_papers: relevant,
            classification: draft.classification,
            review: draft.review,
            user_override: None,
            suggestions,
        };
        Ok(Mutation { kind: EventKind::Assessed { assessment: Box::new(assessment) }, id_counter: state.id_counter })
    }

    pub fn override_novelty(
        &self,
        state: &SessionState,
        idea_id: &str,
        classification: Classification,
        reason: &str,
    ) -> Result<Mutation, EngineError> {
        state.assessment(idea_id)?;
        let user_override = UserOverride { classification, reason: reason.trim().to_string() };
        Ok(Mutation { kind: EventKind::Overridden { idea_id: idea_id.to_string(), user_override }, id_counter: state.id_counter })
    }

    /// Suggestions for an effectively not-novel idea. `None` when the
    /// assessment already holds them.
    pub async fn suggestions(&self, state: &SessionState, idea_id: &str) -> Result<Option<Mutation>, EngineError> {
        let idea = state.idea(idea_id)?;
        let a = state.assessment(idea_id)?;
        if a.effective_classification() != Classification::NotNovel {
            return Err(EngineError::Conflict(format!("idea `{idea_id}` is classified novel")));
        }
        if !a.suggestions.is_empty() {
            return Ok(None);
        }
        let texts: Vec<_> = a.relevant_papers.iter().map(paper_text).collect();
        let suggestions = self
            .checker()
            .suggest_more_novel(&state.topic, idea, Classification::NotNovel, &texts, a.effective_review(), &state.facets)
            .await?;
        Ok(Some(Mutation {
            kind: EventKind::SuggestionsAdded { idea_id: idea_id.to_string(), suggestions },
            id_counter: state.id_counter,
        }))
    }

    /// Turns suggestion `index` into a new idea.
    pub fn adopt_suggestion(&self, state: &SessionState, idea_id: &str, index: usize) -> Result<Mutation, EngineError> {
        let idea = state.idea(idea_id)?;
        let a = state.assessment(idea_id)?;
        if a.effective_classification() != Classification::NotNovel {
            return Err(EngineError::Conflict(format!("idea `{idea_id}` is classified novel")));
        }
        let s = a
            .suggestions
            .get(index)
            .ok_or_else(|| EngineError::NotFound(format!("idea `{idea_id}` has no suggestion {index}")))?;
        let mut ids = state.id_gen();
        let swap = |kind: FacetKind| {
            if kind == s.kind {
                s.added_facet_id.clone()
            } else {
                idea.facet_id(kind).clone()
            }
        };
        let new = Idea::build(
            IdeaParts {
                id: ids.next_id("idea"),
                short_text: s.idea_text.clone(),
                expanded_text: s.idea_text.clone(),
                purpose_id: swap(FacetKind::Purpose),
                mechanism_id: swap(FacetKind::Mechanism),
                evaluation_id: swap(FacetKind::Evaluation),
                analogy: String::new(),
                situation: None,
                group_distances: Default::default(),
                custom_instructions_used: None,
            },
            &state.facets,
        )
        .map_err(|e| EngineError::Internal(e.to_string()))?;
        Ok(Mutation { kind: EventKind::IdeaAdded { idea: new, facets: Vec::new() }, id_counter: ids.counter })
    }

    pub fn save_idea(&self, state: &SessionState, idea_id: &str, saved: bool) -> Result<Mutation, EngineError> {
        state.idea(idea_id)?;
        Ok(Mutation { kind: EventKind::IdeaSaved { idea_id: idea_id.to_string(), saved }, id_counter: state.id_counter })
    }

    pub fn delete_idea(&self, state: &SessionState, idea_id: &str) -> Result<Mutation, EngineError> {
        state.idea(idea_id)?;
        Ok(Mutation { kind: EventKind::IdeaDeleted { idea_id: idea_id.to_string() }, id_counter: state.id_counter })
    }
}
