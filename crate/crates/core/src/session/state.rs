use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Facet, FacetId, IdGen, Idea, NovelSuggestion, NoveltyAssessment, PaperRecord, UserOverride};
use crate::finder::IdeationContext;
use crate::ideas::{GenerationRound, SessionView};

/// Everything known about one ideation session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub topic: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub revision: u64,
    pub id_seed: u64,
    pub id_counter: u64,
    pub context: IdeationContext,
    pub papers: BTreeMap<String, PaperRecord>,
    pub facets: BTreeMap<FacetId, Facet>,
    pub ideas: BTreeMap<String, Idea>,
    /// Idea ids in creation order.
    pub idea_order: Vec<String>,
    pub assessments: BTreeMap<String, NoveltyAssessment>,
    pub rounds: Vec<GenerationRound>,
}

/// One state change. Events carry results, never requests, so replaying a
/// log needs no model or corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Created {
        session_id: String,
        topic: String,
        id_seed: u64,
        context: Box<IdeationContext>,
        papers: Vec<PaperRecord>,
        facets: Vec<Facet>,
    },
    FacetAdded {
        facet: Facet,
    },
    FacetsGenerated {
        papers: Vec<PaperRecord>,
        facets: Vec<Facet>,
        context: Box<IdeationContext>,
    },
    IdeasGenerated {
        round: GenerationRound,
        ideas: Vec<Idea>,
    },
    IdeaAdded {
        idea: Idea,
        facets: Vec<Facet>,
    },
    Assessed {
        assessment: Box<NoveltyAssessment>,
    },
    Overridden {
        idea_id: String,
        user_override: UserOverride,
    },
    SuggestionsAdded {
        idea_id: String,
        suggestions: Vec<NovelSuggestion>,
    },
    IdeaSaved {
        idea_id: String,
        saved: bool,
    },
    IdeaDeleted {
        idea_id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub revision: u64,
    pub at: DateTime<Utc>,
    /// Id counter after the change.
    pub id_counter: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// A pending change and the id counter it leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub struct Mutation {
    pub kind: EventKind,
    pub id_counter: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("event for revision {got} applied at revision {at}")]
    OutOfOrder { at: u64, got: u64 },
    #[error("the first event must create the session")]
    NotCreated,
    #[error("unknown idea `{0}`")]
    UnknownIdea(String),
    #[error("idea `{0}` has no assessment")]
    NotAssessed(String),
    #[error("dangling reference: {0}")]
    Dangling(String),
}

impl SessionState {
    /// The state a `Created` event produces.
    pub fn from_event(event: &SessionEvent) -> Result<Self, StateError> {
        let EventKind::Created { session_id, topic, id_seed, context, papers, facets } = &event.kind else {
            return Err(StateError::NotCreated);
        };
        if event.revision != 1 {
            return Err(StateError::OutOfOrder { at: 0, got: event.revision });
        }
        Ok(SessionState {
            session_id: session_id.clone(),
            topic: topic.clone(),
            created_at: event.at,
            updated_at: event.at,
            revision: 1,
            id_seed: *id_seed,
            id_counter: event.id_counter,
            context: (**context).clone(),
            papers: papers.iter().map(|p| (p.corpus_id.clone(), p.clone())).collect(),
            facets: facets.iter().map(|f| (f.id.clone(), f.clone())).collect(),
            ideas: BTreeMap::new(),
            idea_order: Vec::new(),
            assessments: BTreeMap::new(),
            rounds: Vec::new(),
        })
    }

    pub fn id_gen(&self) -> IdGen {
        IdGen::resume(self.id_seed, self.id_counter)
    }

    pub fn first_round(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Ideas in creation order.
    pub fn ordered_ideas(&self) -> Vec<Idea> {
        self.idea_order.iter().filter_map(|id| self.ideas.get(id)).cloned().collect()
    }

    pub fn idea(&self, id: &str) -> Result<&Idea, StateError> {
        self.ideas.get(id).ok_or_else(|| StateError::UnknownIdea(id.to_string()))
    }

    pub fn assessment(&self, idea_id: &str) -> Result<&NoveltyAssessment, StateError> {
        self.idea(idea_id)?;
        self.assessments.get(idea_id).ok_or_else(|| StateError::NotAssessed(idea_id.to_string()))
    }

    /// Runs `f` with a generator view of this state.
    pub fn with_view<T>(&self, f: impl FnOnce(&SessionView<'_>) -> T) -> T {
        let ideas = self.ordered_ideas();
        f(&SessionView { context: &self.context, papers: &self.papers, facets: &self.facets, ideas: &ideas })
    }

    /// Stamps a mutation with the next revision and applies it.
    pub fn commit(&mut self, mutation: Mutation, at: DateTime<Utc>) -> Result<SessionEvent, StateError> {
        let event = SessionEvent { revision: self.revision + 1, at, id_counter: mutation.id_counter, kind: mutation.kind };
        self.apply(&event)?;
        Ok(event)
    }

    pub fn apply(&mut self, event: &SessionEvent) -> Result<(), StateError> {
        if event.revision != self.revision + 1 {
            return Err(StateError::OutOfOrder { at: self.revision, got: event.revision });
        }
        match &event.kind {
            EventKind::Created { .. } => return Err(StateError::OutOfOrder { at: self.revision, got: 1 }),
            EventKind::FacetAdded { facet } => {
                self.facets.insert(facet.id.clone(), facet.clone());
            }
            EventKind::FacetsGenerated { papers, facets, context } => {
                self.add_papers(papers);
                self.add_facets(facets);
                self.context = (**context).clone();
            }
            EventKind::IdeasGenerated { round, ideas } => {
                for idea in ideas {
                    self.add_idea(idea.clone());
                }
                self.rounds.push(round.clone());
            }
            EventKind::IdeaAdded { idea, facets } => {
                self.add_facets(facets);
                self.add_idea(idea.clone());
            }
            EventKind::Assessed { assessment } => {
                self.idea(&assessment.idea_id)?;
                self.assessments.insert(assessment.idea_id.clone(), (**assessment).clone());
            }
            EventKind::Overridden { idea_id, user_override } => {
                self.assessment(idea_id)?;
                let a = self.assessments.get_mut(idea_id).expect("checked");
                a.user_override = Some(user_override.clone());
            }
            EventKind::SuggestionsAdded { idea_id, suggestions } => {
                self.assessment(idea_id)?;
                self.assessments.get_mut(idea_id).expect("checked").suggestions = suggestions.clone();
            }
            EventKind::IdeaSaved { idea_id, saved } => {
                self.idea(idea_id)?;
                self.ideas.get_mut(idea_id).expect("checked").saved = *saved;
            }
            EventKind::IdeaDeleted { idea_id } => {
                self.idea(idea_id)?;
                self.ideas.remove(idea_id);
                self.idea_order.retain(|i| i != idea_id);
                self.assessments.remove(idea_id);
                for r in &mut self.rounds {
                    r.produced_idea_ids.retain(|i| i != idea_id);
                }
            }
        }
        self.revision = event.revision;
        self.updated_at = event.at;
        self.id_counter = event.id_counter;
        Ok(())
    }

    fn add_papers(&mut self, papers: &[PaperRecord]) {
        for p in papers {
            self.papers.entry(p.corpus_id.clone()).or_insert_with(|| p.clone());
        }
    }

    fn add_facets(&mut self, facets: &[Facet]) {
        for f in facets {
            self.facets.insert(f.id.clone(), f.clone());
        }
    }

    fn add_idea(&mut self, idea: Idea) {
        if !self.ideas.contains_key(&idea.id) {
            self.idea_order.push(idea.id.clone());
        }
        self.ideas.insert(idea.id.clone(), idea);
    }

    /// Every id the state refers to exists.
    pub fn check_integrity(&self) -> Result<(), StateError> {
        let dangling = |what: String| Err(StateError::Dangling(what));
        for p in self.papers.values() {
            if let Some(t) = &p.facets {
                if let Some(id) = t.ids().into_iter().find(|id| !self.facets.contains_key(*id)) {
                    return dangling(format!("paper {} facet {id}", p.corpus_id));
                }
            }
            if let Some(c) = p.context_paper_ids.iter().find(|c| !self.papers.contains_key(*c)) {
                return dangling(format!("paper {} context {c}", p.corpus_id));
            }
        }
        let ctx = &self.context;
        let tiers = ctx.analogous.values().flatten();
        if let Some(id) = ctx.input_paper_ids.iter().chain(&ctx.very_near_ids).chain(tiers).find(|id| !self.papers.contains_key(*id)) {
            return dangling(format!("context paper {id}"));
        }
        if self.idea_order.len() != self.ideas.len() || self.idea_order.iter().any(|id| !self.ideas.contains_key(id)) {
            return dangling("idea order".into());
        }
        for idea in self.ideas.values() {
            if let Some(id) = idea.facet_ids().into_iter().find(|id| !self.facets.contains_key(*id)) {
                return dangling(format!("idea {} facet {id}", idea.id));
            }
        }
        for (idea_id, a) in &self.assessments {
            if !self.ideas.contains_key(idea_id) || &a.idea_id != idea_id {
                return dangling(format!("assessment {idea_id}"));
            }
            for s in &a.suggestions {
                for id in [&s.removed_facet_id, &s.added_facet_id] {
                    if !self.facets.contains_key(id) {
                        return dangling(format!("suggestion facet {id}"));
                    }
                }
            }
        }
        for r in &self.rounds {
            if let Some(id) = r.produced_idea_ids.iter().find(|id| !self.ideas.contains_key(*id)) {
                return dangling(format!("round idea {id}"));
            }
            if let Some(id) = r.evaluation_options.iter().find(|id| !self.facets.contains_key(*id)) {
                return dangling(format!("round evaluation {id}"));
            }
        }
        Ok(())
    }
}
