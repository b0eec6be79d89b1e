//! Domain types shared by every pipeline stage. All of them are plain values
//! with snake_case JSON forms.

mod facet;
mod idea;
mod ids;
mod kinds;
mod novelty;
mod paper;

pub use facet::{
    check_facet, sentence_count, validate_facet, word_count, Facet, FacetId, FacetValidationError,
    Provenance, ValidFacet, MAX_DEFINITION_SENTENCES, MAX_FACET_WORDS,
};
pub use idea::{Idea, IdeaError, IdeaParts, Situation, EXPANDED_IDEA_WORDS, SHORT_IDEA_WORDS};
pub use ids::{stable_hash, IdGen};
pub use kinds::{DistanceClass, FacetKind};
pub use novelty::{
    citations, Classification, NovelSuggestion, NoveltyAssessment, NoveltyConfig, UserOverride,
};
pub use paper::{FacetTriple, PaperRecord};
