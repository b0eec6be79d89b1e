use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ids::IdGen;
use super::kinds::{DistanceClass, FacetKind};

/// Hard upper bound on facet phrase length, in whitespace-separated words.
pub const MAX_FACET_WORDS: usize = 7;
/// Definitions are at most this many sentences.
pub const MAX_DEFINITION_SENTENCES: usize = 2;

/// Count of maximal whitespace-separated tokens.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Number of sentences, where a sentence ends at `.`, `!` or `?`.
///
/// Trailing text without terminal punctuation counts as one more sentence.
pub fn sentence_count(text: &str) -> usize {
    let mut count = 0;
    let mut pending = false;
    let mut chars = text.trim().chars().peekable();
    while let Some(c) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            // runs like "?!" or "..." close a single sentence
            while matches!(chars.peek(), Some('.' | '!' | '?')) {
                chars.next();
            }
            if pending {
                count += 1;
            }
            pending = false;
        } else if !c.is_whitespace() {
            pending = true;
        }
    }
    if pending {
        count += 1;
    }
    count
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FacetValidationError {
    #[error("facet text is empty")]
    EmptyText,
    #[error("facet text has {0} words (max {MAX_FACET_WORDS})")]
    TooManyWords(usize),
    #[error("purpose facets must begin with \"to \"")]
    MissingLeadingTo,
    #[error("facet definition is empty")]
    EmptyDefinition,
    #[error("facet definition has {0} sentences (max {MAX_DEFINITION_SENTENCES})")]
    DefinitionTooLong(usize),
}

/// Opaque facet identifier of shape `<kind>-<slug>-<nonce>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FacetId(String);

impl FacetId {
    pub fn new(kind: FacetKind, text: &str, nonce: &str) -> Self {
        FacetId(format!("{}-{}-{}", kind.as_str(), slug(text), nonce))
    }

    /// Wraps an id string without checking its shape.
    pub fn from_raw(raw: impl Into<String>) -> Self {
        FacetId(raw.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The kind embedded in the id prefix, if the id is well-formed.
    pub fn kind(&self) -> Option<FacetKind> {
        let (prefix, rest) = self.0.split_once('-')?;
        if rest.is_empty() {
            return None;
        }
        prefix.parse().ok()
    }
}

impl fmt::Display for FacetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Up to 8 lowercase ASCII alphanumerics taken from the facet text, skipping a leading "to".
fn slug(text: &str) -> String {
    let mut words = text.split_whitespace().peekable();
    if words.peek().is_some_and(|w| w.eq_ignore_ascii_case("to")) {
        words.next();
    }
    let slug: String = words
        .flat_map(|w| w.chars())
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .take(8)
        .collect();
    if slug.is_empty() {
        "facet".to_string()
    } else {
        slug
    }
}

/// Where a facet came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Paper { paper_id: String, distance: DistanceClass },
    UserAdded,
    QueryGenerated { query: String },
    IdeaExtracted { idea_id: String },
}

impl Provenance {
    pub fn paper_id(&self) -> Option<&str> {
        match self {
            Provenance::Paper { paper_id, .. } => Some(paper_id),
            _ => None,
        }
    }
}

/// One purpose, mechanism or evaluation unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    pub id: FacetId,
    pub kind: FacetKind,
    pub text: String,
    pub definition: String,
    pub provenance: Provenance,
}

/// Facet content that passed validation but has no id or provenance yet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidFacet {
    pub kind: FacetKind,
    pub text: String,
    pub definition: String,
}

impl ValidFacet {
    pub fn into_facet(self, ids: &mut IdGen, provenance: Provenance) -> Facet {
        let id = FacetId::new(self.kind, &self.text, &ids.next_nonce());
        Facet { id, kind: self.kind, text: self.text, definition: self.definition, provenance }
    }
}

/// Checks the hard facet rules: at most seven words, purposes start with "to ",
/// definitions are one or two sentences.
pub fn check_facet(kind: FacetKind, text: &str, definition: &str) -> Result<ValidFacet, FacetValidationError> {
    let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if text.is_empty() {
        return Err(FacetValidationError::EmptyText);
    }
    let words = word_count(&text);
    if words > MAX_FACET_WORDS {
        return Err(FacetValidationError::TooManyWords(words));
    }
    if kind == FacetKind::Purpose {
        let lower = text.to_ascii_lowercase();
        if lower != "to" && !lower.starts_with("to ") {
            return Err(FacetValidationError::MissingLeadingTo);
        }
    }
    let definition = definition.trim();
    if definition.is_empty() {
        return Err(FacetValidationError::EmptyDefinition);
    }
    let sentences = sentence_count(definition);
    if sentences > MAX_DEFINITION_SENTENCES {
        return Err(FacetValidationError::DefinitionTooLong(sentences));
    }
    Ok(ValidFacet { kind, text, definition: definition.to_string() })
}

/// Validates and mints a facet with a fresh id.
pub fn validate_facet(
    kind: FacetKind,
    text: &str,
    definition: &str,
    provenance: Provenance,
    ids: &mut IdGen,
) -> Result<Facet, FacetValidationError> {
    Ok(check_facet(kind, text, definition)?.into_facet(ids, provenance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids() -> IdGen {
        IdGen::new(7)
    }

    #[test]
    fn word_count_examples() {
        assert_eq!(word_count(""), 0);
        assert_eq!(word_count("to support elementary creative writing"), 5);
        assert_eq!(word_count("  a   b "), 2);
    }

    #[test]
    fn accepts_agent_system_mechanism() {
        let f = validate_facet(
            FacetKind::Mechanism,
            "large language model-based agent system",
            "A system of cooperating programs driven by a text generator.",
            Provenance::UserAdded,
            &mut ids(),
        )
        .unwrap();
        assert_eq!(word_count(&f.text), 5);
        assert_eq!(f.id.kind(), Some(FacetKind::Mechanism));
    }

    #[test]
    fn minimal_purpose_is_accepted() {
        let f = validate_facet(FacetKind::Purpose, "to", "x.", Provenance::UserAdded, &mut ids()).unwrap();
        assert_eq!(f.text, "to");
    }

    #[test]
    fn eight_words_rejected() {
        let err = validate_facet(
            FacetKind::Mechanism,
            "a b c d e f g h",
            "x.",
            Provenance::UserAdded,
            &mut ids(),
        )
        .unwrap_err();
        assert_eq!(err, FacetValidationError::TooManyWords(8));
    }

    #[test]
    fn purpose_needs_leading_to_and_definition() {
        assert_eq!(
            check_facet(FacetKind::Purpose, "support writing", "x.").unwrap_err(),
            FacetValidationError::MissingLeadingTo
        );
        assert!(check_facet(FacetKind::Purpose, "To support writing", "x.").is_ok());
        assert!(check_facet(FacetKind::Purpose, "tomorrow's tools", "x.").is_err());
        assert_eq!(
            check_facet(FacetKind::Evaluation, "user study", "  ").unwrap_err(),
            FacetValidationError::EmptyDefinition
        );
        assert_eq!(
            check_facet(FacetKind::Evaluation, "user study", "One. Two. Three.").unwrap_err(),
            FacetValidationError::DefinitionTooLong(3)
        );
    }

    #[test]
    fn sentence_counting() {
        assert_eq!(sentence_count("One sentence."), 1);
        assert_eq!(sentence_count("One. Two?"), 2);
        assert_eq!(sentence_count("No terminal punctuation"), 1);
        assert_eq!(sentence_count("Wait... what?!"), 2);
        // abbreviations are not special-cased
        assert_eq!(sentence_count("e.g. this"), 3);
    }

    #[test]
    fn id_embeds_kind_and_slug() {
        let id = FacetId::new(FacetKind::Purpose, "to support elementary creative writing", "123456789");
        assert_eq!(id.as_str(), "purpose-supporte-123456789");
        assert_eq!(id.kind(), Some(FacetKind::Purpose));
        assert_eq!(FacetId::from_raw("n/a").kind(), None);
    }

    proptest! {
        #[test]
        fn valid_facets_have_at_most_seven_words(words in proptest::collection::vec("[a-z]{1,8}", 1..12)) {
            let text = words.join(" ");
            match check_facet(FacetKind::Mechanism, &text, "A definition.") {
                Ok(f) => prop_assert!(word_count(&f.text) <= MAX_FACET_WORDS),
                Err(e) => prop_assert_eq!(e, FacetValidationError::TooManyWords(words.len())),
            }
        }

        #[test]
        fn id_round_trips_kind(kind_idx in 0usize..3, words in proptest::collection::vec("[a-zA-Z0-9-]{1,6}", 1..7), seed in any::<u64>()) {
            let kind = FacetKind::ALL[kind_idx];
            let text = if kind == FacetKind::Purpose { format!("to {}", words.join(" ")) } else { words.join(" ") };
            if let Ok(v) = check_facet(kind, &text, "Def.") {
                let f = v.into_facet(&mut IdGen::new(seed), Provenance::UserAdded);
                prop_assert_eq!(f.id.kind(), Some(kind));
            }
        }
    }
}
