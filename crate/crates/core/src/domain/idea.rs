use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use super::facet::{word_count, Facet, FacetId};
use super::kinds::{DistanceClass, FacetKind};

pub const SHORT_IDEA_WORDS: (usize, usize) = (100, 150);
pub const EXPANDED_IDEA_WORDS: (usize, usize) = (200, 250);

/// Which facet-selection case produced an idea round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Situation {
    Initial,
    NoPNoM,
    POrM,
    PAndM,
}

/// A generated or user-entered research idea.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Idea {
    pub id: String,
    pub short_text: String,
    pub expanded_text: String,
    pub purpose_id: FacetId,
    pub mechanism_id: FacetId,
    pub evaluation_id: FacetId,
    pub analogy: String,
    /// `None` for ideas the user typed in or adopted from a suggestion.
    pub situation: Option<Situation>,
    pub group_distances: (BTreeSet<DistanceClass>, BTreeSet<DistanceClass>),
    pub custom_instructions_used: Option<String>,
    pub saved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdeaError {
    #[error("facet `{0}` does not exist")]
    UnknownFacet(FacetId),
    #[error("facet `{id}` is a {actual}, expected a {expected}")]
    KindMismatch { id: FacetId, expected: FacetKind, actual: FacetKind },
}

/// Fields of an idea before facet checks.
#[derive(Debug, Clone)]
pub struct IdeaParts {
    pub id: String,
    pub short_text: String,
    pub expanded_text: String,
    pub purpose_id: FacetId,
    pub mechanism_id: FacetId,
    pub evaluation_id: FacetId,
    pub analogy: String,
    pub situation: Option<Situation>,
    pub group_distances: (BTreeSet<DistanceClass>, BTreeSet<DistanceClass>),
    pub custom_instructions_used: Option<String>,
}

impl Idea {
    /// Builds an idea after checking each facet id exists with the matching kind.
    /// Word-range violations on the texts are logged, not rejected.
    pub fn build(parts: IdeaParts, facets: &BTreeMap<FacetId, Facet>) -> Result<Idea, IdeaError> {
        for (id, expected) in [
            (&parts.purpose_id, FacetKind::Purpose),
            (&parts.mechanism_id, FacetKind::Mechanism),
            (&parts.evaluation_id, FacetKind::Evaluation),
        ] {
            let facet = facets.get(id).ok_or_else(|| IdeaError::UnknownFacet(id.clone()))?;
            if facet.kind != expected {
                return Err(IdeaError::KindMismatch { id: id.clone(), expected, actual: facet.kind });
            }
        }
        check_soft_range(&parts.id, "short_text", &parts.short_text, SHORT_IDEA_WORDS);
        check_soft_range(&parts.id, "expanded_text", &parts.expanded_text, EXPANDED_IDEA_WORDS);
        Ok(Idea {
            id: parts.id,
            short_text: parts.short_text,
            expanded_text: parts.expanded_text,
            purpose_id: parts.purpose_id,
            mechanism_id: parts.mechanism_id,
            evaluation_id: parts.evaluation_id,
            analogy: parts.analogy,
            situation: parts.situation,
            group_distances: parts.group_distances,
            custom_instructions_used: parts.custom_instructions_used,
            saved: false,
        })
    }

    pub fn facet_ids(&self) -> [&FacetId; 3] {
        [&self.purpose_id, &self.mechanism_id, &self.evaluation_id]
    }

    pub fn facet_id(&self, kind: FacetKind) -> &FacetId {
        match kind {
            FacetKind::Purpose => &self.purpose_id,
            FacetKind::Mechanism => &self.mechanism_id,
            FacetKind::Evaluation => &self.evaluation_id,
        }
    }
}

fn check_soft_range(idea_id: &str, field: &str, text: &str, (lo, hi): (usize, usize)) {
    let n = word_count(text);
    if n < lo || n > hi {
        warn!(idea = idea_id, field, words = n, lo, hi, "idea text outside soft word range");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::facet::{validate_facet, Provenance};
    use crate::domain::ids::IdGen;
    use proptest::prelude::*;

    fn facet_pool() -> BTreeMap<FacetId, Facet> {
        let mut ids = IdGen::new(1);
        let mut pool = BTreeMap::new();
        for (kind, text) in [
            (FacetKind::Purpose, "to support creative writing"),
            (FacetKind::Mechanism, "story graph scaffolding"),
            (FacetKind::Evaluation, "lab user study"),
        ] {
            let f = validate_facet(kind, text, "Definition.", Provenance::UserAdded, &mut ids).unwrap();
            pool.insert(f.id.clone(), f);
        }
        pool
    }

    fn parts(p: &FacetId, m: &FacetId, e: &FacetId) -> IdeaParts {
        IdeaParts {
            id: "idea-1".into(),
            short_text: "short".into(),
            expanded_text: "long".into(),
            purpose_id: p.clone(),
            mechanism_id: m.clone(),
            evaluation_id: e.clone(),
            analogy: String::new(),
            situation: Some(Situation::Initial),
            group_distances: Default::default(),
            custom_instructions_used: None,
        }
    }

    #[test]
    fn soft_ranges_do_not_reject() {
        let pool = facet_pool();
        let ids: Vec<_> = pool.values().map(|f| (f.kind, f.id.clone())).collect();
        let get = |k| ids.iter().find(|(kk, _)| *kk == k).unwrap().1.clone();
        let idea = Idea::build(
            parts(&get(FacetKind::Purpose), &get(FacetKind::Mechanism), &get(FacetKind::Evaluation)),
            &pool,
        )
        .unwrap();
        assert!(!idea.saved);
    }

    proptest! {
        #[test]
        fn mismatched_kinds_always_rejected(a in 0usize..3, b in 0usize..3, c in 0usize..3) {
            let pool = facet_pool();
            let by_kind: Vec<FacetId> = FacetKind::ALL
                .iter()
                .map(|k| pool.values().find(|f| f.kind == *k).unwrap().id.clone())
                .collect();
            let result = Idea::build(parts(&by_kind[a], &by_kind[b], &by_kind[c]), &pool);
            prop_assert_eq!(result.is_ok(), (a, b, c) == (0, 1, 2));
        }
    }
}
