use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use super::text::{content_words, token_set};
use crate::corpus::WirePaper;
use crate::domain::{DistanceClass, FacetKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldFacet {
    pub text: String,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldFacets {
    pub purpose: GoldFacet,
    pub mechanism: GoldFacet,
    pub evaluation: GoldFacet,
}

impl GoldFacets {
    pub fn get(&self, kind: FacetKind) -> &GoldFacet {
        match kind {
            FacetKind::Purpose => &self.purpose,
            FacetKind::Mechanism => &self.mechanism,
            FacetKind::Evaluation => &self.evaluation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogPaper {
    pub id: String,
    pub year: i32,
    /// Authoring label: input, very_near, near, far, very_far or extra.
    pub tier: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: Option<String>,
    pub venue: String,
    pub authors: Vec<String>,
    pub facets: Option<GoldFacets>,
}

impl CatalogPaper {
    /// Title and abstract joined.
    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.abstract_text.as_deref().unwrap_or(""))
    }

    pub fn wire(&self) -> WirePaper {
        WirePaper {
            paper_id: self.id.clone(),
            title: Some(self.title.clone()),
            abstract_text: self.abstract_text.clone(),
            authors: self.authors.iter().map(|n| crate::corpus::WireAuthor { name: Some(n.clone()) }).collect(),
            venue: Some(self.venue.clone()),
            url: Some(format!("https://example.org/papers/{}", self.id)),
            year: Some(self.year),
        }
    }
}

/// An authored analogy query and the paper it is meant to find.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogQuery {
    pub distance: DistanceClass,
    pub paper: String,
    pub query: String,
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub topic: String,
    pub same_topic: String,
    pub same_subarea: String,
    pub overarching: GoldFacets,
    pub papers: Vec<CatalogPaper>,
    pub queries: Vec<CatalogQuery>,
}

static BUILTIN: LazyLock<Catalog> =
    LazyLock::new(|| serde_json::from_str(include_str!("catalog.json")).expect("built-in catalog parses"));

impl Catalog {
    pub fn builtin() -> &'static Catalog {
        &BUILTIN
    }

    pub fn paper(&self, id: &str) -> Option<&CatalogPaper> {
        self.papers.iter().find(|p| p.id == id)
    }

    /// Exact title match after case and whitespace folding.
    pub fn by_title(&self, title: &str) -> Option<&CatalogPaper> {
        let key = fold(title);
        self.papers.iter().find(|p| fold(&p.title) == key)
    }

    /// Papers whose title appears inside `text`.
    pub fn titles_in(&self, text: &str) -> Vec<&CatalogPaper> {
        let hay = fold(text);
        self.papers.iter().filter(|p| hay.contains(&fold(&p.title))).collect()
    }

    /// The catalog facet of `kind` whose words all occur in `text`, preferring
    /// the longest one.
    pub fn facet_in(&self, kind: FacetKind, text: &str) -> Option<&GoldFacet> {
        let words = token_set(text);
        let mut best: Option<(&GoldFacet, usize)> = None;
        for p in &self.papers {
            let Some(f) = &p.facets else { continue };
            let g = f.get(kind);
            let need = content_words(&g.text);
            if need.is_empty() || !need.iter().all(|w| words.contains(w)) {
                continue;
            }
            if best.is_none_or(|(_, n)| need.len() > n) {
                best = Some((g, need.len()));
            }
        }
        best.map(|(g, _)| g)
    }
}

fn fold(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::validate_facet;
    use crate::domain::IdGen;

    #[test]
    fn gold_facets_are_valid() {
        let c = Catalog::builtin();
        let mut ids = IdGen::new(0);
        let all = c.papers.iter().filter_map(|p| p.facets.as_ref()).chain(std::iter::once(&c.overarching));
        for f in all {
            for kind in FacetKind::ALL {
                let g = f.get(kind);
                validate_facet(kind, &g.text, &g.definition, crate::domain::Provenance::UserAdded, &mut ids)
                    .unwrap_or_else(|e| panic!("{}: {e}", g.text));
            }
        }
    }

    #[test]
    fn ids_unique_and_queries_resolve() {
        let c = Catalog::builtin();
        let mut seen = std::collections::HashSet::new();
        assert!(c.papers.iter().all(|p| seen.insert(p.id.clone())));
        for q in &c.queries {
            assert!(c.paper(&q.paper).is_some(), "{}", q.paper);
            assert!(DistanceClass::ANALOGOUS.contains(&q.distance));
        }
        for d in DistanceClass::ANALOGOUS {
            assert_eq!(c.queries.iter().filter(|q| q.distance == d).count(), 8);
        }
    }

    #[test]
    fn finds_contained_facets() {
        let c = Catalog::builtin();
        let f = c.facet_in(FacetKind::Mechanism, "we use story graph scaffolding for kids").unwrap();
        assert_eq!(f.text, "story graph scaffolding");
        assert!(c.facet_in(FacetKind::Mechanism, "nothing relevant").is_none());
        assert_eq!(c.by_title("residual learning for deep  image recognition").unwrap().id, "vf01");
    }
}
