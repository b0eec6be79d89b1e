use async_trait::async_trait;

use super::catalog::{Catalog, CatalogPaper};
use super::text::{content_words, embed, jaccard, sentences, token_set, words};
use crate::corpus::{
    BackendRequest, CorpusBackend, CorpusError, CorpusFilter, EmbeddingsBody, Endpoint, PapersBody, SnippetsBody,
    WireEmbedding, WireSnippet,
};

/// First year of the `recent` pool.
pub const RECENT_FROM: i32 = 2022;

/// Serves the catalog through the corpus wire formats.
///
/// Search is a conjunctive match of the query's content words over title and
/// abstract, ranked by weighted term frequency. Recommendations rank by word
/// overlap with the seeds.
pub struct OfflineCorpus {
    catalog: &'static Catalog,
}

impl OfflineCorpus {
    pub fn new(catalog: &'static Catalog) -> Self {
        OfflineCorpus { catalog }
    }

    fn pool(&self, filter: Option<CorpusFilter>) -> impl Iterator<Item = &'static CatalogPaper> {
        let recent = filter == Some(CorpusFilter::Recent);
        self.catalog.papers.iter().filter(move |p| !recent || p.year >= RECENT_FROM)
    }

    fn search(&self, request: &BackendRequest) -> PapersBody {
        let terms = content_words(&request.text);
        let mut scored: Vec<(usize, usize, &CatalogPaper)> = Vec::new();
        for (i, p) in self.pool(request.filter).enumerate() {
            let title = words(&p.title);
            let body = words(p.abstract_text.as_deref().unwrap_or(""));
            if terms.is_empty() || !terms.iter().all(|t| title.contains(t) || body.contains(t)) {
                continue;
            }
            let score: usize = terms
                .iter()
                .map(|t| 2 * title.iter().filter(|w| *w == t).count() + body.iter().filter(|w| *w == t).count())
                .sum();
            scored.push((score, i, p));
        }
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        PapersBody { data: scored.into_iter().take(request.limit).map(|(_, _, p)| p.wire()).collect() }
    }

    fn related(&self, request: &BackendRequest) -> Result<PapersBody, CorpusError> {
        let seeds: Vec<&CatalogPaper> = request.ids.iter().filter_map(|id| self.catalog.paper(id)).collect();
        if seeds.is_empty() {
            return Ok(PapersBody { data: Vec::new() });
        }
        let seed_words = token_set(&seeds.iter().map(|p| p.text()).collect::<Vec<_>>().join(" "));
        let mut scored: Vec<(f64, usize, &CatalogPaper)> = self
            .pool(request.filter)
            .enumerate()
            .filter(|(_, p)| !request.ids.contains(&p.id))
            .map(|(i, p)| (jaccard(&seed_words, &token_set(&p.text())), i, p))
            .filter(|(s, _, _)| *s > 0.0)
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(PapersBody { data: scored.into_iter().take(request.limit).map(|(_, _, p)| p.wire()).collect() })
    }

    fn snippets(&self, request: &BackendRequest) -> SnippetsBody {
        let query = token_set(&request.text);
        let mut hits: Vec<(f64, usize, WireSnippet)> = Vec::new();
        let mut order = 0;
        for p in &self.catalog.papers {
            let Some(abs) = &p.abstract_text else { continue };
            for s in sentences(abs) {
                let tokens = token_set(&s);
                let shared = tokens.intersection(&query).count();
                order += 1;
                if shared < 2 {
                    continue;
                }
                let score = shared as f64 / (tokens.len() as f64).sqrt();
                hits.push((score, order, WireSnippet { paper_id: p.id.clone(), text: s, score }));
            }
        }
        hits.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        SnippetsBody { data: hits.into_iter().take(request.limit).map(|(_, _, s)| s).collect() }
    }

    fn embeddings(&self, request: &BackendRequest) -> EmbeddingsBody {
        let data = request
            .ids
            .iter()
            .filter_map(|id| self.catalog.paper(id))
            .map(|p| WireEmbedding { paper_id: p.id.clone(), embedding: p.abstract_text.as_ref().map(|_| embed(&p.text())) })
            .collect();
        EmbeddingsBody { data, query_embedding: Some(embed(&request.text)) }
    }
}

fn json<T: serde::Serialize>(body: &T) -> String {
    serde_json::to_string(body).expect("wire body serializes")
}

#[async_trait]
impl CorpusBackend for OfflineCorpus {
    async fn fetch(&self, request: &BackendRequest) -> Result<String, CorpusError> {
        Ok(match request.endpoint {
            Endpoint::Search => json(&self.search(request)),
            Endpoint::Related => json(&self.related(request)?),
            Endpoint::Papers => json(&PapersBody {
                data: request.ids.iter().filter_map(|id| self.catalog.paper(id)).map(CatalogPaper::wire).collect(),
            }),
            Endpoint::Snippets => json(&self.snippets(request)),
            Endpoint::Embeddings => json(&self.embeddings(request)),
        })
    }
}
