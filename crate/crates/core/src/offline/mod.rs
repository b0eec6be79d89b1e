//! A self-contained simulated world: a small paper catalog served as a
//! corpus backend, and a scripted model that answers every template from its
//! typed bindings. Used to record the committed replay fixtures and to run
//! the examples without network access.

mod catalog;
mod corpus;
mod model;
pub mod scenario;
pub mod text;

pub use catalog::{Catalog, CatalogPaper, CatalogQuery, GoldFacet, GoldFacets};
pub use corpus::OfflineCorpus;
pub use model::ScriptedLlm;

use std::sync::Arc;

use crate::corpus::Corpus;
use crate::llm::LlmGateway;

/// A live corpus client over the built-in catalog.
pub fn corpus() -> Corpus {
    Corpus::live(Arc::new(OfflineCorpus::new(Catalog::builtin())))
}

/// A live gateway over the scripted model.
pub fn gateway() -> LlmGateway {
    LlmGateway::live(Arc::new(ScriptedLlm::new(Catalog::builtin())))
}
