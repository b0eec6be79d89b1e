//! Facet-based scientific ideation engine: facet extraction, idea
//! generation and novelty checking over a scholarly corpus and an LLM.

pub mod bench;
pub mod corpus;
pub mod domain;
pub mod finder;
pub mod ideas;
pub mod llm;
pub mod metrics;
pub mod novelty;
pub mod offline;
pub mod session;
