//! Prompt templates, answer parsers and the model gateway.
//!
//! Every model call is an [`LlmRequest`]: a template id, typed slot values,
//! a model role and a temperature. The gateway renders it, sends it to a
//! provider (or a replay store) and parses the answer, re-asking once when
//! the answer does not parse.

pub mod bindings;
mod gateway;
mod openai;
pub mod parse;
mod request;
mod templates;

use thiserror::Error;

pub use bindings::Bindings;
pub use gateway::{reask, LlmGateway, LlmMode, LlmProvider, ReplayEntry, ReplayStore, REASK_BINDING};
pub use openai::OpenAiProvider;
pub use parse::ParseError;
pub use request::{ChatMessage, LlmRequest, ModelRole, Role, TemplateId};
pub use templates::{asset_name, render};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("template: {0}")]
    Template(String),
    #[error("provider error ({status:?}): {message}")]
    Provider { status: Option<u16>, message: String },
    #[error("no recorded answer for {0}")]
    ReplayMiss(String),
    #[error("unparseable answer: {0}")]
    Parse(#[from] ParseError),
    #[error("empty response")]
    EmptyResponse,
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        match self {
            LlmError::Provider { status: None, .. } => true,
            LlmError::Provider { status: Some(s), .. } => *s == 429 || *s >= 500,
            _ => false,
        }
    }
}
