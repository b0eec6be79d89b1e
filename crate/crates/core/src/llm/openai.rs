use async_trait::async_trait;
use serde_json::{json, Value};

use super::gateway::LlmProvider;
use super::request::{ChatMessage, LlmRequest, ModelRole, Role};
use super::LlmError;

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_GENERAL_MODEL: &str = "gpt-4o-2024-08-06";
pub const DEFAULT_REASONING_MODEL: &str = "o3-mini";

/// Chat-completions provider for OpenAI-compatible endpoints.
pub struct OpenAiProvider {
    client: reqwest::Client,
    base_url: String,
    api_key: Option<String>,
    general_model: String,
    reasoning_model: String,
}

impl OpenAiProvider {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Self {
        OpenAiProvider {
            client: reqwest::Client::new(),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
            general_model: DEFAULT_GENERAL_MODEL.to_string(),
            reasoning_model: DEFAULT_REASONING_MODEL.to_string(),
        }
    }

    /// Reads `LLM_BASE_URL`, `LLM_API_KEY`, `LLM_MODEL_GENERAL` and `LLM_MODEL_REASONING`.
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let mut p = Self::new(var("LLM_BASE_URL").unwrap_or_else(|| DEFAULT_BASE_URL.into()), var("LLM_API_KEY"));
        if let Some(m) = var("LLM_MODEL_GENERAL") {
            p.general_model = m;
        }
        if let Some(m) = var("LLM_MODEL_REASONING") {
            p.reasoning_model = m;
        }
        p
    }

    pub fn with_models(mut self, general: impl Into<String>, reasoning: impl Into<String>) -> Self {
        self.general_model = general.into();
        self.reasoning_model = reasoning.into();
        self
    }

    pub fn model(&self, role: ModelRole) -> &str {
        match role {
            ModelRole::General => &self.general_model,
            ModelRole::Reasoning => &self.reasoning_model,
        }
    }

    /// Request body. o-series models reject a temperature parameter.
    pub fn body(&self, request: &LlmRequest, messages: &[ChatMessage]) -> Value {
        let model = self.model(request.model_role);
        let messages: Vec<Value> = messages
            .iter()
            .map(|m| {
                let role = match m.role {
                    Role::System => "system",
                    Role::User => "user",
                    Role::Assistant => "assistant",
                };
                json!({ "role": role, "content": m.content })
            })
            .collect();
        let mut body = json!({ "model": model, "messages": messages });
        if !is_reasoning_model(model) {
            body["temperature"] = json!(request.temperature);
        }
        body
    }
}

fn is_reasoning_model(model: &str) -> bool {
    let m = model.rsplit('/').next().unwrap_or(model);
    m.len() > 1 && m.starts_with('o') && m.as_bytes()[1].is_ascii_digit()
}

#[async_trait]
impl LlmProvider for OpenAiProvider {
    async fn complete(&self, request: &LlmRequest, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let mut req = self.client.post(format!("{}/chat/completions", self.base_url)).json(&self.body(request, messages));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| LlmError::Provider { status: None, message: e.to_string() })?;
        let status = resp.status();
        if !status.is_success() {
            let message = resp.text().await.unwrap_or_default();
            return Err(LlmError::Provider { status: Some(status.as_u16()), message });
        }
        let v: Value = resp.json().await.map_err(|e| LlmError::Provider { status: None, message: e.to_string() })?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or(LlmError::EmptyResponse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::bindings::{Bindings, NoveltyClassify, ShortenQuery};

    #[test]
    fn reasoning_models_omit_temperature() {
        let p = OpenAiProvider::new(DEFAULT_BASE_URL, None);
        let msgs = vec![ChatMessage::user("hi")];
        let general = p.body(&ShortenQuery { query: "q".into() }.request(), &msgs);
        assert_eq!(general["model"], DEFAULT_GENERAL_MODEL);
        assert_eq!(general["temperature"], 0.0);
        let classify = NoveltyClassify { idea: "i".into(), incontext: String::new(), papers: vec![] }.request();
        let reasoning = p.body(&classify, &msgs);
        assert_eq!(reasoning["model"], DEFAULT_REASONING_MODEL);
        assert!(reasoning.get("temperature").is_none());
        assert!(!is_reasoning_model("gpt-4o"));
        assert!(is_reasoning_model("openai/o1"));
    }
}
