use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::prompts;
use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "GOE_LLM_API_KEY";
pub const BASE_URL_ENV: &str = "GOE_LLM_BASE_URL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn user(model: &str, prompt: &str, temperature: f64, max_tokens: u32) -> Self {
        Self {
            model: model.to_owned(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: prompt.to_owned(),
            }],
            temperature,
            max_tokens,
        }
    }

    /// All message contents joined by newlines; this is what the cache keys on.
    pub fn prompt_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String>;
}

/// Retries on transport errors and 5xx responses with exponential
/// backoff: `base_delay`, then doubling, for `retries` extra attempts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            retries: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

pub(crate) fn post_json(agent: &ureq::Agent, url: &str, api_key: Option<&str>, body: &Value, retry: RetryPolicy) -> Result<Value> {
    let mut delay = retry.base_delay;
    let mut attempt = 0;
    loop {
        let mut request = agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let outcome = match request.send_json(body) {
            Ok(mut response) => {
                let status = response.status().as_u16();
                if (200..300).contains(&status) {
                    return response
                        .body_mut()
                        .read_json::<Value>()
                        .map_err(|e| Error::Llm(format!("{url}: invalid JSON response: {e}")));
                }
                let text = response.body_mut().read_to_string().unwrap_or_default();
                let message = format!("{url}: HTTP {status}: {}", text.trim());
                if status < 500 {
                    return Err(Error::Llm(message));
                }
                message
            }
            Err(e) => format!("{url}: {e}"),
        };
        if attempt >= retry.retries {
            return Err(Error::Llm(format!("{outcome} (after {} attempts)", attempt + 1)));
        }
        log::warn!("{outcome}; retrying in {delay:?}");
        std::thread::sleep(delay);
        delay *= 2;
        attempt += 1;
    }
}

pub(crate) fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(180)))
        .build()
        .into()
}

/// OpenAI-compatible `POST {base_url}/chat/completions`.
pub struct HttpChatClient {
    base_url: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(base_url: &str, api_key: Option<String>) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_owned(),
            api_key,
            retry: RetryPolicy::default(),
            agent: agent(),
        }
    }

    /// Reads the base URL and bearer token from `GOE_LLM_BASE_URL` and
    /// `GOE_LLM_API_KEY`.
    pub fn from_env() -> Result<Self> {
        let base = std::env::var(BASE_URL_ENV).map_err(|_| Error::Llm(format!("{BASE_URL_ENV} is not set")))?;
        Ok(Self::new(&base, std::env::var(API_KEY_ENV).ok()))
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        let body = json!({
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let url = format!("{}/chat/completions", self.base_url);
        let response = post_json(&self.agent, &url, self.api_key.as_deref(), &body, self.retry)?;
        response["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| Error::Llm(format!("{url}: response has no choices[0].message.content")))
    }
}

/// Deterministic stand-in for a chat model.
///
/// In keyword mode it answers identification prompts by looking for the
/// listed category names in the node content (answering the first match,
/// or "none"), and answers generation prompts with the requested number
/// of Title/Abstract pairs.
#[derive(Debug, Clone, PartialEq)]
pub enum MockChatClient {
    Keyword,
    Fixed(String),
}

impl MockChatClient {
    pub const MODEL: &'static str = "mock-keyword";
}

impl ChatClient for MockChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        if let MockChatClient::Fixed(answer) = self {
            return Ok(answer.clone());
        }
        let prompt = request.prompt_text();
        if let Some(ask) = prompts::read_generation_prompt(&prompt) {
            return Ok(mock_generation(&ask.category, &ask.object_kind, ask.count));
        }
        if let Some((categories, content)) = prompts::read_identification_prompt(&prompt) {
            let content = content.to_lowercase();
            let hit = categories.iter().find(|c| content.contains(&c.to_lowercase()));
            return Ok(hit.map_or_else(|| "none".to_owned(), Clone::clone));
        }
        Err(Error::Llm("mock client received an unrecognized prompt".into()))
    }
}

/// The `index`-th (1-based) item the keyword mock writes for a category.
pub(crate) fn mock_generated_item(category: &str, object_kind: &str, index: usize) -> (String, String) {
    (
        format!("Advances in {category}, part {index}"),
        format!("This {object_kind} studies open questions in {category}. Sample {index} reports methods and findings."),
    )
}

fn mock_generation(category: &str, object_kind: &str, count: usize) -> String {
    (1..=count)
        .map(|i| {
            let (title, body) = mock_generated_item(category, object_kind, i);
            format!("{i}. Title: {title}\n   Abstract: {body}\n")
        })
        .collect()
}
