//! Agent-side policies: given the working memory, produce the next model turn.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::canonical;
use crate::corpus::TrajectoryRecord;
use crate::orchestrator::prompt::{build_messages, ChatMessage};
use crate::orchestrator::{render_action, Action, MemoryView, ToolCall};
use crate::registry::TERMINATE;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("script exhausted after {0} turns")]
    ScriptExhausted(usize),
    #[error("transport error after {attempts} attempts: {detail}")]
    TransportError { attempts: usize, detail: String },
    #[error("unusable response: {0}")]
    BadResponse(String),
    #[error("invalid policy configuration: {0}")]
    Config(String),
}

pub trait Policy: Send {
    fn next_action(&mut self, view: &MemoryView<'_>) -> Result<String, PolicyError>;
}

/// Plays back a recorded trajectory turn by turn, rendered in the wire format.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    turns: Vec<String>,
    cursor: usize,
}

impl ScriptedPolicy {
    pub fn new(record: &TrajectoryRecord) -> Self {
        Self {
            turns: record.steps.iter().map(|s| render_action(&s.as_action())).collect(),
            cursor: 0,
        }
    }

    pub fn turns(&self) -> &[String] {
        &self.turns
    }
}

impl Policy for ScriptedPolicy {
    fn next_action(&mut self, _view: &MemoryView<'_>) -> Result<String, PolicyError> {
        let turn = self
            .turns
            .get(self.cursor)
            .cloned()
            .ok_or(PolicyError::ScriptExhausted(self.turns.len()))?;
        self.cursor += 1;
        Ok(turn)
    }
}

/// Emits fixed raw texts in order; optionally repeats the last one forever.
#[derive(Debug, Clone)]
pub struct FixedTextPolicy {
    texts: Vec<String>,
    cursor: usize,
    repeat_last: bool,
}

impl FixedTextPolicy {
    pub fn new(texts: Vec<String>) -> Self {
        Self {
            texts,
            cursor: 0,
            repeat_last: false,
        }
    }

    pub fn repeating(text: String) -> Self {
        Self {
            texts: vec![text],
            cursor: 0,
            repeat_last: true,
        }
    }
}

impl Policy for FixedTextPolicy {
    fn next_action(&mut self, _view: &MemoryView<'_>) -> Result<String, PolicyError> {
        let i = if self.repeat_last {
            self.cursor.min(self.texts.len().saturating_sub(1))
        } else {
            self.cursor
        };
        let text = self
            .texts
            .get(i)
            .cloned()
            .ok_or(PolicyError::ScriptExhausted(self.texts.len()))?;
        self.cursor += 1;
        Ok(text)
    }
}

/// Smoke-test policy: sums the numbers in the query with Calculator, then
/// answers with the result.
#[derive(Debug, Clone, Default)]
pub struct RuleBasedPolicy;

fn numbers_in(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_digit() || (c == '.' && !cur.is_empty() && !cur.contains('.')) {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(cur.trim_end_matches('.').to_owned());
            cur.clear();
        }
    }
    out
}

impl Policy for RuleBasedPolicy {
    fn next_action(&mut self, view: &MemoryView<'_>) -> Result<String, PolicyError> {
        let last_result = view.memory.transcript().iter().rev().find_map(|e| {
            (e.action.tool() == Some("Calculator"))
                .then(|| e.observation.as_ref()?.value.as_ref()?.get("result").cloned())
                .flatten()
        });
        let action = match last_result {
            Some(result) => Action::call(
                "Report the computed value.",
                ToolCall::new(TERMINATE, json!({ "answer": canonical::canonical_value(&result) })),
            ),
            None => {
                let nums = numbers_in(&view.memory.instruction);
                let expression = if nums.is_empty() { "0".to_owned() } else { nums.join(" + ") };
                Action::call(
                    "Compute with the numbers in the query.",
                    ToolCall::new("Calculator", json!({ "expression": expression })),
                )
            }
        };
        Ok(render_action(&action))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key. The key itself never appears in config.
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout_s: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model: "default".into(),
            api_key_env: "GEOAGENT_API_KEY".into(),
            temperature: 0.0,
            timeout_s: 60,
            max_retries: 2,
            backoff_ms: 250,
        }
    }
}

impl RemoteConfig {
    pub fn check(&self) -> Result<(), PolicyError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(PolicyError::Config("temperature must be >= 0".into()));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(PolicyError::Config(format!("base_url `{}` is not an http(s) URL", self.base_url)));
        }
        if self.model.trim().is_empty() {
            return Err(PolicyError::Config("model is empty".into()));
        }
        Ok(())
    }

    pub fn endpoint(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_owned()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

/// Minimal chat-completions client with exponential backoff on transport
/// failures, 429 and 5xx responses.
#[derive(Debug, Clone)]
pub struct ChatClient {
    config: RemoteConfig,
    http: reqwest::blocking::Client,
}

impl ChatClient {
    pub fn new(config: RemoteConfig) -> Result<Self, PolicyError> {
        config.check()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_s))
            .build()
            .map_err(|e| PolicyError::Config(e.to_string()))?;
        Ok(Self { config, http })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    pub fn payload(&self, messages: &[ChatMessage]) -> Value {
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
        })
    }

    pub fn complete(&self, messages: &[ChatMessage]) -> Result<String, PolicyError> {
        let body = canonical::canonical_value(&self.payload(messages));
        let key = std::env::var(&self.config.api_key_env).ok();
        let attempts = self.config.max_retries as usize + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let wait = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(wait));
            }
            let mut req = self
                .http
                .post(self.config.endpoint())
                .header("content-type", "application/json")
                .body(body.clone());
            if let Some(k) = &key {
                req = req.bearer_auth(k);
            }
            match req.send() {
                Err(e) => last = e.to_string(),
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_server_error() || status.as_u16() == 429 {
                        last = format!("HTTP {status}");
                        continue;
                    }
                    if !status.is_success() {
                        return Err(PolicyError::BadResponse(format!("HTTP {status}")));
                    }
                    let v: Value = resp.json().map_err(|e| PolicyError::BadResponse(e.to_string()))?;
                    return v
                        .pointer("/choices/0/message/content")
                        .and_then(Value::as_str)
                        .map(str::to_owned)
                        .ok_or_else(|| PolicyError::BadResponse("no choices[0].message.content".into()));
                }
            }
            log::warn!("chat request attempt {} of {attempts} failed: {last}", attempt + 1);
        }
        Err(PolicyError::TransportError { attempts, detail: last })
    }
}

/// Sends the rendered prompt and transcript to a chat-completions endpoint.
#[derive(Debug, Clone)]
pub struct RemotePolicy {
    client: ChatClient,
}

impl RemotePolicy {
    pub fn new(config: RemoteConfig) -> Result<Self, PolicyError> {
        Ok(Self {
            client: ChatClient::new(config)?,
        })
    }

    /// The exact request body for a memory view.
    pub fn request_payload(&self, view: &MemoryView<'_>) -> Value {
        self.client.payload(&build_messages(view))
    }
}

impl Policy for RemotePolicy {
    fn next_action(&mut self, view: &MemoryView<'_>) -> Result<String, PolicyError> {
        self.client.complete(&build_messages(view))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "config")]
pub enum PolicyHandle {
    Scripted,
    RuleBased,
    Remote(RemoteConfig),
}

impl PolicyHandle {
    /// Builds a fresh policy for one task. Scripted policies play back `gold`.
    pub fn instantiate(&self, gold: Option<&TrajectoryRecord>) -> Result<Box<dyn Policy>, PolicyError> {
        match self {
            PolicyHandle::Scripted => gold
                .map(|g| Box::new(ScriptedPolicy::new(g)) as Box<dyn Policy>)
                .ok_or_else(|| PolicyError::Config("scripted policy needs a source trajectory".into())),
            PolicyHandle::RuleBased => Ok(Box::new(RuleBasedPolicy)),
            PolicyHandle::Remote(c) => Ok(Box::new(RemotePolicy::new(c.clone())?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Domain, Modality, TaskInstance};
    use crate::orchestrator::WorkingMemory;
    use crate::registry::ToolRegistry;

    fn view_parts() -> (WorkingMemory, ToolRegistry) {
        let task = TaskInstance {
            id: "t".into(),
            domain: Domain::Urban,
            modality: Modality::Rgb,
            query: "add 2 and 3.5".into(),
            inputs: vec![],
        };
        (WorkingMemory::new(&task), ToolRegistry::default_registry())
    }

    #[test]
    fn numbers_are_extracted() {
        assert_eq!(numbers_in("add 2 and 3.5."), vec!["2", "3.5"]);
        assert!(numbers_in("none").is_empty());
    }

    #[test]
    fn rule_based_calls_calculator_first() {
        let (m, reg) = view_parts();
        let text = RuleBasedPolicy.next_action(&MemoryView { memory: &m, registry: &reg }).unwrap();
        assert!(text.contains(r#""expression":"2 + 3.5""#), "{text}");
    }

    #[test]
    fn fixed_text_exhausts() {
        let (m, reg) = view_parts();
        let view = MemoryView { memory: &m, registry: &reg };
        let mut p = FixedTextPolicy::new(vec!["a".into()]);
        assert_eq!(p.next_action(&view).unwrap(), "a");
        assert_eq!(p.next_action(&view), Err(PolicyError::ScriptExhausted(1)));
        let mut r = FixedTextPolicy::repeating("b".into());
        for _ in 0..3 {
            assert_eq!(r.next_action(&view).unwrap(), "b");
        }
    }

    #[test]
    fn unreachable_endpoint_retries_then_fails() {
        let (m, reg) = view_parts();
        let mut p = RemotePolicy::new(RemoteConfig {
            base_url: "http://127.0.0.1:9".into(),
            timeout_s: 2,
            backoff_ms: 1,
            ..Default::default()
        })
        .unwrap();
        match p.next_action(&MemoryView { memory: &m, registry: &reg }) {
            Err(PolicyError::TransportError { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn payload_is_deterministic() {
        let (m, reg) = view_parts();
        let p = RemotePolicy::new(RemoteConfig::default()).unwrap();
        let view = MemoryView { memory: &m, registry: &reg };
        let a = canonical::digest_of(&p.request_payload(&view)).unwrap();
        let b = canonical::digest_of(&p.request_payload(&view.clone())).unwrap();
        assert_eq!(a, b);
        assert_eq!(p.request_payload(&view)["temperature"], json!(0.0));
    }

    #[test]
    fn config_checks() {
        let bad = RemoteConfig {
            temperature: -1.0,
            ..Default::default()
        };
        assert!(matches!(bad.check(), Err(PolicyError::Config(_))));
        assert_eq!(RemoteConfig::default().endpoint(), "http://127.0.0.1:8000/v1/chat/completions");
        assert!(PolicyHandle::Scripted.instantiate(None).is_err());
    }
}
