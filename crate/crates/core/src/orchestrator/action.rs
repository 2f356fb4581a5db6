//! Actions, observations, and the model-output wire format.
//!
//! A model turn is free text: an optional `Thought:` preamble followed by at
//! most one fenced action object:
//!
//! ````text
//! Thought: measure the gap between the two aircraft.
//! ```action
//! {"tool": "Calculator", "args": {"expression": "sqrt(100^2) * 0.072"}}
//! ```
//! ````

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::canonical;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: String,
    #[serde(default = "empty_object")]
    pub args: Value,
}

fn empty_object() -> Value {
    Value::Object(Map::new())
}

impl ToolCall {
    pub fn new(tool: impl Into<String>, args: Value) -> Self {
        Self {
            tool: tool.into(),
            args,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub thought: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call: Option<ToolCall>,
}

impl Action {
    pub fn thought_only(thought: impl Into<String>) -> Self {
        Self {
            thought: thought.into(),
            call: None,
        }
    }

    pub fn call(thought: impl Into<String>, call: ToolCall) -> Self {
        Self {
            thought: thought.into(),
            call: Some(call),
        }
    }

    pub fn tool(&self) -> Option<&str> {
        self.call.as_ref().map(|c| c.tool.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationError {
    pub code: String,
    pub detail: String,
}

/// Exactly one of `value` / `error` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ObservationError>,
}

impl Observation {
    pub fn ok(value: Value) -> Self {
        Self {
            ok: true,
            value: Some(value),
            error: None,
        }
    }

    pub fn error(code: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            ok: false,
            value: None,
            error: Some(ObservationError {
                code: code.into(),
                detail: detail.into(),
            }),
        }
    }

    pub fn is_well_formed(&self) -> bool {
        match (&self.value, &self.error) {
            (Some(_), None) => self.ok,
            (None, Some(_)) => !self.ok,
            _ => false,
        }
    }

    pub fn canonical(&self) -> String {
        canonical::to_canonical_string(self).expect("observation serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FormatErrorKind {
    NoAction,
    WrongFormat,
    MultipleCalls,
}

impl FormatErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FormatErrorKind::NoAction => "NoAction",
            FormatErrorKind::WrongFormat => "WrongFormat",
            FormatErrorKind::MultipleCalls => "MultipleCalls",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind:?} at step {step}: {detail}")]
pub struct FormatError {
    pub kind: FormatErrorKind,
    pub step: usize,
    pub detail: String,
}

/// Renders an action in the wire format understood by [`parse_action`].
pub fn render_action(action: &Action) -> String {
    let mut out = String::new();
    if !action.thought.is_empty() {
        out.push_str("Thought: ");
        out.push_str(&action.thought);
    }
    if let Some(call) = &action.call {
        if !out.is_empty() {
            out.push('\n');
        }
        let obj = serde_json::json!({ "tool": call.tool, "args": call.args });
        out.push_str("```action\n");
        out.push_str(&canonical::canonical_value(&obj));
        out.push_str("\n```");
    }
    out
}

struct Fence<'a> {
    start: usize,
    body: &'a str,
    closed: bool,
}

fn action_fences(text: &str) -> Vec<Fence<'_>> {
    let mut out = Vec::new();
    let mut offset = 0;
    let mut open: Option<(usize, usize)> = None; // (fence start, body start)
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        match open {
            None => {
                if let Some(lang) = trimmed.strip_prefix("```") {
                    let lang = lang.trim().to_ascii_lowercase();
                    if lang == "action" || lang == "json" {
                        open = Some((offset, offset + line.len()));
                    }
                }
            }
            Some((start, body_start)) => {
                if trimmed == "```" {
                    out.push(Fence {
                        start,
                        body: &text[body_start..offset],
                        closed: true,
                    });
                    open = None;
                }
            }
        }
        offset += line.len();
    }
    if let Some((start, body_start)) = open {
        out.push(Fence {
            start,
            body: &text[body_start.min(text.len())..],
            closed: false,
        });
    }
    out
}

fn clean_thought(s: &str) -> String {
    let s = s.trim();
    let lower = s.to_ascii_lowercase();
    let s = if lower.starts_with("thought:") { &s["thought:".len()..] } else { s };
    s.trim().to_owned()
}

fn looks_like_bare_action(text: &str) -> bool {
    text.contains('{') && (text.contains("\"tool\"") || text.contains("'tool'"))
}

fn call_from_value(v: Value) -> Result<ToolCall, String> {
    let Value::Object(mut obj) = v else {
        return Err("action must be a JSON object".into());
    };
    let tool = match obj.remove("tool") {
        Some(Value::String(s)) if !s.trim().is_empty() => s,
        Some(_) => return Err("`tool` must be a non-empty string".into()),
        None => return Err("missing `tool`".into()),
    };
    let args = match obj.remove("args") {
        None | Some(Value::Null) => empty_object(),
        Some(a @ Value::Object(_)) => a,
        Some(_) => return Err("`args` must be an object".into()),
    };
    Ok(ToolCall { tool, args })
}

/// Parses one model turn.
///
/// A turn with no action object is accepted as a thought-only planning turn
/// while `allowance_used` is false; afterwards it is a `NoAction` error.
pub fn parse_action(model_text: &str, step_index: usize, allowance_used: bool) -> Result<Action, FormatError> {
    let err = |kind, detail: &str| FormatError {
        kind,
        step: step_index,
        detail: detail.to_owned(),
    };
    let fences = action_fences(model_text);
    match fences.as_slice() {
        [] => {
            if looks_like_bare_action(model_text) {
                return Err(err(FormatErrorKind::WrongFormat, "action object is not inside an ```action fence"));
            }
            let thought = clean_thought(model_text);
            if thought.is_empty() {
                return Err(err(FormatErrorKind::NoAction, "empty output"));
            }
            if allowance_used {
                return Err(err(FormatErrorKind::NoAction, "no action object and the thought-only turn is used up"));
            }
            Ok(Action::thought_only(thought))
        }
        [fence] => {
            if !fence.closed {
                return Err(err(FormatErrorKind::WrongFormat, "unterminated action fence"));
            }
            let value: Value = serde_json::from_str(fence.body.trim())
                .map_err(|e| err(FormatErrorKind::WrongFormat, &format!("action body is not valid JSON: {e}")))?;
            let value = match value {
                Value::Array(items) if items.len() > 1 => {
                    return Err(err(FormatErrorKind::MultipleCalls, "action array holds several calls"))
                }
                Value::Array(mut items) if items.len() == 1 => items.remove(0),
                other => other,
            };
            let call = call_from_value(value).map_err(|d| err(FormatErrorKind::WrongFormat, &d))?;
            Ok(Action::call(clean_thought(&model_text[..fence.start]), call))
        }
        _ => Err(err(FormatErrorKind::MultipleCalls, &format!("{} action objects in one turn", fences.len()))),
    }
}
