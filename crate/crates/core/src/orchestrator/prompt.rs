//! Chat prompt rendering from the registry and the working memory.

use serde::{Deserialize, Serialize};

use super::{render_action, MemoryView, Observation};
use crate::registry::ToolRegistry;

pub const SYSTEM_PROMPT_TEMPLATE: &str = include_str!("../../assets/system_prompt.txt");

/// Echoed observations are cut to this many bytes; the trajectory keeps the full value.
pub const OBSERVATION_ECHO_LIMIT: usize = 8 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Self {
            role: role.to_owned(),
            content: content.into(),
        }
    }
}

pub fn render_tool_list(registry: &ToolRegistry) -> String {
    let mut out = String::new();
    for t in registry.iter() {
        let params: Vec<String> = t
            .params
            .iter()
            .map(|p| format!("{}{}: {}", p.name, if p.required { "" } else { "?" }, p.kind))
            .collect();
        out.push_str(&format!("- {}({}): {}\n", t.name, params.join(", "), t.description));
    }
    out.trim_end().to_owned()
}

pub fn render_system_prompt(registry: &ToolRegistry) -> String {
    SYSTEM_PROMPT_TEMPLATE.replace("{{tools}}", &render_tool_list(registry))
}

pub fn truncate_utf8(s: &str, limit: usize) -> &str {
    if s.len() <= limit {
        return s;
    }
    let mut end = limit;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    &s[..end]
}

pub fn render_observation(obs: &Observation) -> String {
    let full = obs.canonical();
    if full.len() <= OBSERVATION_ECHO_LIMIT {
        return format!("Observation: {full}");
    }
    format!(
        "Observation: {} ...[truncated {} bytes]",
        truncate_utf8(&full, OBSERVATION_ECHO_LIMIT),
        full.len() - truncate_utf8(&full, OBSERVATION_ECHO_LIMIT).len()
    )
}

fn render_task(view: &MemoryView<'_>) -> String {
    let m = view.memory;
    let mut out = format!("Task: {}", m.instruction);
    if !m.inputs.is_empty() {
        out.push_str("\nInputs:");
        for i in &m.inputs {
            out.push_str(&format!("\n- {} `{}`", i.kind, i.path));
            if let Some(g) = i.gsd_m_per_px {
                out.push_str(&format!(" (gsd {g} m/px)"));
            }
            if let Some(c) = &i.crs {
                out.push_str(&format!(" (crs {c})"));
            }
        }
    }
    out
}

/// System prompt, the task, then alternating assistant turns and observations.
pub fn build_messages(view: &MemoryView<'_>) -> Vec<ChatMessage> {
    let mut msgs = vec![
        ChatMessage::new("system", render_system_prompt(view.registry)),
        ChatMessage::new("user", render_task(view)),
    ];
    for entry in view.memory.transcript() {
        msgs.push(ChatMessage::new("assistant", render_action(&entry.action)));
        if let Some(obs) = &entry.observation {
            msgs.push(ChatMessage::new("user", render_observation(obs)));
        }
    }
    msgs
}
