//! Scorers for free-text answers.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::orchestrator::prompt::ChatMessage;
use crate::policy::{ChatClient, PolicyError, RemoteConfig};

pub const JUDGE_PROMPT_TEMPLATE: &str = include_str!("../../assets/judge_prompt.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JudgeError {
    #[error("judge request failed: {0}")]
    Transport(String),
    #[error("judge reply has no score: {0}")]
    Unparseable(String),
}

pub trait Judge: Send + Sync {
    /// Stable identifier, part of the report's config digest.
    fn name(&self) -> String;
    fn score(&self, query: &str, pred: &str, gold: &str) -> Result<f64, JudgeError>;
}

/// Asks a chat model to grade the answer and reads the first number of its reply.
pub struct RemoteJudge {
    client: ChatClient,
    template: String,
}

impl RemoteJudge {
    pub fn new(config: RemoteConfig, template: Option<String>) -> Result<Self, PolicyError> {
        Ok(Self {
            client: ChatClient::new(config)?,
            template: template.unwrap_or_else(|| JUDGE_PROMPT_TEMPLATE.to_owned()),
        })
    }

    pub fn render(&self, query: &str, pred: &str, gold: &str) -> String {
        self.template
            .replace("{{question}}", query)
            .replace("{{reference}}", gold)
            .replace("{{prediction}}", pred)
    }
}

impl Judge for RemoteJudge {
    fn name(&self) -> String {
        format!("remote:{}", self.client.config().model)
    }

    fn score(&self, query: &str, pred: &str, gold: &str) -> Result<f64, JudgeError> {
        let reply = self
            .client
            .complete(&[ChatMessage::new("user", self.render(query, pred, gold))])
            .map_err(|e| JudgeError::Transport(e.to_string()))?;
        super::metrics::first_number(&reply)
            .filter(|s| (0.0..=1.0).contains(s))
            .ok_or(JudgeError::Unparseable(reply))
    }
}

/// Offline fallback: token-level F1 between prediction and reference.
/// Not a substitute for a model judge; use only for smoke runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct OverlapJudge;

fn tokens(s: &str) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for t in s
        .split(|c: char| !c.is_alphanumeric() && c != '.')
        .map(|t| t.trim_matches('.').to_lowercase())
        .filter(|t| !t.is_empty())
    {
        *m.entry(t).or_insert(0) += 1;
    }
    m
}

impl Judge for OverlapJudge {
    fn name(&self) -> String {
        "offline-token-overlap".into()
    }

    fn score(&self, _query: &str, pred: &str, gold: &str) -> Result<f64, JudgeError> {
        let (p, g) = (tokens(pred), tokens(gold));
        let tp: usize = p.iter().map(|(t, n)| (*n).min(g.get(t).copied().unwrap_or(0))).sum();
        let (np, ng): (usize, usize) = (p.values().sum(), g.values().sum());
        Ok(super::metrics::f1_from_counts(tp, np, ng).unwrap_or(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_scores() {
        let j = OverlapJudge;
        assert_eq!(j.score("", "Two red cars.", "two red cars").unwrap(), 1.0);
        assert_eq!(j.score("", "blue", "red").unwrap(), 0.0);
        let half = j.score("", "red cars", "red trucks").unwrap();
        assert!((half - 0.5).abs() < 1e-12);
    }

    #[test]
    fn template_placeholders_are_filled() {
        let j = RemoteJudge::new(RemoteConfig::default(), None).unwrap();
        let text = j.render("Q?", "P", "G");
        assert!(!text.contains("{{"));
        assert!(text.contains("Q?") && text.contains("P") && text.contains("G"));
    }
}
