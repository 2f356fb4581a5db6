//! Task instances and trajectory records, stored as one canonical JSON record per line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::canonical;
use crate::orchestrator::{Action, Observation, ToolCall};
use crate::registry::{ToolRegistry, TERMINATE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Urban,
    Disaster,
    Environment,
    Transportation,
    Aviation,
    Recreation,
    Industrial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Rgb,
    Sar,
    CdPair,
    Gis,
    Index,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Image,
    GeoBundle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    Numeric,
    Bbox,
    Text,
    Generation,
}

macro_rules! display_via_serde {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match serde_json::to_value(self) {
                    Ok(Value::String(s)) => f.write_str(&s),
                    _ => Err(fmt::Error),
                }
            }
        }
    )*};
}
display_via_serde!(Domain, Modality, InputKind, AnswerKind);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInput {
    pub kind: InputKind,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gsd_m_per_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crs: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub domain: Domain,
    pub modality: Modality,
    pub query: String,
    pub inputs: Vec<TaskInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub thought: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Observation>,
}

impl TrajectoryStep {
    pub fn as_action(&self) -> Action {
        Action {
            thought: self.thought.clone(),
            call: self.action.clone(),
        }
    }

    pub fn tool(&self) -> Option<&str> {
        self.action.as_ref().map(|c| c.tool.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    #[serde(flatten)]
    pub task: TaskInstance,
    pub steps: Vec<TrajectoryStep>,
    pub final_answer: String,
    pub answer_kind: AnswerKind,
}

impl TrajectoryRecord {
    pub fn id(&self) -> &str {
        &self.task.id
    }

    /// Tool names in call order.
    pub fn tool_sequence(&self) -> Vec<String> {
        self.steps.iter().filter_map(|s| s.tool().map(str::to_owned)).collect()
    }

    pub fn to_canonical_json(&self) -> String {
        canonical::to_canonical_string(self).expect("record serializes")
    }

    /// Checks the record-level invariants, returning the offending field path.
    pub fn check(&self) -> Result<(), String> {
        if self.task.id.trim().is_empty() {
            return Err("id".into());
        }
        for (i, input) in self.task.inputs.iter().enumerate() {
            if let Some(g) = input.gsd_m_per_px {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(format!("inputs[{i}].gsd_m_per_px"));
                }
            }
            if input.path.trim().is_empty() {
                return Err(format!("inputs[{i}].path"));
            }
        }
        if self.steps.is_empty() {
            return Err("steps".into());
        }
        for (i, step) in self.steps.iter().enumerate() {
            match (&step.action, &step.observation) {
                (Some(_), None) => return Err(format!("steps[{i}].observation")),
                (None, None) if step.thought.trim().is_empty() => return Err(format!("steps[{i}].thought")),
                // A format error: the raw text is kept as the thought, with an error observation.
                (None, Some(o)) if o.ok => return Err(format!("steps[{i}].action")),
                _ => {}
            }
            if let Some(o) = &step.observation {
                if !o.is_well_formed() {
                    return Err(format!("steps[{i}].observation"));
                }
            }
        }
        let last = self.steps.len() - 1;
        if self.steps[last].tool() != Some(TERMINATE) {
            return Err(format!("steps[{last}].action"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("line {line}: {detail}")]
    ParseError { line: usize, detail: String },
    #[error("record `{id}`: schema violation at `{field}`")]
    SchemaViolation { id: String, field: String },
    #[error("{path}: {detail}")]
    Io { path: String, detail: String },
}

const REQUIRED_FIELDS: [&str; 8] = [
    "id",
    "domain",
    "modality",
    "query",
    "inputs",
    "steps",
    "final_answer",
    "answer_kind",
];

fn parse_record(line: &str, line_no: usize) -> Result<TrajectoryRecord, CorpusError> {
    let value: Value = serde_json::from_str(line).map_err(|e| CorpusError::ParseError {
        line: line_no,
        detail: e.to_string(),
    })?;
    let id = match value.get("id") {
        Some(Value::String(s)) => s.clone(),
        _ => {
            return Err(CorpusError::SchemaViolation {
                id: format!("<line {line_no}>"),
                field: "id".into(),
            })
        }
    };
    let violation = |field: String| CorpusError::SchemaViolation { id: id.clone(), field };
    if !value.is_object() {
        return Err(violation(String::new()));
    }
    if let Some(missing) = REQUIRED_FIELDS.iter().find(|f| value.get(**f).is_none()) {
        return Err(violation((*missing).to_owned()));
    }
    // Flattened fields lose their path in serde errors, so the task part is checked on its own first.
    let _: TaskInstance = serde_path_to_error::deserialize(&value).map_err(|e| violation(e.path().to_string()))?;
    let record: TrajectoryRecord = serde_path_to_error::deserialize(value).map_err(|e| violation(e.path().to_string()))?;
    record.check().map_err(violation)?;
    Ok(record)
}

/// Parses JSONL text. Blank lines are skipped; a text with no records is a parse error.
pub fn parse_corpus(text: &str) -> Result<Vec<TrajectoryRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(line, i + 1)?;
        if !seen.insert(record.task.id.clone()) {
            return Err(CorpusError::SchemaViolation {
                id: record.task.id,
                field: "id".into(),
            });
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(CorpusError::ParseError {
            line: 1,
            detail: "corpus holds no records".into(),
        });
    }
    Ok(records)
}

pub fn load_corpus(path: &Path) -> Result<Vec<TrajectoryRecord>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    parse_corpus(&text)
}

pub fn to_jsonl(records: &[TrajectoryRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_canonical_json());
        out.push('\n');
    }
    out
}

pub fn save_corpus(records: &[TrajectoryRecord], path: &Path) -> Result<(), CorpusError> {
    std::fs::write(path, to_jsonl(records)).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

/// One warning per (record, tool) pair naming a tool the registry does not know.
pub fn unknown_tool_warnings(records: &[TrajectoryRecord], registry: &ToolRegistry) -> Vec<String> {
    let mut out = Vec::new();
    for r in records {
        let unknown: BTreeSet<&str> = r
            .steps
            .iter()
            .filter_map(TrajectoryStep::tool)
            .filter(|t| !registry.contains(t))
            .collect();
        for t in unknown {
            out.push(format!("record `{}` uses unregistered tool `{t}`", r.id()));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_instances: usize,
    pub n_steps: usize,
    pub avg_steps: f64,
    pub by_domain: BTreeMap<String, usize>,
    pub by_modality: BTreeMap<String, usize>,
    pub by_tool: BTreeMap<String, usize>,
}

pub fn stats(records: &[TrajectoryRecord]) -> CorpusStats {
    let mut s = CorpusStats {
        n_instances: records.len(),
        n_steps: 0,
        avg_steps: 0.0,
        by_domain: BTreeMap::new(),
        by_modality: BTreeMap::new(),
        by_tool: BTreeMap::new(),
    };
    for r in records {
        s.n_steps += r.steps.len();
        *s.by_domain.entry(r.task.domain.to_string()).or_default() += 1;
        *s.by_modality.entry(r.task.modality.to_string()).or_default() += 1;
        for t in r.steps.iter().filter_map(TrajectoryStep::tool) {
            *s.by_tool.entry(t.to_owned()).or_default() += 1;
        }
    }
    if s.n_instances > 0 {
        s.avg_steps = s.n_steps as f64 / s.n_instances as f64;
    }
    s
}

/// Order-preserving partition.
pub fn split<F>(records: Vec<TrajectoryRecord>, mut keep: F) -> (Vec<TrajectoryRecord>, Vec<TrajectoryRecord>)
where
    F: FnMut(&TrajectoryRecord) -> bool,
{
    records.into_iter().partition(|r| keep(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn record(id: &str, domain: Domain, tools: &[&str]) -> TrajectoryRecord {
        let mut steps: Vec<TrajectoryStep> = tools
            .iter()
            .map(|t| TrajectoryStep {
                thought: format!("use {t}"),
                action: Some(ToolCall::new(*t, json!({}))),
                observation: Some(Observation::ok(json!({"x": 1}))),
            })
            .collect();
        steps.push(TrajectoryStep {
            thought: "done".into(),
            action: Some(ToolCall::new(TERMINATE, json!({"answer": "1"}))),
            observation: Some(Observation::ok(json!({"answer": "1"}))),
        });
        TrajectoryRecord {
            task: TaskInstance {
                id: id.into(),
                domain,
                modality: Modality::Rgb,
                query: "q".into(),
                inputs: vec![TaskInput {
                    kind: InputKind::Image,
                    path: "a.png".into(),
                    gsd_m_per_px: Some(0.5),
                    crs: None,
                }],
            },
            steps,
            final_answer: "1".into(),
            answer_kind: AnswerKind::Numeric,
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let recs = vec![record("a", Domain::Urban, &["Calculator"]), record("b", Domain::Disaster, &[])];
        let text = to_jsonl(&recs);
        let back = parse_corpus(&text).unwrap();
        assert_eq!(back, recs);
        assert_eq!(to_jsonl(&back), text);
        assert!(text.starts_with(r#"{"answer_kind":"numeric","domain":"urban","final_answer":"1","id":"a","#));
    }

    #[test]
    fn missing_final_answer() {
        let mut v: Value = serde_json::to_value(record("a", Domain::Urban, &[])).unwrap();
        v.as_object_mut().unwrap().remove("final_answer");
        let err = parse_corpus(&v.to_string()).unwrap_err();
        assert_eq!(
            err,
            CorpusError::SchemaViolation {
                id: "a".into(),
                field: "final_answer".into()
            }
        );
    }

    #[test]
    fn field_paths_in_violations() {
        let mut v: Value = serde_json::to_value(record("a", Domain::Urban, &[])).unwrap();
        v["inputs"][0]["gsd_m_per_px"] = json!(-1.0);
        let err = parse_corpus(&v.to_string()).unwrap_err();
        assert!(matches!(err, CorpusError::SchemaViolation { ref field, .. } if field == "inputs[0].gsd_m_per_px"));

        v["inputs"][0]["gsd_m_per_px"] = json!(1.0);
        v["domain"] = json!("ocean");
        let err = parse_corpus(&v.to_string()).unwrap_err();
        assert!(matches!(err, CorpusError::SchemaViolation { ref field, .. } if field == "domain"), "{err:?}");
    }

    #[test]
    fn must_end_with_terminate() {
        let mut r = record("a", Domain::Urban, &["Calculator"]);
        r.steps.pop();
        let err = parse_corpus(&r.to_canonical_json()).unwrap_err();
        assert!(matches!(err, CorpusError::SchemaViolation { ref field, .. } if field == "steps[0].action"));
    }

    #[test]
    fn empty_and_garbage() {
        assert!(matches!(parse_corpus(""), Err(CorpusError::ParseError { line: 1, .. })));
        assert!(matches!(parse_corpus("\n{oops\n"), Err(CorpusError::ParseError { line: 2, .. })));
    }

    #[test]
    fn duplicate_ids() {
        let r = record("a", Domain::Urban, &[]);
        let text = to_jsonl(&[r.clone(), r]);
        assert!(matches!(parse_corpus(&text), Err(CorpusError::SchemaViolation { ref field, .. }) if field == "id"));
    }

    #[test]
    fn stats_and_split() {
        let recs = vec![
            record("a", Domain::Urban, &["Calculator", "Solver"]),
            record("b", Domain::Disaster, &["Calculator"]),
        ];
        let s = stats(&recs);
        assert_eq!((s.n_instances, s.n_steps), (2, 5));
        assert_eq!(s.avg_steps, 2.5);
        assert_eq!(s.by_tool["Calculator"], 2);
        assert_eq!(s.by_domain["disaster"], 1);
        let e = stats(&[]);
        assert_eq!((e.n_instances, e.avg_steps), (0, 0.0));

        let (kept, dropped) = split(recs.clone(), |r| r.task.domain == Domain::Disaster);
        assert_eq!(kept.len(), 1);
        assert_eq!(dropped[0].id(), "a");
        assert_eq!(split(recs.clone(), |_| true).0, recs);
        assert!(split(recs, |_| false).0.is_empty());
    }

    #[test]
    fn unknown_tools_warned() {
        let reg = ToolRegistry::default_registry();
        let recs = vec![record("a", Domain::Urban, &["Teleport", "Calculator"])];
        assert_eq!(unknown_tool_warnings(&recs, &reg).len(), 1);
    }
}
