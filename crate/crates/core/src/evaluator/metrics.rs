//! Per-step ladder, category F1, tool-order verdicts and answer scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::judge::{Judge, JudgeError};
use crate::corpus::AnswerKind;
use crate::orchestrator::{Action, FormatError};
use crate::registry::{Category, IssueCode, ParamKind, ToolRegistry, ValidationMode};

/// Relative tolerance for numeric argument values.
pub const ARGV_RTOL: f64 = 1e-3;
/// Numeric answers within this fraction of the gold value score 1.
pub const NUMERIC_ANSWER_TOL: f64 = 0.10;
/// Absolute tolerance when the gold numeric answer is zero.
pub const ZERO_GOLD_ATOL: f64 = 1e-9;
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepScores {
    pub inst: bool,
    pub tool: bool,
    pub argn: bool,
    pub argv: bool,
    pub exempt: bool,
}

impl StepScores {
    pub fn is_monotone(&self) -> bool {
        (!self.tool || self.inst) && (!self.argn || self.tool) && (!self.argv || self.argn)
    }
}

fn final_segment(s: &str) -> &str {
    s.trim().trim_end_matches(['/', '\\']).rsplit(['/', '\\']).next().unwrap_or("")
}

fn numbers_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= ARGV_RTOL * a.abs().max(b.abs())
}

/// Argument value equality under the scoring normalization.
pub fn values_match(kind: Option<&ParamKind>, pred: &Value, gold: &Value) -> bool {
    let path_like = kind.is_some_and(ParamKind::is_path_like);
    match (pred, gold) {
        (Value::Number(a), Value::Number(b)) => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => numbers_close(x, y),
            _ => false,
        },
        (Value::String(a), Value::String(b)) => {
            let (a, b) = if path_like { (final_segment(a), final_segment(b)) } else { (a.as_str(), b.as_str()) };
            a.trim().to_lowercase() == b.trim().to_lowercase()
        }
        (Value::Array(a), Value::Array(b)) => {
            let inner = match kind {
                Some(ParamKind::ArrayOf(k)) => Some(k.as_ref()),
                _ => None,
            };
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| values_match(inner, x, y))
        }
        (Value::Object(a), Value::Object(b)) => {
            a.len() == b.len() && a.iter().all(|(k, v)| b.get(k).is_some_and(|w| values_match(None, v, w)))
        }
        (a, b) => a == b,
    }
}

fn present(args: &Value, name: &str) -> bool {
    args.get(name).is_some_and(|v| !v.is_null())
}

/// Scores one predicted turn against the gold action.
///
/// Step 1 and gold planning turns are exempt from aggregation but still scored.
pub fn score_step(pred: &Result<Action, FormatError>, gold: &Action, step_index: usize, registry: &ToolRegistry) -> StepScores {
    let mut s = StepScores {
        exempt: step_index == 1 || gold.call.is_none(),
        ..Default::default()
    };
    let Ok(pred) = pred else { return s };
    let Some(pc) = &pred.call else { return s };
    // Missing arguments are ArgN's concern; every other schema issue fails Inst.
    let report = registry.validate_call(&pc.tool, &pc.args, ValidationMode::Strict);
    s.inst = report.issues.iter().all(|i| i.code == IssueCode::MissingRequired);
    let Some(gc) = &gold.call else { return s };
    s.tool = s.inst && pc.tool == gc.tool;
    if !s.tool {
        return s;
    }
    let descriptor = registry.get(&gc.tool);
    let gold_names: Vec<&str> = gc
        .args
        .as_object()
        .map(|o| o.iter().filter(|(_, v)| !v.is_null()).map(|(k, _)| k.as_str()).collect())
        .unwrap_or_default();
    let required_ok = descriptor.is_none_or(|d| d.required_params().all(|p| present(&pc.args, &p.name)));
    s.argn = required_ok && gold_names.iter().all(|n| present(&pc.args, n));
    if !s.argn {
        return s;
    }
    s.argv = gold_names.iter().all(|n| {
        let kind = descriptor.and_then(|d| d.param(n)).map(|p| &p.kind);
        values_match(kind, &pc.args[*n], &gc.args[*n])
    });
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub any_order: bool,
    pub same_order: bool,
    pub unique: bool,
}

fn multiset<T: Ord>(s: &[T]) -> BTreeMap<&T, usize> {
    let mut m = BTreeMap::new();
    for x in s {
        *m.entry(x).or_insert(0usize) += 1;
    }
    m
}

pub fn order_metrics<T: Ord>(pred: &[T], gold: &[T]) -> OrderVerdict {
    let set = |s| multiset(s).into_keys().collect::<BTreeSet<_>>();
    OrderVerdict {
        unique: set(pred) == set(gold),
        any_order: multiset(pred) == multiset(gold),
        same_order: pred == gold,
    }
}

/// Per-category F1. `None` marks a category where both sides are empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CategoryF1 {
    pub per: Option<f64>,
    pub op: Option<f64>,
    pub logic: Option<f64>,
    pub gis: Option<f64>,
    /// Tool names (pred and gold) absent from the category map.
    pub unmapped: usize,
}

impl CategoryF1 {
    pub fn get(&self, c: Category) -> Option<f64> {
        match c {
            Category::Perception => self.per,
            Category::Operation => self.op,
            Category::Logic => self.logic,
            Category::Gis => self.gis,
        }
    }

    fn slot(&mut self, c: Category) -> &mut Option<f64> {
        match c {
            Category::Perception => &mut self.per,
            Category::Operation => &mut self.op,
            Category::Logic => &mut self.logic,
            Category::Gis => &mut self.gis,
        }
    }
}

pub fn f1_from_counts(tp: usize, n_pred: usize, n_gold: usize) -> Option<f64> {
    match (n_pred, n_gold) {
        (0, 0) => None,
        (0, _) | (_, 0) => Some(0.0),
        _ if tp == 0 => Some(0.0),
        _ => {
            let p = tp as f64 / n_pred as f64;
            let r = tp as f64 / n_gold as f64;
            Some(2.0 * p * r / (p + r))
        }
    }
}

type Bags<'a> = BTreeMap<Category, BTreeMap<&'a str, usize>>;

fn category_bags<'a>(tools: &'a [String], mapping: &BTreeMap<String, Category>, set_mode: bool, unmapped: &mut usize) -> Bags<'a> {
    let mut m: Bags<'a> = BTreeMap::new();
    for t in tools {
        match mapping.get(t) {
            Some(c) => {
                let n = m.entry(*c).or_default().entry(t.as_str()).or_default();
                *n = if set_mode { 1 } else { *n + 1 };
            }
            None => *unmapped += 1,
        }
    }
    m
}

/// Tool-selection F1 per category; multiset counting unless `set_mode`.
pub fn category_f1(pred: &[String], gold: &[String], mapping: &BTreeMap<String, Category>, set_mode: bool) -> CategoryF1 {
    let mut out = CategoryF1::default();
    let mut unmapped = 0;
    let p = category_bags(pred, mapping, set_mode, &mut unmapped);
    let g = category_bags(gold, mapping, set_mode, &mut unmapped);
    out.unmapped = unmapped;
    let empty = BTreeMap::new();
    for c in Category::ALL {
        let pc = p.get(&c).unwrap_or(&empty);
        let gc = g.get(&c).unwrap_or(&empty);
        let tp: usize = pc.iter().map(|(t, n)| (*n).min(gc.get(t).copied().unwrap_or(0))).sum();
        *out.slot(c) = f1_from_counts(tp, pc.values().sum(), gc.values().sum());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("no number found in `{0}`")]
    NoNumberFound(String),
    #[error("no box found in `{0}`")]
    NoBoxFound(String),
    #[error("no judge configured for a text answer")]
    JudgeUnavailable,
    #[error("judge failed: {0}")]
    Judge(#[from] JudgeError),
    #[error("generation answers are scored from tool execution")]
    NotApplicable,
}

impl ScoreError {
    /// Errors that exclude an item from the average rather than scoring it 0.
    pub fn is_skip(&self) -> bool {
        matches!(self, ScoreError::JudgeUnavailable | ScoreError::Judge(_) | ScoreError::NotApplicable)
    }
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"[-+]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?:[eE][-+]?\d+)?|[-+]?\.\d+").expect("valid regex")
    })
}

pub fn numbers_in(text: &str) -> Vec<f64> {
    number_re()
        .find_iter(text)
        .filter_map(|m| m.as_str().replace(',', "").parse().ok())
        .collect()
}

pub fn first_number(text: &str) -> Option<f64> {
    numbers_in(text).into_iter().next()
}

/// ±10% band, inclusive, with a few ulps of slack so values built as g·1.1 land inside.
pub fn numeric_match(pred: f64, gold: f64) -> bool {
    let diff = (pred - gold).abs();
    if gold == 0.0 {
        return diff <= ZERO_GOLD_ATOL;
    }
    diff <= NUMERIC_ANSWER_TOL * gold.abs() + 4.0 * f64::EPSILON * pred.abs().max(gold.abs())
}

pub fn iou(a: [f64; 4], b: [f64; 4]) -> f64 {
    let norm = |r: [f64; 4]| [r[0].min(r[2]), r[1].min(r[3]), r[0].max(r[2]), r[1].max(r[3])];
    let (a, b) = (norm(a), norm(b));
    let area = |r: [f64; 4]| (r[2] - r[0]) * (r[3] - r[1]);
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    inter / union
}

fn first_box(text: &str) -> Option<[f64; 4]> {
    let n = numbers_in(text);
    (n.len() >= 4).then(|| [n[0], n[1], n[2], n[3]])
}

/// Scores a final answer in [0, 1]. Empty predictions score 0.
pub fn answer_score(
    pred: &str,
    gold: &str,
    kind: AnswerKind,
    query: &str,
    judge: Option<&dyn Judge>,
    iou_threshold: f64,
) -> Result<f64, ScoreError> {
    if pred.trim().is_empty() {
        return Ok(0.0);
    }
    match kind {
        AnswerKind::Numeric => {
            let g = first_number(gold).ok_or_else(|| ScoreError::NoNumberFound(gold.to_owned()))?;
            let p = first_number(pred).ok_or_else(|| ScoreError::NoNumberFound(pred.to_owned()))?;
            Ok(if numeric_match(p, g) { 1.0 } else { 0.0 })
        }
        AnswerKind::Bbox => {
            let g = first_box(gold).ok_or_else(|| ScoreError::NoBoxFound(gold.to_owned()))?;
            let p = first_box(pred).ok_or_else(|| ScoreError::NoBoxFound(pred.to_owned()))?;
            Ok(if iou(p, g) >= iou_threshold { 1.0 } else { 0.0 })
        }
        AnswerKind::Text => {
            let judge = judge.ok_or(ScoreError::JudgeUnavailable)?;
            Ok(judge.score(query, pred, gold)?.clamp(0.0, 1.0))
        }
        AnswerKind::Generation => Err(ScoreError::NotApplicable),
    }
}

/// Score with failures folded in: `None` when the item is skipped.
pub fn answer_score_or_skip(
    pred: &str,
    gold: &str,
    kind: AnswerKind,
    query: &str,
    judge: Option<&dyn Judge>,
    iou_threshold: f64,
) -> (Option<f64>, Option<ScoreError>) {
    match answer_score(pred, gold, kind, query, judge, iou_threshold) {
        Ok(s) => (Some(s), None),
        Err(e) if e.is_skip() => (None, Some(e)),
        Err(e) => (Some(0.0), Some(e)),
    }
}
