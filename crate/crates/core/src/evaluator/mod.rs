//! Teacher-forced step scoring, end-to-end runs, and the report tables.

pub mod judge;
pub mod metrics;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use judge::{Judge, JudgeError, OverlapJudge, RemoteJudge};
pub use metrics::{
    answer_score, category_f1, iou, order_metrics, score_step, values_match, CategoryF1, OrderVerdict, ScoreError,
    StepScores, DEFAULT_IOU_THRESHOLD,
};

use crate::canonical;
use crate::corpus::{AnswerKind, TrajectoryRecord};
use crate::orchestrator::{self, parse_action, FormatErrorKind, RunLog, RunOutcome, SessionConfig, Toolkit, WorkingMemory};
use crate::orchestrator::{MemoryView, Observation};
use crate::policy::{Policy, PolicyError};
use crate::registry::{Category, ToolRegistry, TERMINATE};

pub const TABLE1_COLUMNS: [&str; 5] = ["Inst.", "Tool.", "ArgN.", "ArgV.", "Summ."];
pub const TABLE2_COLUMNS: [&str; 9] = ["Per.", "Op.", "Logic.", "GIS.", "AnyOr.", "SameO.", "Uni.", "Ans.", "Gen."];

/// Builds a fresh policy for one gold task.
pub type PolicyFactory<'a> = dyn Fn(&TrajectoryRecord) -> Result<Box<dyn Policy>, PolicyError> + Sync + 'a;

#[derive(Clone)]
pub struct EvalConfig {
    pub session: SessionConfig,
    pub workers: usize,
    pub f1_set_mode: bool,
    pub iou_threshold: f64,
    pub judge: Option<Arc<dyn Judge>>,
    pub category_map: BTreeMap<String, Category>,
    /// Free-form policy description, folded into the config digest.
    pub policy_label: String,
}

impl EvalConfig {
    pub fn new(registry: &ToolRegistry) -> Self {
        Self {
            session: SessionConfig::default(),
            workers: 1,
            f1_set_mode: false,
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            judge: None,
            category_map: registry.category_map(),
            policy_label: String::new(),
        }
    }

    /// Digest over every setting that can change a score. Worker count is excluded.
    pub fn digest(&self, mode: EvalMode) -> String {
        let v = json!({
            "mode": mode,
            "session": self.session,
            "f1_set_mode": self.f1_set_mode,
            "iou_threshold": self.iou_threshold,
            "judge": self.judge.as_ref().map(|j| j.name()),
            "category_map": self.category_map,
            "policy": self.policy_label,
        });
        canonical::digest_of(&v).expect("config serializes")
    }

    fn judge(&self) -> Option<&dyn Judge> {
        self.judge.as_deref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Step,
    E2e,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub no_action: usize,
    pub wrong_format: usize,
    pub answer_without_tool: usize,
    pub multiple_calls: usize,
}

impl ErrorCounts {
    pub fn add_format(&mut self, kind: FormatErrorKind) {
        match kind {
            FormatErrorKind::NoAction => self.no_action += 1,
            FormatErrorKind::WrongFormat => self.wrong_format += 1,
            FormatErrorKind::MultipleCalls => self.multiple_calls += 1,
        }
    }

    pub fn merge(&mut self, o: &ErrorCounts) {
        self.no_action += o.no_action;
        self.wrong_format += o.wrong_format;
        self.answer_without_tool += o.answer_without_tool;
        self.multiple_calls += o.multiple_calls;
    }

    pub fn total(&self) -> usize {
        self.no_action + self.wrong_format + self.answer_without_tool + self.multiple_calls
    }
}

pub fn error_taxonomy<'a>(logs: impl IntoIterator<Item = &'a RunLog>) -> ErrorCounts {
    let mut c = ErrorCounts::default();
    for log in logs {
        for k in &log.format_errors {
            c.add_format(*k);
        }
        c.answer_without_tool += log.answered_without_tool as usize;
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub id: String,
    pub detail: String,
}

// --- step mode ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepwiseTask {
    pub id: String,
    pub steps: Vec<StepScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summ: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summ_note: Option<String>,
    pub errors: ErrorCounts,
}

impl StepwiseTask {
    pub fn scored(&self) -> impl Iterator<Item = &StepScores> {
        self.steps.iter().filter(|s| !s.exempt)
    }
}

fn terminate_answer(action: &orchestrator::Action) -> Option<String> {
    let call = action.call.as_ref().filter(|c| c.tool == TERMINATE)?;
    Some(match call.args.get("answer") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => String::new(),
        Some(v) => canonical::canonical_value(v),
    })
}

fn normalized(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Teacher forcing over one gold trajectory: at step t the policy sees the gold
/// prefix and its output is scored against gold step t. Nothing executes.
/// The gold Terminate step is scored as Summ instead of on the ladder.
pub fn stepwise_eval(
    policy: &mut dyn Policy,
    gold: &TrajectoryRecord,
    registry: &ToolRegistry,
    config: &EvalConfig,
) -> Result<StepwiseTask, PolicyError> {
    let mut out = StepwiseTask {
        id: gold.id().to_owned(),
        ..Default::default()
    };
    for (i, gold_step) in gold.steps.iter().enumerate() {
        let index = i + 1;
        let memory = WorkingMemory::with_prefix(&gold.task, &gold.steps[..i]);
        let text = policy.next_action(&MemoryView { memory: &memory, registry })?;
        let allowance_used = memory.thought_only_turns() >= config.session.thought_only_allowance;
        let pred = parse_action(&text, index, allowance_used);
        if let Err(e) = &pred {
            out.errors.add_format(e.kind);
        }
        let gold_action = gold_step.as_action();
        let is_final = index == gold.steps.len() && gold_step.tool() == Some(TERMINATE);
        if !is_final {
            out.steps.push(score_step(&pred, &gold_action, index, registry));
            continue;
        }
        let answer = pred.as_ref().ok().and_then(terminate_answer).unwrap_or_default();
        if gold.answer_kind == AnswerKind::Generation {
            // Nothing is rendered under teacher forcing; compare the stated answers.
            let hit = !answer.trim().is_empty() && normalized(&answer) == normalized(&gold.final_answer);
            out.summ = Some(if hit { 1.0 } else { 0.0 });
        } else {
            let (score, note) = metrics::answer_score_or_skip(
                &answer,
                &gold.final_answer,
                gold.answer_kind,
                &gold.task.query,
                config.judge(),
                config.iou_threshold,
            );
            out.summ = score;
            out.summ_note = note.map(|e| e.to_string());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepwiseMetrics {
    pub inst: Option<f64>,
    pub tool: Option<f64>,
    pub argn: Option<f64>,
    pub argv: Option<f64>,
    pub summ: Option<f64>,
    pub scored_steps: usize,
    pub summ_scored: usize,
    pub summ_skipped: usize,
}

fn pct(hits: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| 100.0 * hits as f64 / n as f64)
}

fn mean_pct(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| 100.0 * sum / n as f64)
}

pub fn aggregate_stepwise(tasks: &[StepwiseTask]) -> StepwiseMetrics {
    let scored: Vec<&StepScores> = tasks.iter().flat_map(StepwiseTask::scored).collect();
    let n = scored.len();
    let count = |f: fn(&StepScores) -> bool| scored.iter().filter(|s| f(s)).count();
    StepwiseMetrics {
        inst: pct(count(|s| s.inst), n),
        tool: pct(count(|s| s.tool), n),
        argn: pct(count(|s| s.argn), n),
        argv: pct(count(|s| s.argv), n),
        summ: mean_pct(tasks.iter().filter_map(|t| t.summ)),
        scored_steps: n,
        summ_scored: tasks.iter().filter(|t| t.summ.is_some()).count(),
        summ_skipped: tasks.iter().filter(|t| t.summ.is_none()).count(),
    }
}

// --- end-to-end mode --------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct E2eTask {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<RunOutcome>,
    pub pred_tools: Vec<String>,
    pub gold_tools: Vec<String>,
    pub f1: CategoryF1,
    pub order: OrderVerdict,
    pub final_answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<f64>,
    pub errors: ErrorCounts,
    pub total_calls: usize,
    pub failed_calls: usize,
    pub incomplete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// The gold call whose successful execution counts as producing the requested output:
/// the last non-Terminate operation call, else the last non-Terminate call.
pub fn generation_tool(gold: &TrajectoryRecord, mapping: &BTreeMap<String, Category>) -> Option<String> {
    let calls: Vec<&str> = gold.steps.iter().filter_map(|s| s.tool()).filter(|t| *t != TERMINATE).collect();
    calls
        .iter()
        .rev()
        .find(|t| mapping.get(**t) == Some(&Category::Operation))
        .or(calls.last())
        .map(|t| (*t).to_owned())
}

fn score_e2e(run: &orchestrator::RunResult, gold: &TrajectoryRecord, config: &EvalConfig) -> E2eTask {
    let pred_tools = run.record.tool_sequence();
    let gold_tools = gold.tool_sequence();
    let mut t = E2eTask {
        id: gold.id().to_owned(),
        outcome: Some(run.outcome),
        f1: category_f1(&pred_tools, &gold_tools, &config.category_map, config.f1_set_mode),
        order: order_metrics(&pred_tools, &gold_tools),
        final_answer: run.record.final_answer.clone(),
        errors: error_taxonomy([&run.log]),
        total_calls: run.log.total_calls,
        failed_calls: run.log.failed_calls,
        incomplete: run.outcome != RunOutcome::Completed,
        pred_tools,
        gold_tools,
        ..Default::default()
    };
    if gold.answer_kind == AnswerKind::Generation {
        let made = generation_tool(gold, &config.category_map).is_some_and(|tool| {
            run.record
                .steps
                .iter()
                .any(|s| s.tool() == Some(tool.as_str()) && s.observation.as_ref().is_some_and(|o: &Observation| o.ok))
        });
        t.generation = Some(if made && !t.incomplete { 1.0 } else { 0.0 });
    } else {
        let (score, note) = metrics::answer_score_or_skip(
            &run.record.final_answer,
            &gold.final_answer,
            gold.answer_kind,
            &gold.task.query,
            config.judge(),
            config.iou_threshold,
        );
        t.answer = score;
        t.answer_note = note.map(|e| e.to_string());
    }
    t
}

fn failed_e2e(gold: &TrajectoryRecord, detail: String) -> E2eTask {
    let gold_tools = gold.tool_sequence();
    E2eTask {
        id: gold.id().to_owned(),
        f1: CategoryF1::default(),
        order: order_metrics(&[], &gold_tools),
        answer: (gold.answer_kind != AnswerKind::Generation).then_some(0.0),
        generation: (gold.answer_kind == AnswerKind::Generation).then_some(0.0),
        gold_tools,
        incomplete: true,
        failure: Some(detail),
        ..Default::default()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct E2eMetrics {
    pub f1_per: Option<f64>,
    pub f1_op: Option<f64>,
    pub f1_logic: Option<f64>,
    pub f1_gis: Option<f64>,
    pub any_order: Option<f64>,
    pub same_order: Option<f64>,
    pub unique: Option<f64>,
    pub answer_acc: Option<f64>,
    pub gen_acc: Option<f64>,
    pub answer_scored: usize,
    pub answer_skipped: usize,
    pub unmapped_tools: usize,
}

pub fn aggregate_e2e(tasks: &[E2eTask], config: &EvalConfig) -> E2eMetrics {
    // A failed task contributes F1 = 0 wherever the gold needed that category.
    let f1 = |c: Category| {
        mean_pct(tasks.iter().filter_map(|t| {
            if t.failure.is_some() {
                let gold_has = t.gold_tools.iter().any(|g| config.category_map.get(g) == Some(&c));
                return gold_has.then_some(0.0);
            }
            t.f1.get(c)
        }))
    };
    let flag = |f: fn(&OrderVerdict) -> bool| mean_pct(tasks.iter().map(|t| if f(&t.order) { 1.0 } else { 0.0 }));
    E2eMetrics {
        f1_per: f1(Category::Perception),
        f1_op: f1(Category::Operation),
        f1_logic: f1(Category::Logic),
        f1_gis: f1(Category::Gis),
        any_order: flag(|o| o.any_order),
        same_order: flag(|o| o.same_order),
        unique: flag(|o| o.unique),
        answer_acc: mean_pct(tasks.iter().filter_map(|t| t.answer)),
        gen_acc: mean_pct(tasks.iter().filter_map(|t| t.generation)),
        answer_scored: tasks.iter().filter(|t| t.answer.is_some()).count(),
        answer_skipped: tasks.iter().filter(|t| t.answer.is_none() && t.generation.is_none()).count(),
        unmapped_tools: tasks.iter().map(|t| t.f1.unmapped).sum(),
    }
}

// --- report -----------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CallStats {
    pub total_calls: usize,
    pub failed_calls: usize,
    pub incomplete_runs: usize,
    pub incomplete_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub n_tasks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepwise: Option<StepwiseMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2e: Option<E2eMetrics>,
    pub errors: ErrorCounts,
    pub call_stats: CallStats,
    pub policy_failures: Vec<TaskFailure>,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stepwise_tasks: Vec<StepwiseTask>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub e2e_tasks: Vec<E2eTask>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("could not build worker pool: {0}")]
    Pool(String),
    #[error("csv: {0}")]
    Csv(String),
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, EvalError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))
}

fn sorted_by_id(golds: &[TrajectoryRecord]) -> Vec<&TrajectoryRecord> {
    let mut v: Vec<&TrajectoryRecord> = golds.iter().collect();
    v.sort_by(|a, b| a.id().cmp(b.id()));
    v
}

/// Teacher-forced evaluation of every gold trajectory.
pub fn evaluate_stepwise(
    factory: &PolicyFactory<'_>,
    golds: &[TrajectoryRecord],
    registry: &ToolRegistry,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let golds = sorted_by_id(golds);
    let results: Vec<Result<StepwiseTask, TaskFailure>> = pool(config.workers)?.install(|| {
        golds
            .par_iter()
            .map(|g| {
                let fail = |e: PolicyError| TaskFailure {
                    id: g.id().to_owned(),
                    detail: e.to_string(),
                };
                let mut policy = factory(g).map_err(fail)?;
                stepwise_eval(policy.as_mut(), g, registry, config).map_err(fail)
            })
            .collect()
    });
    let mut tasks = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(t) => tasks.push(t),
            Err(f) => failures.push(f),
        }
    }
    let mut errors = ErrorCounts::default();
    for t in &tasks {
        errors.merge(&t.errors);
    }
    Ok(EvalReport {
        mode: EvalMode::Step,
        n_tasks: golds.len(),
        stepwise: Some(aggregate_stepwise(&tasks)),
        e2e: None,
        errors,
        call_stats: CallStats {
            incomplete_runs: failures.len(),
            incomplete_rate: pct(failures.len(), golds.len()),
            ..Default::default()
        },
        policy_failures: failures,
        config_digest: config.digest(EvalMode::Step),
        stepwise_tasks: tasks,
        e2e_tasks: Vec::new(),
    })
}

/// Live runs through the orchestrator, scored against the gold trajectories.
/// A policy failure is recorded against its task and the batch continues.
pub fn evaluate_e2e(
    factory: &PolicyFactory<'_>,
    golds: &[TrajectoryRecord],
    toolkit: &Toolkit,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let golds = sorted_by_id(golds);
    let tasks: Vec<E2eTask> = pool(config.workers)?.install(|| {
        golds
            .par_iter()
            .map(|g| {
                let result = factory(g).map_err(|e| e.to_string()).and_then(|mut p| {
                    orchestrator::run(p.as_mut(), &g.task, g.answer_kind, toolkit, &config.session)
                        .map_err(|e| e.to_string())
                });
                match result {
                    Ok(run) => score_e2e(&run, g, config),
                    Err(detail) => failed_e2e(g, detail),
                }
            })
            .collect()
    });
    let mut errors = ErrorCounts::default();
    for t in &tasks {
        errors.merge(&t.errors);
    }
    let incomplete = tasks.iter().filter(|t| t.incomplete).count();
    Ok(EvalReport {
        mode: EvalMode::E2e,
        n_tasks: tasks.len(),
        stepwise: None,
        e2e: Some(aggregate_e2e(&tasks, config)),
        errors,
        call_stats: CallStats {
            total_calls: tasks.iter().map(|t| t.total_calls).sum(),
            failed_calls: tasks.iter().map(|t| t.failed_calls).sum(),
            incomplete_runs: incomplete,
            incomplete_rate: pct(incomplete, tasks.len()),
        },
        policy_failures: tasks
            .iter()
            .filter_map(|t| {
                t.failure.as_ref().map(|d| TaskFailure {
                    id: t.id.clone(),
                    detail: d.clone(),
                })
            })
            .collect(),
        config_digest: config.digest(EvalMode::E2e),
        stepwise_tasks: Vec::new(),
        e2e_tasks: tasks,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

fn csv_row(header: &[&str], row: &[String]) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| EvalError::Csv(e.to_string()))?;
    w.write_record(row).map_err(|e| EvalError::Csv(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| EvalError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

impl EvalReport {
    pub fn to_canonical_json(&self) -> String {
        canonical::to_canonical_string(self).expect("report serializes")
    }

    /// Step-mode columns; empty cells mean not applicable.
    pub fn table1_csv(&self) -> Result<String, EvalError> {
        let s = self.stepwise.clone().unwrap_or_default();
        csv_row(&TABLE1_COLUMNS, &[s.inst, s.tool, s.argn, s.argv, s.summ].map(cell))
    }

    pub fn table2_csv(&self) -> Result<String, EvalError> {
        let e = self.e2e.clone().unwrap_or_default();
        csv_row(
            &TABLE2_COLUMNS,
            &[
                e.f1_per,
                e.f1_op,
                e.f1_logic,
                e.f1_gis,
                e.any_order,
                e.same_order,
                e.unique,
                e.answer_acc,
                e.gen_acc,
            ]
            .map(cell),
        )
    }
}
