//! The perceive-reason-act loop: parse a model turn, validate and execute the
//! call, record the observation, repeat until Terminate or the step budget runs out.

mod action;
mod cache;
pub mod prompt;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use action::{
    parse_action, render_action, Action, FormatError, FormatErrorKind, Observation, ObservationError, ToolCall,
};
pub use cache::{cache_fingerprint, ExecutionCache};

use crate::corpus::{AnswerKind, TaskInput, TaskInstance, TrajectoryRecord, TrajectoryStep};
use crate::geotools::{executor_for, BundleStore, ExecContext, FixtureStore, GeoBundle};
use crate::policy::{Policy, PolicyError};
use crate::registry::{validate_call, ParamKind, ToolRegistry, ValidationMode, TERMINATE};

/// Three format errors in a row end the session.
pub const MAX_CONSECUTIVE_FORMAT_ERRORS: usize = 3;

pub const VALIDATION_FAILED: &str = "ValidationFailed";
pub const EXECUTOR_ERROR: &str = "ExecutorError";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub index: usize,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Observation>,
}

/// What the policy conditions on. The transcript only grows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkingMemory {
    pub instruction: String,
    pub inputs: Vec<TaskInput>,
    pub metadata: BTreeMap<String, Value>,
    transcript: Vec<TranscriptEntry>,
}

impl WorkingMemory {
    pub fn new(task: &TaskInstance) -> Self {
        let mut metadata = BTreeMap::new();
        for input in &task.inputs {
            if let Some(g) = input.gsd_m_per_px {
                metadata.entry("gsd_m_per_px".to_owned()).or_insert(Value::from(g));
            }
            if let Some(c) = &input.crs {
                metadata.entry("crs".to_owned()).or_insert(Value::from(c.clone()));
            }
        }
        Self {
            instruction: task.query.clone(),
            inputs: task.inputs.clone(),
            metadata,
            transcript: Vec::new(),
        }
    }

    /// Memory holding a recorded prefix, as seen under teacher forcing.
    pub fn with_prefix(task: &TaskInstance, steps: &[TrajectoryStep]) -> Self {
        let mut m = Self::new(task);
        for s in steps {
            m.push(s.as_action(), s.observation.clone());
        }
        m
    }

    pub fn push(&mut self, action: Action, observation: Option<Observation>) -> usize {
        let index = self.transcript.len() + 1;
        self.transcript.push(TranscriptEntry {
            index,
            action,
            observation,
        });
        index
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    pub fn len(&self) -> usize {
        self.transcript.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transcript.is_empty()
    }

    pub fn thought_only_turns(&self) -> usize {
        self.transcript
            .iter()
            .filter(|e| e.action.call.is_none() && e.observation.is_none())
            .count()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MemoryView<'a> {
    pub memory: &'a WorkingMemory,
    pub registry: &'a ToolRegistry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub max_steps: usize,
    pub thought_only_allowance: usize,
    pub strict_validation: bool,
    pub cache_enabled: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            max_steps: 20,
            thought_only_allowance: 1,
            strict_validation: true,
            cache_enabled: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrchestratorError {
    #[error("tool `{tool}` is bound to unknown executor `{executor}`")]
    UnboundExecutor { tool: String, executor: String },
    #[error("registry has no Terminate tool")]
    MissingTerminate,
    #[error("max_steps must be at least 1")]
    InvalidConfig,
    #[error("action carries no tool call")]
    NoCall,
    #[error("session already terminated")]
    Terminated,
}

/// Read-only resources shared by every session.
#[derive(Debug, Clone)]
pub struct Toolkit {
    pub registry: ToolRegistry,
    pub fixtures: FixtureStore,
    /// Rendered outputs land here.
    pub out_dir: PathBuf,
    pub search_endpoint: Option<String>,
}

impl Toolkit {
    /// Fails if any descriptor names an executor that does not exist.
    pub fn new(registry: ToolRegistry, fixtures: FixtureStore, out_dir: impl Into<PathBuf>) -> Result<Self, OrchestratorError> {
        for t in registry.iter() {
            if executor_for(&t.executor_id).is_none() {
                return Err(OrchestratorError::UnboundExecutor {
                    tool: t.name.clone(),
                    executor: t.executor_id.clone(),
                });
            }
        }
        Ok(Self {
            registry,
            fixtures,
            out_dir: out_dir.into(),
            search_endpoint: None,
        })
    }
}

fn path_args(registry: &ToolRegistry, call: &ToolCall) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let (Some(tool), Some(args)) = (registry.get(&call.tool), call.args.as_object()) else {
        return out;
    };
    for p in &tool.params {
        let value = args.get(&p.name);
        match (&p.kind, value) {
            (k, Some(Value::String(s))) if k.is_path_like() => {
                out.insert(s.clone());
            }
            (ParamKind::ArrayOf(inner), Some(Value::Array(items))) if inner.is_path_like() => {
                out.extend(items.iter().filter_map(Value::as_str).map(str::to_owned));
            }
            _ => {}
        }
    }
    out
}

/// One agent session: working memory, cache and bundles are owned here.
pub struct Session<'t> {
    toolkit: &'t Toolkit,
    config: SessionConfig,
    memory: WorkingMemory,
    cache: ExecutionCache,
    bundles: BundleStore,
    last_mutated: BTreeSet<String>,
    terminated: bool,
    pub executor_invocations: usize,
}

impl<'t> Session<'t> {
    pub fn new(toolkit: &'t Toolkit, task: &TaskInstance, config: SessionConfig) -> Self {
        Self {
            toolkit,
            config,
            memory: WorkingMemory::new(task),
            cache: ExecutionCache::new(),
            bundles: BundleStore::new(),
            last_mutated: BTreeSet::new(),
            terminated: false,
            executor_invocations: 0,
        }
    }

    pub fn memory(&self) -> &WorkingMemory {
        &self.memory
    }

    pub fn view(&self) -> MemoryView<'_> {
        MemoryView {
            memory: &self.memory,
            registry: &self.toolkit.registry,
        }
    }

    pub fn cache(&self) -> &ExecutionCache {
        &self.cache
    }

    pub fn bundles(&self) -> impl Iterator<Item = (&str, &GeoBundle)> {
        self.bundles.iter()
    }

    pub fn bundle(&self, reference: &str) -> Option<&GeoBundle> {
        self.bundles.get(reference)
    }

    /// Bundles written by the most recent executed call.
    pub fn last_mutated(&self) -> &BTreeSet<String> {
        &self.last_mutated
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    /// Records a turn without a tool call (planning turn or format error).
    pub fn record_without_call(&mut self, action: Action, observation: Option<Observation>) {
        self.memory.push(action, observation);
    }

    /// Validates and executes the call (or serves it from the cache) and appends the result.
    pub fn step(&mut self, action: Action) -> Result<Observation, OrchestratorError> {
        if self.terminated {
            return Err(OrchestratorError::Terminated);
        }
        let call = action.call.clone().ok_or(OrchestratorError::NoCall)?;
        self.last_mutated.clear();
        let obs = self.execute(&call);
        if obs.ok && call.tool == TERMINATE {
            self.terminated = true;
        }
        self.memory.push(action, Some(obs.clone()));
        Ok(obs)
    }

    fn execute(&mut self, call: &ToolCall) -> Observation {
        let registry = &self.toolkit.registry;
        let fingerprint = cache_fingerprint(&call.tool, &call.args);
        if self.config.cache_enabled {
            if let Some(obs) = self.cache.lookup(&fingerprint) {
                return obs;
            }
        }
        let mode = if self.config.strict_validation {
            ValidationMode::Strict
        } else {
            ValidationMode::Lenient
        };
        let report = validate_call(registry, &call.tool, &call.args, mode);
        if !report.ok {
            return Observation::error(VALIDATION_FAILED, report.summary());
        }
        let descriptor = registry.get(&call.tool).expect("validated above");
        let Some(exec) = executor_for(&descriptor.executor_id) else {
            return Observation::error(EXECUTOR_ERROR, format!("no executor `{}`", descriptor.executor_id));
        };
        let mut ctx = ExecContext::new(&self.toolkit.fixtures, &mut self.bundles, &self.toolkit.out_dir);
        ctx.search_endpoint = self.toolkit.search_endpoint.as_deref();
        self.executor_invocations += 1;
        let result = exec(&call.args, &mut ctx);
        let mutated = std::mem::take(&mut ctx.mutated);
        let obs = match result {
            Ok(value) => Observation::ok(value),
            Err(e) => Observation::error(EXECUTOR_ERROR, format!("{}: {e}", e.code())),
        };
        if obs.ok {
            if let Some(v) = &obs.value {
                if let Some(bundle) = v.get("geopackage").and_then(Value::as_str) {
                    for key in ["layer", "links_layer", "change_layer"] {
                        if let Some(layer) = v.get(key).and_then(Value::as_str) {
                            self.cache.register_artifact(layer, bundle);
                        }
                    }
                }
            }
            if self.config.cache_enabled {
                self.cache.insert(fingerprint, obs.clone(), path_args(registry, call), &mutated);
            }
        }
        self.last_mutated = mutated;
        obs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "format_errors")]
pub enum RunOutcome {
    Completed,
    StepExhausted,
    Aborted(usize),
}

/// Per-run counters consumed by the error taxonomy and call statistics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunLog {
    pub format_errors: Vec<FormatErrorKind>,
    pub answered_without_tool: bool,
    pub total_calls: usize,
    pub failed_calls: usize,
    pub thought_only_turns: usize,
    pub executor_invocations: usize,
    pub cache_hits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub record: TrajectoryRecord,
    pub outcome: RunOutcome,
    pub log: RunLog,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Setup(#[from] OrchestratorError),
    #[error("policy failure: {0}")]
    PolicyFailure(#[from] PolicyError),
}

fn answer_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => crate::canonical::canonical_value(other),
    }
}

/// Drives one live session until Terminate succeeds, the step budget is spent,
/// or the policy produces three unusable turns in a row.
///
/// Only turns that carry (or attempt) a tool call count against `max_steps`.
pub fn run(
    policy: &mut dyn Policy,
    task: &TaskInstance,
    answer_kind: AnswerKind,
    toolkit: &Toolkit,
    config: &SessionConfig,
) -> Result<RunResult, RunError> {
    if config.max_steps == 0 {
        return Err(OrchestratorError::InvalidConfig.into());
    }
    if !toolkit.registry.contains(TERMINATE) {
        return Err(OrchestratorError::MissingTerminate.into());
    }
    let mut session = Session::new(toolkit, task, config.clone());
    let mut log = RunLog::default();
    let mut steps_used = 0;
    let mut consecutive_errors = 0;
    let mut successful_calls = 0;
    let mut final_answer = None;
    let mut outcome = RunOutcome::StepExhausted;

    while steps_used < config.max_steps {
        let text = policy.next_action(&session.view())?;
        let allowance_used = log.thought_only_turns >= config.thought_only_allowance;
        let step_index = session.memory().len() + 1;
        match parse_action(&text, step_index, allowance_used) {
            Ok(action) if action.call.is_none() => {
                log.thought_only_turns += 1;
                consecutive_errors = 0;
                session.record_without_call(action, None);
            }
            Ok(action) => {
                steps_used += 1;
                consecutive_errors = 0;
                log.total_calls += 1;
                let call = action.call.clone().expect("checked above");
                let obs = session.step(action)?;
                if !obs.ok {
                    log.failed_calls += 1;
                    continue;
                }
                if call.tool == TERMINATE {
                    log.answered_without_tool = successful_calls == 0;
                    final_answer = Some(answer_text(call.args.get("answer").unwrap_or(&Value::Null)));
                    outcome = RunOutcome::Completed;
                    break;
                }
                successful_calls += 1;
            }
            Err(fe) => {
                steps_used += 1;
                consecutive_errors += 1;
                log.format_errors.push(fe.kind);
                session.record_without_call(
                    Action::thought_only(text),
                    Some(Observation::error(fe.kind.as_str(), fe.detail)),
                );
                if consecutive_errors >= MAX_CONSECUTIVE_FORMAT_ERRORS {
                    outcome = RunOutcome::Aborted(consecutive_errors);
                    break;
                }
            }
        }
    }

    log.executor_invocations = session.executor_invocations;
    log.cache_hits = session.cache().hits;
    let steps = session
        .memory()
        .transcript()
        .iter()
        .map(|e| TrajectoryStep {
            thought: e.action.thought.clone(),
            action: e.action.call.clone(),
            observation: e.observation.clone(),
        })
        .collect();
    Ok(RunResult {
        record: TrajectoryRecord {
            task: task.clone(),
            steps,
            final_answer: final_answer.unwrap_or_default(),
            answer_kind,
        },
        outcome,
        log,
    })
}
