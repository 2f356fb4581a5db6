//! Deterministic replay of stored trajectories and the corpus gate built on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical;
use crate::corpus::TrajectoryRecord;
use crate::orchestrator::{Observation, Session, SessionConfig, ToolCall, Toolkit};
use crate::registry::{validate_call, ParamKind, ToolRegistry, ValidationMode};

/// Relative differences up to this are exact.
pub const EXACT_RTOL: f64 = 1e-9;
/// Relative differences up to this are tolerant; larger ones mismatch.
pub const TOLERANT_RTOL: f64 = 1e-6;
/// Below this magnitude numbers are compared by absolute difference.
pub const ABS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationMatch {
    Exact,
    Skipped,
    Tolerant,
    Mismatch,
}

impl ObservationMatch {
    pub fn accepts(self) -> bool {
        self != ObservationMatch::Mismatch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReplay {
    pub step: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool: Option<String>,
    pub arg_format_ok: bool,
    pub validation_ok: bool,
    pub execution_ok: bool,
    pub observation_match: ObservationMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayFailure {
    pub step: usize,
    pub code: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub id: String,
    pub per_step: Vec<StepReplay>,
    pub full_chain_executable: bool,
    pub failures: Vec<ReplayFailure>,
}

impl ReplayReport {
    pub fn to_canonical_json(&self) -> String {
        canonical::to_canonical_string(self).expect("report serializes")
    }

    pub fn all_exact(&self) -> bool {
        self.per_step
            .iter()
            .all(|s| matches!(s.observation_match, ObservationMatch::Exact | ObservationMatch::Skipped))
    }
}

fn compare_numbers(a: f64, b: f64) -> ObservationMatch {
    let scale = a.abs().max(b.abs());
    let diff = (a - b).abs();
    if diff == 0.0 || (scale < ABS_FLOOR && diff <= ABS_FLOOR) {
        return ObservationMatch::Exact;
    }
    let rel = diff / scale;
    if rel <= EXACT_RTOL {
        ObservationMatch::Exact
    } else if rel <= TOLERANT_RTOL {
        ObservationMatch::Tolerant
    } else {
        ObservationMatch::Mismatch
    }
}

/// Structural comparison: numbers by relative difference, strings after
/// trailing-whitespace strip, everything else exactly.
pub fn compare_values(stored: &Value, fresh: &Value) -> ObservationMatch {
    use ObservationMatch::*;
    match (stored, fresh) {
        (Value::Number(a), Value::Number(b)) => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => compare_numbers(x, y),
            _ => Mismatch,
        },
        (Value::String(a), Value::String(b)) => {
            if a.trim_end() == b.trim_end() {
                Exact
            } else {
                Mismatch
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                return Mismatch;
            }
            a.iter().zip(b).map(|(x, y)| compare_values(x, y)).max().unwrap_or(Exact)
        }
        (Value::Object(a), Value::Object(b)) => {
            if a.len() != b.len() || a.keys().any(|k| !b.contains_key(k)) {
                return Mismatch;
            }
            a.iter().map(|(k, v)| compare_values(v, &b[k])).max().unwrap_or(Exact)
        }
        (a, b) => {
            if a == b {
                Exact
            } else {
                Mismatch
            }
        }
    }
}

fn compare_observations(stored: &Observation, fresh: &Observation, toolkit: &Toolkit) -> ObservationMatch {
    if stored.ok != fresh.ok {
        return ObservationMatch::Mismatch;
    }
    match (&stored.value, &fresh.value) {
        (Some(s), Some(f)) => {
            if let Some(path) = f.get("image_path").and_then(Value::as_str) {
                let same_key = s.get("image_path").is_some();
                return if same_key && toolkit.out_dir.join(path).is_file() {
                    ObservationMatch::Skipped
                } else {
                    ObservationMatch::Mismatch
                };
            }
            compare_values(s, f)
        }
        _ => match (&stored.error, &fresh.error) {
            (Some(a), Some(b)) if a.code == b.code => ObservationMatch::Exact,
            _ => ObservationMatch::Mismatch,
        },
    }
}

fn lonlat_in_bounds(lon: f64, lat: f64) -> bool {
    (-180.0..=180.0).contains(&lon) && (-90.0..=90.0).contains(&lat)
}

fn coordinate_problems(kind: &ParamKind, name: &str, value: &Value, out: &mut Vec<String>) {
    let nums = |v: &Value| -> Option<Vec<f64>> { v.as_array()?.iter().map(Value::as_f64).collect() };
    match kind {
        ParamKind::BboxWsen => {
            if let Some(b) = nums(value).filter(|b| b.len() == 4) {
                if !(lonlat_in_bounds(b[0], b[1]) && lonlat_in_bounds(b[2], b[3])) {
                    out.push(format!("`{name}` {b:?} leaves the EPSG:4326 bounds"));
                }
            }
        }
        ParamKind::CoordinateLonLat => {
            if let Some(c) = nums(value).filter(|c| c.len() == 2) {
                if !lonlat_in_bounds(c[0], c[1]) {
                    out.push(format!("`{name}` {c:?} leaves the EPSG:4326 bounds"));
                }
            }
        }
        ParamKind::ArrayOf(inner) => {
            for item in value.as_array().into_iter().flatten() {
                coordinate_problems(inner, name, item, out);
            }
        }
        _ => {}
    }
}

/// Geographic arguments that fall outside the CRS domain.
pub fn coordinate_integrity(registry: &ToolRegistry, call: &ToolCall) -> Vec<String> {
    let mut out = Vec::new();
    let (Some(tool), Some(args)) = (registry.get(&call.tool), call.args.as_object()) else {
        return out;
    };
    for p in &tool.params {
        if let Some(v) = args.get(&p.name) {
            coordinate_problems(&p.kind, &p.name, v, &mut out);
        }
    }
    out
}

/// Re-validates and re-executes every stored call in a fresh session and
/// compares the fresh observations with the stored ones.
pub fn replay(record: &TrajectoryRecord, toolkit: &Toolkit) -> ReplayReport {
    let config = SessionConfig {
        cache_enabled: false,
        max_steps: record.steps.len().max(1),
        ..SessionConfig::default()
    };
    let mut session = Session::new(toolkit, &record.task, config);
    let mut per_step = Vec::with_capacity(record.steps.len());
    let mut failures = Vec::new();
    let mut fail = |step: usize, code: &str, detail: String| {
        failures.push(ReplayFailure {
            step,
            code: code.to_owned(),
            detail,
        })
    };

    for (i, step) in record.steps.iter().enumerate() {
        let index = i + 1;
        let Some(call) = &step.action else {
            // A planning turn is fine; a stored format error is not executable.
            let format_error = step.observation.is_some();
            if format_error {
                fail(index, "FormatError", "stored step has an error observation but no action".into());
            }
            session.record_without_call(step.as_action(), step.observation.clone());
            per_step.push(StepReplay {
                step: index,
                tool: None,
                arg_format_ok: !format_error,
                validation_ok: !format_error,
                execution_ok: !format_error,
                observation_match: ObservationMatch::Skipped,
            });
            continue;
        };

        let mut sr = StepReplay {
            step: index,
            tool: Some(call.tool.clone()),
            arg_format_ok: call.args.is_object(),
            validation_ok: false,
            execution_ok: false,
            observation_match: ObservationMatch::Mismatch,
        };
        if !sr.arg_format_ok {
            fail(index, "ArgumentFormat", "arguments are not a JSON object".into());
        }
        let coords = coordinate_integrity(&toolkit.registry, call);
        if !coords.is_empty() {
            sr.arg_format_ok = false;
            fail(index, "CoordinateIntegrity", coords.join("; "));
        }
        let report = validate_call(&toolkit.registry, &call.tool, &call.args, ValidationMode::Strict);
        sr.validation_ok = report.ok;
        if !report.ok {
            fail(index, "ValidationFailed", report.summary());
        }

        if sr.arg_format_ok && sr.validation_ok {
            match session.step(step.as_action()) {
                Ok(fresh) => {
                    sr.execution_ok = fresh.ok;
                    if let Some(e) = &fresh.error {
                        fail(index, "ExecutionFailed", format!("{}: {}", e.code, e.detail));
                    }
                    let mut geometry = Vec::new();
                    for reference in session.last_mutated() {
                        if let Some(b) = session.bundle(reference) {
                            let [w, s, e, n] = b.bbox;
                            if !(lonlat_in_bounds(w, s) && lonlat_in_bounds(e, n)) {
                                geometry.push(format!("{reference}: bbox {:?} leaves the EPSG:4326 bounds", b.bbox));
                            }
                            geometry.extend(b.problems().into_iter().map(|p| format!("{reference}: {p}")));
                        }
                    }
                    if !geometry.is_empty() {
                        sr.execution_ok = false;
                        fail(index, "GeometryValidity", geometry.join("; "));
                    }
                    sr.observation_match = match &step.observation {
                        Some(stored) => compare_observations(stored, &fresh, toolkit),
                        None => ObservationMatch::Mismatch,
                    };
                    if sr.observation_match == ObservationMatch::Mismatch {
                        fail(index, "ObservationMismatch", format!("fresh observation {}", fresh.canonical()));
                    }
                }
                Err(e) => fail(index, "SessionError", e.to_string()),
            }
        } else {
            // Keep the transcript aligned for later steps.
            session.record_without_call(step.as_action(), step.observation.clone());
        }
        per_step.push(sr);
    }

    let full_chain_executable = per_step
        .iter()
        .all(|s| s.execution_ok && s.observation_match.accepts());
    ReplayReport {
        id: record.id().to_owned(),
        per_step,
        full_chain_executable,
        failures,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub report: ReplayReport,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GateOutcome {
    pub accepted: Vec<TrajectoryRecord>,
    pub rejected: Vec<Rejection>,
}

/// Keeps records whose full chain replays. Input order is preserved in both lists.
pub fn corpus_gate(records: &[TrajectoryRecord], toolkit: &Toolkit) -> GateOutcome {
    let reports: Vec<ReplayReport> = records.par_iter().map(|r| replay(r, toolkit)).collect();
    let mut out = GateOutcome::default();
    for (record, report) in records.iter().zip(reports) {
        if report.full_chain_executable {
            out.accepted.push(record.clone());
        } else {
            out.rejected.push(Rejection {
                id: record.id().to_owned(),
                report,
            });
        }
    }
    out
}
