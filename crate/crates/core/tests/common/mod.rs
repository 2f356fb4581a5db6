#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use geoagent_core::corpus::load_corpus;
use geoagent_core::evaluator::judge::OverlapJudge;
use geoagent_core::evaluator::EvalConfig;
use geoagent_core::policy::ScriptedPolicy;
use geoagent_core::{FixtureStore, Policy, PolicyError, ToolRegistry, Toolkit, TrajectoryRecord};
use tempfile::TempDir;

pub fn fixtures_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn golden_path() -> PathBuf {
    fixtures_root().join("corpus/golden.jsonl")
}

pub fn golden() -> Vec<TrajectoryRecord> {
    load_corpus(&golden_path()).expect("golden corpus loads")
}

pub fn golden_by_id(id: &str) -> TrajectoryRecord {
    golden().into_iter().find(|r| r.id() == id).expect("record exists")
}

/// Toolkit over the fixture world with a private output directory.
pub fn toolkit() -> (Toolkit, TempDir) {
    let out = tempfile::tempdir().unwrap();
    let fixtures = FixtureStore::load(&fixtures_root()).expect("fixture world loads");
    let tk = Toolkit::new(ToolRegistry::default_registry(), fixtures, out.path()).unwrap();
    (tk, out)
}

pub fn scripted(gold: &TrajectoryRecord) -> Result<Box<dyn Policy>, PolicyError> {
    Ok(Box::new(ScriptedPolicy::new(gold)))
}

/// Evaluation config with the offline judge so text answers are scored.
pub fn eval_config(registry: &ToolRegistry) -> EvalConfig {
    let mut c = EvalConfig::new(registry);
    c.judge = Some(Arc::new(OverlapJudge));
    c
}
