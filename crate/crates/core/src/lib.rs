//! Tool registry, deterministic geospatial executors, the agent loop, trajectory
//! corpora with replay gating, and the evaluation metric suite.

pub mod canonical;
pub mod corpus;
pub mod evaluator;
pub mod geotools;
pub mod orchestrator;
pub mod policy;
pub mod registry;
pub mod replay;

pub use corpus::{AnswerKind, CorpusStats, Domain, Modality, TaskInput, TaskInstance, TrajectoryRecord, TrajectoryStep};
pub use geotools::{FixtureStore, GeoBundle, GeoError};
pub use orchestrator::{
    parse_action, run, Action, FormatError, FormatErrorKind, Observation, RunOutcome, RunResult, SessionConfig,
    ToolCall, Toolkit,
};
pub use policy::{Policy, PolicyError, PolicyHandle, RemoteConfig};
pub use registry::{Category, ToolDescriptor, ToolRegistry, ValidationMode, ValidationReport};
