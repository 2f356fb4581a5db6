//! Deterministic executors for every registered tool, plus the geometry,
//! geodesy, spectral and rendering code they are built on.

pub mod bundle;
pub mod calculator;
pub mod exec;
pub mod fixtures;
pub mod geodesy;
pub mod geometry;
pub mod render;
pub mod solver;
pub mod spectral;

use thiserror::Error;

pub use bundle::{GeoBundle, RasterGrid, NODATA};
pub use calculator::{calculator_eval, CalcError};
pub use exec::{executor_for, BundleStore, ExecContext, ExecFn, EXECUTOR_IDS};
pub use fixtures::FixtureStore;
pub use geometry::{Feature, Geometry};
pub use solver::{solver_eval, SolverError};
pub use spectral::{compute_index, IndexKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("missing band `{0}`")]
    MissingBand(String),
    #[error("raster grids differ in size or georeferencing")]
    GridMismatch,
    #[error("missing layer `{0}`")]
    MissingLayer(String),
    #[error("place not found: {0}")]
    PlaceNotFound(String),
    #[error("bundle has no boundary layer")]
    NoBoundary,
    #[error("unknown POI query: {0}")]
    UnknownPoiQuery(String),
    #[error("layer `{0}` is empty")]
    EmptyLayer(String),
    #[error("missing raster metadata: {0}")]
    MissingMetadata(String),
    #[error("unknown image `{0}`")]
    UnknownImage(String),
    #[error("unknown label: {0}")]
    UnknownLabel(String),
    #[error("no canned text for `{0}`")]
    NoCannedText(String),
    #[error("unknown geo bundle `{0}`")]
    UnknownBundle(String),
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl GeoError {
    /// Stable machine-readable code for observations.
    pub fn code(&self) -> &'static str {
        match self {
            GeoError::MissingBand(_) => "MissingBand",
            GeoError::GridMismatch => "GridMismatch",
            GeoError::MissingLayer(_) => "MissingLayer",
            GeoError::PlaceNotFound(_) => "PlaceNotFound",
            GeoError::NoBoundary => "NoBoundary",
            GeoError::UnknownPoiQuery(_) => "UnknownPoiQuery",
            GeoError::EmptyLayer(_) => "EmptyLayer",
            GeoError::MissingMetadata(_) => "MissingMetadata",
            GeoError::UnknownImage(_) => "UnknownImage",
            GeoError::UnknownLabel(_) => "UnknownLabel",
            GeoError::NoCannedText(_) => "NoCannedText",
            GeoError::UnknownBundle(_) => "UnknownBundle",
            GeoError::InvalidBundle(_) => "InvalidBundle",
            GeoError::InvalidArgument(_) => "InvalidArgument",
            GeoError::IoFailure(_) => "IoFailure",
            GeoError::Calc(CalcError::ParseError { .. }) => "ParseError",
            GeoError::Calc(CalcError::DivisionByZero) => "DivisionByZero",
            GeoError::Calc(CalcError::UnknownFunction(_)) => "UnknownFunction",
            GeoError::Calc(CalcError::Arity { .. }) => "ArityMismatch",
            GeoError::Calc(CalcError::DomainError(_)) => "DomainError",
            GeoError::Solver(SolverError::ParseError(_)) => "ParseError",
            GeoError::Solver(SolverError::SingularEquation) => "SingularEquation",
            GeoError::Solver(SolverError::Calc(_)) => "ParseError",
        }
    }
}
