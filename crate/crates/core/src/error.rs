//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by grid construction, field operations, the solver and
/// the run orchestration layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid extent: x_max = {x_max} must exceed x_min = {x_min}")]
    InvalidExtent { x_min: f64, x_max: f64 },

    #[error("grid too coarse: n = {n}, need n >= {min}")]
    TooFewPoints { n: usize, min: usize },

    #[error("value array length {len} does not match grid size {n}")]
    LengthMismatch { len: usize, n: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid Lp exponent p = {p}; need p >= 1 (or infinity)")]
    InvalidExponent { p: f64 },

    #[error("{operation} requires a periodic grid")]
    NonPeriodic { operation: &'static str },

    #[error("direct oracle size guard: n = {n} exceeds cap {cap}")]
    OracleSizeGuard { n: usize, cap: usize },

    #[error("invalid kernel decay rate {decay}; need a positive finite value")]
    InvalidKernel { decay: f64 },

    #[error(
        "mollifier index n = {n} under-resolved: support width {width} < 8 dx = {min_width}"
    )]
    UnderResolvedMollifier { n: u32, width: f64, min_width: f64 },

    #[error("mollifier index must be >= 1")]
    ZeroMollifierIndex,

    #[error("position {x} lies outside the open domain ({x_min}, {x_max})")]
    PositionOutsideDomain { x: f64, x_min: f64, x_max: f64 },

    #[error("invalid profile parameter: {0}")]
    InvalidParameter(String),

    #[error("time step dt = {dt} violates the CFL bound {limit} (cfl dx / max(eps, sup|b|))")]
    CflViolation { dt: f64, limit: f64 },

    #[error("blow-up detected at t = {t}: sup-norm {sup} exceeds cap {cap}")]
    BlowUp { t: f64, sup: f64, cap: f64 },

    #[error("config error for key '{key}': {message}")]
    Config { key: String, message: String },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("test function support leaves the stored space-time box")]
    UnsupportedTestFunction,

    #[error("trajectory too short: need at least {need} stored samples, got {got}")]
    TrajectoryTooShort { need: usize, got: usize },

    #[error("diagnostic check(s) failed: {0}")]
    ChecksFailed(String),

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line layer.
    ///
    /// 1 = assertion/check failure, 2 = config or parse error, 3 = blow-up.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ChecksFailed(_) => 1,
            Error::Config { .. }
            | Error::Parse { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidExtent { .. }
            | Error::TooFewPoints { .. }
            | Error::InvalidExponent { .. }
            | Error::ZeroMollifierIndex
            | Error::UnderResolvedMollifier { .. }
            | Error::PositionOutsideDomain { .. }
            | Error::SnapshotFormat(_) => 2,
            Error::BlowUp { .. } => 3,
            _ => 1,
        }
    }
}
