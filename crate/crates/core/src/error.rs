//! Crate-wide error type. Operations that report measured failures as data
//! (failed certificates, failed checks) return report structs instead; this
//! enum is for contract violations and numerical breakdowns only.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("map evaluation produced a non-finite value at ({0:?})")]
    EvaluationFailure([f64; 3]),

    #[error("threshold too small: max modulus at r = {r} is {max_mod}, not above r")]
    ThresholdTooSmall { r: f64, max_mod: f64 },

    #[error("empty sample set")]
    EmptySet,

    #[error("dimension mismatch: map is {map_dim}-dimensional, point is {point_dim}-dimensional")]
    DimensionMismatch { map_dim: u8, point_dim: u8 },

    #[error("point lies outside the map family's valid region: {0}")]
    OutsideRegion(String),

    #[error(
        "iteration failed to converge after {steps} steps (last delta {last_delta:.3e}, tolerance {tolerance:.3e})"
    )]
    Convergence {
        steps: usize,
        last_delta: f64,
        tolerance: f64,
    },

    #[error("target is outside the verified injectivity neighbourhood (round-trip error {round_trip:.3e})")]
    OutsideInjectivity { round_trip: f64 },

    #[error("pull-back seed chain broke at vertex {index}")]
    SeedChainBreak { index: usize },

    #[error("contour extraction ambiguous at grid resolution {resolution}; retry with at least {suggested}")]
    RefineGrid { resolution: usize, suggested: usize },

    #[error("ring too thin: no integer scaling exponent fits A(r, r^mu); need r > {min_r:.6e}")]
    RingTooThin { min_r: f64 },

    #[error("map shows no uniform expansion on the tested radii (checked N up to {tested})")]
    NotExpanding { tested: u32 },

    #[error("no valid mu exists: degree {d} does not exceed dilatation {k}")]
    NoValidMu { d: f64, k: f64 },

    #[error("dilatation estimate unreliable: {degenerate} of {total} cells degenerate")]
    UnreliableEstimate { degenerate: usize, total: usize },

    #[error("root refinement failed for {failed} of {total} roots after retry")]
    RootRefinement { failed: usize, total: usize },

    #[error("{checked} pieces at requested depth exceed the {limit} piece budget")]
    PieceBudget { checked: usize, limit: usize },

    #[error("requested neighbourhood diameter {requested:.3e} needs a stage deeper than {deepest}")]
    NeedDeeperStage { requested: f64, deepest: usize },

    #[error("geometric feasibility pre-check failed: {0}")]
    Infeasible(String),

    #[error("voxel resolution too coarse: piece separation {separation:.3e} under two voxels ({voxel:.3e})")]
    VoxelResolution { separation: f64, voxel: f64 },

    #[error("value overflowed the log-representable range")]
    LogOverflow,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
