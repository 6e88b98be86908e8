use thiserror::Error;

/// Failures of the hand-coded automata and their drivers.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum NcaError {
    #[error("maze has no source tile")]
    MissingSource,
    #[error("maze has no target tile")]
    MissingTarget,
    #[error("tile {0} is a wall")]
    StartOnWall(usize),
    #[error("max_steps must be positive")]
    ZeroMaxSteps,
    #[error("floods never met; nothing to extract")]
    FloodsNotMet,
    #[error("path reached a fixpoint without covering source and target")]
    ExtractionIncomplete,
    #[error("no fixpoint within {0} steps")]
    MaxStepsExhausted(usize),
    #[error("maze has no open tile")]
    NoOpenTile,
    #[error("eccentricity calibration gave a negative value for age {0}")]
    NegativeEccentricity(i64),
}
