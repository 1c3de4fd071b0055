use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible image parameters: {0}")]
    Infeasible(String),

    #[error("cannot draw {k} distinct {m}x{m} patterns ({available} valid patterns exist)")]
    InfeasibleDistinctSet { m: usize, k: usize, available: u128 },

    #[error("bit pattern generator exhausted its redraw cap for m={0}")]
    GeneratorDegenerate(usize),

    #[error("placement sampling exceeded {0} redraws")]
    PlacementTimeout(usize),

    #[error("items have mixed side lengths")]
    MixedItemSizes,

    #[error("need at least {needed} items, got {got}")]
    TooFewItems { needed: usize, got: usize },

    #[error("placement ({row}, {col}) of a {m}x{m} item is outside a {n}x{n} image")]
    OutOfBounds { row: usize, col: usize, m: usize, n: usize },

    #[error("batch size must be even, got {0}")]
    OddBatch(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NumericFault(&'static str),

    #[error("label {0} is outside the two-class range")]
    InvalidLabel(usize),

    #[error("learning curve is empty")]
    EmptyCurve,

    #[error("invalid architecture: {0}")]
    InvalidArch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by an (m, n, k) combination that cannot be realised.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_) | Error::InfeasibleDistinctSet { .. } | Error::PlacementTimeout(_)
        )
    }
}
