use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a profile needs at least two knots")]
    EmptyProfile,
    #[error("knot positions must start at 0 and increase strictly (knot {0})")]
    NonMonotonePositions(usize),
    #[error("knot {0} has a negative or non-finite value")]
    NegativeValue(usize),
    #[error("knot {0} has value 0 strictly inside (0, h)")]
    InteriorZero(usize),
    #[error("profiles have different extinction heights ({0} vs {1})")]
    ExtinctionMismatch(f64, f64),
    #[error("the limit of ell/sigma^2 at 0 is not finite")]
    InfiniteRatioAtZero,
    #[error("sigma vanishes at interior point {0}")]
    SigmaZeroInside(f64),
    #[error("offspring law does not fit the profile: {0}")]
    LawProfileMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coalescent event needs {requested} children but only {available} exist")]
    InfeasibleEvent { requested: u64, available: u64 },
    #[error("cannot follow {m} lineages in a generation of size {size}")]
    InfeasibleCount { m: u64, size: u64 },
    #[error("k = {k} exceeds the vertex count {vertices}")]
    KTooLarge { k: usize, vertices: usize },
    #[error("delta = {0} is outside (0, h/n) or gives an empty height interval")]
    DeltaOutOfRange(f64),
    #[error("height {0} is outside the profile support (0, h)")]
    HeightOutOfRange(f64),
    #[error("need at least {min} samples per side, got {got}")]
    TooFewSamples { min: usize, got: usize },
}
