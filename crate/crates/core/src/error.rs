use thiserror::Error;

/// Everything that can go wrong inside the library.
///
/// The variants double as the failure vocabulary of the CLI reports, so they
/// carry the measured quantity that caused the refusal.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("orthogonalization degenerated (matrix is numerically singular)")]
    NonInvertible,

    #[error("leading minor {index} is {minor:e}, below threshold: not in the big cell")]
    NotInBigCell { index: usize, minor: f64 },

    #[error("flags are not transverse (minor margin {margin:e})")]
    NotTransverse { margin: f64 },

    #[error("flag outside the section domain (minor margin {margin:e})")]
    OutOfDomain { margin: f64 },

    #[error("element is not loxodromic (relative modulus gap {gap:e})")]
    NotLoxodromic { gap: f64 },

    #[error("(r, eps) certification failed on clause ({clause}): observed {observed:e}, bound {bound:e}")]
    CertificationFailed {
        clause: &'static str,
        observed: f64,
        bound: f64,
    },

    #[error("grid of {grid} points is under-resolved (need at least {min})")]
    UnderResolved { grid: usize, min: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("seed {seed} could not be certified with powers up to {max_power}")]
    CannotCertify { seed: usize, max_power: u32 },

    #[error("generators {i} and {j} are not generic: margin {margin:e} < required {required:e}")]
    NotGeneric {
        i: usize,
        j: usize,
        margin: f64,
        required: f64,
    },

    #[error("word budget exceeded: {needed} words needed, cap is {cap}")]
    BudgetExceeded { needed: usize, cap: usize },

    #[error("ping-pong containment fails at n = {n} (factor {step}); increase n")]
    NeedLargerN { n: u32, step: usize },

    #[error("not dense at budget: worst point {worst_point:?} at distance {worst_distance:e}")]
    NotDenseAtBudget {
        worst_point: Vec<f64>,
        worst_distance: f64,
    },

    #[error("direction is not in the interior of the limit cone")]
    ThetaOutsideCone,
}

pub type Result<T> = std::result::Result<T, Error>;
