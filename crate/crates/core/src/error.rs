use crate::life_trait::LifeTrait;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A trait coordinate is negative, NaN, or infinite.
    #[error("invalid trait ({xb}, {xd}): coordinates must be finite and nonnegative")]
    InvalidTrait { xb: f64, xd: f64 },

    /// An operation that needs a positive fertile-and-safe span got `min(x_b, x_d) <= 0`.
    #[error("trait ({0}) has no fertile-and-safe span; the growth rate is undefined")]
    NoSpan(LifeTrait),

    /// An operation restricted to the viable region `min(x_b, x_d) > 1` got a non-viable trait.
    #[error("trait ({0}) is not viable: min(x_b, x_d) must exceed 1")]
    NonViable(LifeTrait),

    /// An operation restricted to off-diagonal traits got a diagonal one.
    #[error("trait ({0}) lies on the diagonal x_b = x_d where this quantity is undefined")]
    Diagonal(LifeTrait),

    /// A scalar parameter failed validation.
    #[error("parameter `{name}` = {value} is out of range: {requirement}")]
    Parameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// Two age grids or fields that must match do not.
    #[error("mismatched {what}: expected {expected}, got {got}")]
    Mismatch {
        what: &'static str,
        expected: String,
        got: String,
    },

    /// The mass system's sign pattern (m11 > 0, m22 < 0, m21 >= 0) is violated.
    #[error("mass system sign pattern violated: {0}")]
    SignPattern(String),

    /// Age-density mass is not negligible at the top of the age grid.
    #[error("age grid too short: relative tail mass {tail:.3e} exceeds {limit:.1e}")]
    TailMass { tail: f64, limit: f64 },

    /// The certified boundary-density bound of the subordinated construction was exceeded.
    #[error("subordination bound violated: boundary density {observed:.6} exceeds certified bound {bound:.6}")]
    SubordinationBound { bound: f64, observed: f64 },

    /// A stopping rule is missing or contradictory.
    #[error("invalid stopping rule: {0}")]
    StoppingRule(String),

    /// A step was requested on an empty population.
    #[error("population is extinct; no further events can occur")]
    Extinct,
}
