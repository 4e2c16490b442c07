use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("mode ({m}, {n}, {l}) outside truncation M = {max}")]
    ModeOutOfRange { m: usize, n: usize, l: usize, max: usize },

    #[error("mode ({m}, {n}, {l}) is not in the included mode set")]
    ModeNotIncluded { m: usize, n: usize, l: usize },

    #[error("nonzero coupling {coupling:e} between degenerate modes {a} and {b}")]
    Degeneracy { a: usize, b: usize, coupling: f64 },

    #[error("empty time grid")]
    EmptyTimeGrid,

    #[error("trace never crosses 1/e (min modulus {min_modulus:.4} at t = {t_end:e} s)")]
    InsufficientHorizon { t_end: f64, min_modulus: f64 },

    #[error("linear solver failed after {iterations} iterations: relative residual {residual:e}, condition estimate {condition_estimate:e}")]
    Solver {
        iterations: usize,
        residual: f64,
        condition_estimate: f64,
    },

    #[error("extremum of S_x(B_y) stuck at sweep edge |B_y| = {edge:e} after {extensions} extensions")]
    Range { edge: f64, extensions: usize },

    #[error("unknown divergence-free gradient case {0} (expected 1, 2 or 3)")]
    UnknownCase(u8),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
