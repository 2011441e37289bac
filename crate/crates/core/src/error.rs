//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by model construction, numerics, searches, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |h - h\u{2020}| = {deviation:.3e} exceeds {tolerance:.0e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix is not unitary: \u{2016}u\u{2020}u - I\u{2016}_F = {deviation:.3e} exceeds {tolerance:.0e}")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("determinant deviates from 1 by {deviation:.3e} (tolerance {tolerance:.0e})")]
    NotSpecialUnitary { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("spin index {index} out of range for {n_spins} spins")]
    SpinIndexOutOfRange { index: usize, n_spins: usize },

    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("invalid target transformation: {0}")]
    InvalidTarget(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error(
        "control bound violated at sample {index}: amplitude {amplitude_hz:.6} Hz exceeds bound {bound_hz:.6} Hz"
    )]
    BoundViolation {
        index: usize,
        amplitude_hz: f64,
        bound_hz: f64,
    },

    #[error("state vector is not normalized: |\u{2016}\u{3c8}\u{2016} - 1| = {deviation:.3e}")]
    UnnormalizedState { deviation: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("chemical shifts are degenerate: |\u{3b4}1 - \u{3b4}2|\u{3c9}0 = {difference:.3e} rad/s")]
    DegenerateShifts { difference: f64 },

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("inconsistent bisection bracket: {0}")]
    InconsistentBracket(String),

    #[error("config error (line {line}): {message}")]
    Config { line: usize, message: String },

    #[error("pulse file error: {0}")]
    PulseFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
