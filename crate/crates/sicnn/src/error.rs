//! Error type shared across the toolkit.

use thiserror::Error;

/// Unified error for schedule queries, model validation, integration, and
/// analysis. Variants are grouped so a driver can map them onto coarse
/// failure classes (bad input vs. solver breakdown vs. failed certificate).
#[derive(Error, Debug)]
pub enum SicnnError {
    /// A schedule was queried outside its declared index or time range.
    #[error("argument schedule range exceeded: {0}")]
    ScheduleRange(String),

    /// A model component failed structural validation (dimensions, signs,
    /// declared bounds, option constraints).
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// A configuration document could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    /// A history lookup fell outside the stored trajectory data.
    #[error("history not available: {0}")]
    History(String),

    /// The per-interval fixed-point iteration did not converge; the last
    /// observed contraction ratio is the diagnostic (a ratio near or above 1
    /// signals a violated smallness condition).
    #[error(
        "fixed-point iteration did not converge on [{left}, {right}] after {iters} passes \
         (last contraction ratio {last_ratio:.6})"
    )]
    NonConvergence {
        left: f64,
        right: f64,
        iters: usize,
        last_ratio: f64,
    },

    /// The two-segment initial data disagree on the overlap where the
    /// problem requires them to coincide.
    #[error("initial segments inconsistent on their overlap: {0}")]
    InconsistentInitialData(String),

    /// A trajectory is too short for the requested analysis.
    #[error("trajectory coverage insufficient: {0}")]
    Coverage(String),

    /// An analysis was requested whose hypotheses are not certified.
    #[error("required conditions not certified: {0}")]
    ConditionsNotMet(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, SicnnError>;
