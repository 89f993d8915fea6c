use thiserror::Error;

/// Errors raised by the library.
///
/// The variants map onto the CLI exit codes: configuration problems are
/// [`Error::Config`] and [`Error::Domain`], everything else is a runtime
/// failure.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid argument: {0}")]
    Domain(String),

    /// A configuration field failed validation. `path` is the dotted field path.
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    /// Inputs are structurally inconsistent (mismatched grids, unmatched fragments, ...).
    #[error("structural error: {0}")]
    Structural(String),

    /// A rejection sampler ran out of attempts.
    #[error("rejection sampler exceeded {cap} attempts ({what})")]
    RejectionCap { cap: u64, what: String },

    /// The incremental energy cache disagrees with a full recompute.
    #[error("energy cache mismatch: cached {cached}, recomputed {recomputed}")]
    CacheCorrupt { cached: f64, recomputed: f64 },

    /// The initial state has zero weight and the chain cannot leave it.
    #[error("jammed start: {0}")]
    Jammed(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn structural<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Structural(msg.into()))
}
