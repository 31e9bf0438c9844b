use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The configuration document is not well-formed or does not match the key schema.
    #[error("config parse error: {0}")]
    Parse(String),

    /// A value violates a documented invariant. `key` is the config key (or field) at fault.
    #[error("invalid {key}: {reason}")]
    Invalid { key: &'static str, reason: String },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error(
        "Nyquist violation: beat frequency {beat_hz:.6e} Hz must stay below fs/2 = {limit_hz:.6e} Hz"
    )]
    Nyquist { beat_hz: f64, limit_hz: f64 },

    #[error("spectrum peak at grid boundary (index {index} of {len}); widen the angle grid")]
    PeakAtBoundary { index: usize, len: usize },

    #[error("antenna selection must keep at least one TX and one RX element")]
    EmptySelection,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no result rows to write")]
    NoRows,

    #[error("sweep point {index} (d_rts = {d_rts_m} m) failed: {source}")]
    SweepPoint {
        index: usize,
        d_rts_m: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(key: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            key,
            reason: reason.into(),
        }
    }
}
