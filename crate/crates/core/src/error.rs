use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The exact photon expansion was asked for more photons than supported.
    #[error("capacity exceeded: {photons} photons requested, at most {limit} supported")]
    Capacity { photons: usize, limit: usize },

    /// `Q_tot` vanished, so the total error rate is undefined.
    #[error("degenerate totals: total gain is zero")]
    DegenerateTotal,

    #[error("no secret key at the start of the search interval (L = {0} km)")]
    NoKeyAtOrigin(f64),

    #[error("key rate still positive at the end of the search interval (L = {0} km)")]
    BracketExceeded(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed yield table at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
