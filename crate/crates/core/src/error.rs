use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("antenna position {index} lies outside the movable region (side {side} m)")]
    OutsideRegion { index: usize, side: f64 },

    #[error("empty admissible interval for the array reference position: [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("antenna {antenna} coincides with device {device}")]
    Coincident { antenna: usize, device: usize },

    #[error("zero channel: no precoder can deliver power")]
    ZeroChannel,

    #[error(
        "SDP solver did not converge after {iterations} iterations \
         (duality gap {duality_gap:.3e}, infeasibility {infeasibility:.3e})"
    )]
    SdpNotConverged {
        iterations: usize,
        duality_gap: f64,
        infeasibility: f64,
    },

    #[error("SDP solver failed: {0}")]
    SdpNumerical(String),

    #[error("every randomization candidate left some device without power")]
    NoFeasibleCandidate,

    #[error("no feasible particle found")]
    NoFeasibleParticle,

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
