//! Seeded traffic sources producing application-layer PDUs.
//!
//! Each source is an independent iterator owning its own random stream, so
//! identical `(parameters, seed)` always yield identical sequences.

mod mixture;
mod profile;
mod sources;

use thiserror::Error;

pub use mixture::{
    fit_mixture, fit_mixture_with, FitError, FitShape, MixtureParams, DEFAULT_SIGMA_LARGE,
    DEFAULT_SIGMA_SMALL,
};
pub use profile::{
    Codec, ProfileFile, SizeLaw, TrafficProfile, DEFAULT_CAP_SLACK, DEFAULT_INTERVAL_JITTER_MS,
    PROFILE_SCHEMA_VERSION,
};
pub use sources::{
    cloud_source, AppFrame, AppKind, CloudParams, PoissonSource, TrackingSource, VideoSource,
    DEFAULT_CLOUD_DL_PACKET, DEFAULT_CLOUD_UL_PACKET, DEFAULT_TRACKING_PAYLOAD, TRACKING_MAX_HZ,
    TRACKING_MIN_HZ,
};

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("profile {label}: {msg}")]
    Profile { label: String, msg: String },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
}

pub fn video_source(profile: &TrafficProfile, seed: u64) -> Result<VideoSource, TrafficError> {
    VideoSource::new(profile, seed)
}

pub fn tracking_source(
    freq_hz: f64,
    payload_bytes: u32,
    seed: u64,
) -> Result<TrackingSource, TrafficError> {
    TrackingSource::new(freq_hz, payload_bytes, seed)
}
