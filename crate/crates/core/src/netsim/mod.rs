//! Discrete-event simulation of the fetch-one-frame pipeline: tracking
//! uplink, edge render, encode, fragmentation and link transport,
//! reassembly, decode, overlay render and per-eye render.

pub mod clock;
mod engine;
pub mod fragment;
pub mod link;
pub mod stage;

use thiserror::Error;

pub use clock::{estimate_offset, ClockModel, OffsetEstimate};
pub use engine::{generate_streams, run, run_with_streams, DelayRecord, RunOutput, SourceStreams};
pub use fragment::{fragment, reassemble, MacFrame, ReassemblyError};
pub use link::{link_transport_delay, LinkModel};
pub use stage::{
    compile_law, fit_lognormal, sample_stage, LognormalFit, SampledLaw, Stage, StageLaw,
    StageModels, StageSampler,
};

#[derive(Debug, Error)]
pub enum NetsimError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no lognormal has mean {mean_ms} ms and 95th percentile {p95_ms} ms")]
    NoLognormal { mean_ms: f64, p95_ms: f64 },
    #[error("probe rejected: {0}")]
    ProbeRejected(String),
    #[error(transparent)]
    Scenario(#[from] crate::scenario::ConfigError),
    #[error(transparent)]
    Traffic(#[from] crate::trafficgen::TrafficError),
}
