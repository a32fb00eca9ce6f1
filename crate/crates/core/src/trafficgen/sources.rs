use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::mixture::MixtureParams;
use super::profile::TrafficProfile;
use super::TrafficError;
use crate::rng::{stream, stream_rng};

pub const TRACKING_MIN_HZ: f64 = 60.0;
pub const TRACKING_MAX_HZ: f64 = 1000.0;
pub const DEFAULT_TRACKING_PAYLOAD: u32 = 64;
pub const DEFAULT_CLOUD_DL_PACKET: u32 = 400;
pub const DEFAULT_CLOUD_UL_PACKET: u32 = 120;

/// Jitter draws are truncated at this many standard deviations.
const JITTER_TRUNCATION: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppKind {
    Video,
    Tracking,
    CloudDl,
    CloudUl,
    OffsetProbe,
}

/// One application-layer PDU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppFrame {
    pub id: u64,
    pub kind: AppKind,
    /// Generation time on the originating clock.
    pub gen_time_us: u64,
    pub size_bytes: u32,
}

fn truncated_std_normal(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= JITTER_TRUNCATION {
            return z;
        }
    }
}

/// Downlink VBR video frames.
#[derive(Debug, Clone)]
pub struct VideoSource {
    mixture: Option<MixtureParams>,
    constant_bytes: u32,
    period_us: f64,
    jitter_us: f64,
    rng: ChaCha8Rng,
    next_id: u64,
    clock_us: f64,
}

impl VideoSource {
    pub fn new(profile: &TrafficProfile, seed: u64) -> Result<Self, TrafficError> {
        profile.validate()?;
        Ok(Self {
            mixture: profile.mixture()?,
            constant_bytes: profile.mean_frame_bytes.round().max(1.0) as u32,
            period_us: profile.nominal_interval_us(),
            jitter_us: profile.interval_jitter_ms * 1000.0,
            rng: stream_rng(seed, stream::VIDEO),
            next_id: 0,
            clock_us: 0.0,
        })
    }
}

impl Iterator for VideoSource {
    type Item = AppFrame;

    fn next(&mut self) -> Option<AppFrame> {
        let id = self.next_id;
        if id > 0 {
            let jitter = if self.jitter_us > 0.0 {
                self.jitter_us * truncated_std_normal(&mut self.rng)
            } else {
                0.0
            };
            self.clock_us += (self.period_us + jitter).max(1.0);
        }
        let size_bytes = match &self.mixture {
            Some(m) => m.sample(&mut self.rng),
            None => self.constant_bytes,
        };
        self.next_id += 1;
        Some(AppFrame {
            id,
            kind: AppKind::Video,
            gen_time_us: self.clock_us.round() as u64,
            size_bytes,
        })
    }
}

/// Uplink head/controller pose samples at a fixed rate.
#[derive(Debug, Clone)]
pub struct TrackingSource {
    period_us: f64,
    payload_bytes: u32,
    jitter_us: f64,
    rng: ChaCha8Rng,
    next_id: u64,
    last_us: Option<u64>,
}

impl TrackingSource {
    pub fn new(freq_hz: f64, payload_bytes: u32, seed: u64) -> Result<Self, TrafficError> {
        Self::with_jitter(freq_hz, payload_bytes, 0.0, seed)
    }

    /// Samples are placed at `k / freq` plus a truncated-normal offset of
    /// standard deviation `jitter_us`, kept strictly increasing.
    pub fn with_jitter(
        freq_hz: f64,
        payload_bytes: u32,
        jitter_us: f64,
        seed: u64,
    ) -> Result<Self, TrafficError> {
        if !(TRACKING_MIN_HZ..=TRACKING_MAX_HZ).contains(&freq_hz) {
            return Err(TrafficError::Input(format!(
                "tracking frequency must be in [{TRACKING_MIN_HZ}, {TRACKING_MAX_HZ}] Hz, got {freq_hz}"
            )));
        }
        if payload_bytes == 0 {
            return Err(TrafficError::Input(
                "tracking payload must be >= 1 byte".into(),
            ));
        }
        if !(jitter_us >= 0.0) {
            return Err(TrafficError::Input(format!(
                "jitter must be >= 0, got {jitter_us}"
            )));
        }
        Ok(Self {
            period_us: 1e6 / freq_hz,
            payload_bytes,
            jitter_us,
            rng: stream_rng(seed, stream::TRACKING),
            next_id: 0,
            last_us: None,
        })
    }
}

impl Iterator for TrackingSource {
    type Item = AppFrame;

    fn next(&mut self) -> Option<AppFrame> {
        let id = self.next_id;
        let nominal = id as f64 * self.period_us;
        let offset = if self.jitter_us > 0.0 {
            self.jitter_us * truncated_std_normal(&mut self.rng)
        } else {
            0.0
        };
        let mut t = (nominal + offset).round().max(0.0) as u64;
        if let Some(last) = self.last_us {
            t = t.max(last + 1);
        }
        self.last_us = Some(t);
        self.next_id += 1;
        Some(AppFrame {
            id,
            kind: AppKind::Tracking,
            gen_time_us: t,
            size_bytes: self.payload_bytes,
        })
    }
}

/// Poisson packet stream with uniformly varying sizes around a mean.
#[derive(Debug, Clone)]
pub struct PoissonSource {
    kind: AppKind,
    interarrival: Option<Exp<f64>>,
    mean_bytes: u32,
    rng: ChaCha8Rng,
    next_id: u64,
    clock_us: f64,
}

impl PoissonSource {
    fn new(
        kind: AppKind,
        rate_bps: f64,
        mean_bytes: u32,
        start_us: f64,
        seed: u64,
        stream: u64,
    ) -> Self {
        // packets per microsecond
        let lambda = rate_bps / (8.0 * f64::from(mean_bytes)) / 1e6;
        Self {
            kind,
            interarrival: (lambda > 0.0).then(|| Exp::new(lambda).expect("positive rate")),
            mean_bytes,
            rng: stream_rng(seed, stream),
            next_id: 0,
            clock_us: start_us,
        }
    }
}

impl Iterator for PoissonSource {
    type Item = AppFrame;

    fn next(&mut self) -> Option<AppFrame> {
        let exp = self.interarrival?;
        self.clock_us += exp.sample(&mut self.rng);
        let half = self.mean_bytes / 2;
        let size_bytes = self
            .rng
            .random_range(self.mean_bytes - half..=self.mean_bytes + half)
            .max(1);
        let id = self.next_id;
        self.next_id += 1;
        Some(AppFrame {
            id,
            kind: self.kind,
            gen_time_us: self.clock_us.round() as u64,
            size_bytes,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudParams {
    pub dl_bps: f64,
    pub ul_bps: f64,
    pub start_s: f64,
    #[serde(default = "default_dl_packet")]
    pub dl_packet_bytes: u32,
    #[serde(default = "default_ul_packet")]
    pub ul_packet_bytes: u32,
}

fn default_dl_packet() -> u32 {
    DEFAULT_CLOUD_DL_PACKET
}

fn default_ul_packet() -> u32 {
    DEFAULT_CLOUD_UL_PACKET
}

impl CloudParams {
    pub fn new(dl_bps: f64, ul_bps: f64, start_s: f64) -> Self {
        Self {
            dl_bps,
            ul_bps,
            start_s,
            dl_packet_bytes: DEFAULT_CLOUD_DL_PACKET,
            ul_packet_bytes: DEFAULT_CLOUD_UL_PACKET,
        }
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        for (name, v) in [
            ("dl_bps", self.dl_bps),
            ("ul_bps", self.ul_bps),
            ("start_s", self.start_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(TrafficError::Input(format!(
                    "cloud {name} must be >= 0, got {v}"
                )));
            }
        }
        if self.dl_packet_bytes == 0 || self.ul_packet_bytes == 0 {
            return Err(TrafficError::Input(
                "cloud packet sizes must be >= 1 byte".into(),
            ));
        }
        Ok(())
    }
}

/// Downlink and uplink multi-party traffic exchanged with a cloud server,
/// silent before `start_s`.
pub fn cloud_source(
    params: &CloudParams,
    seed: u64,
) -> Result<(PoissonSource, PoissonSource), TrafficError> {
    params.validate()?;
    let start_us = params.start_s * 1e6;
    Ok((
        PoissonSource::new(
            AppKind::CloudDl,
            params.dl_bps,
            params.dl_packet_bytes,
            start_us,
            seed,
            stream::CLOUD_DL,
        ),
        PoissonSource::new(
            AppKind::CloudUl,
            params.ul_bps,
            params.ul_packet_bytes,
            start_us,
            seed,
            stream::CLOUD_UL,
        ),
    ))
}
