use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mixture::{fit_mixture, MixtureParams};
use super::TrafficError;

pub const PROFILE_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_CAP_SLACK: f64 = 1.25;
pub const DEFAULT_INTERVAL_JITTER_MS: f64 = 1.0;

/// Headroom a VBR stream's mean rate may take over its target bitrate.
const ENCODER_SLACK: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Codec {
    H264,
    H265,
}

/// How frame sizes are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SizeLaw {
    /// Mixture fitted to the profile's mean and threshold fraction.
    #[default]
    Fitted,
    /// Every frame is exactly `mean_frame_bytes`.
    Constant,
    Mixture {
        params: MixtureParams,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficProfile {
    pub label: String,
    pub codec: Codec,
    pub target_bitrate_bps: f64,
    pub frame_rate_fps: f64,
    pub mean_frame_bytes: f64,
    pub frac_over_threshold: f64,
    pub threshold_bytes: f64,
    /// Length of the connect/load phase preceding gameplay. Informational;
    /// analysis ranges are set on the scenario.
    #[serde(default)]
    pub warmup_s: f64,
    #[serde(default = "default_jitter")]
    pub interval_jitter_ms: f64,
    #[serde(default = "default_cap_slack")]
    pub cap_slack: f64,
    #[serde(default)]
    pub size_law: SizeLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

fn default_jitter() -> f64 {
    DEFAULT_INTERVAL_JITTER_MS
}

fn default_cap_slack() -> f64 {
    DEFAULT_CAP_SLACK
}

impl TrafficProfile {
    /// Per-frame size ceiling: the target bitrate's per-frame budget times slack.
    pub fn cap_bytes(&self) -> f64 {
        self.target_bitrate_bps / (8.0 * self.frame_rate_fps) * self.cap_slack
    }

    pub fn nominal_interval_us(&self) -> f64 {
        1e6 / self.frame_rate_fps
    }

    /// Mean application-layer rate implied by the profile.
    pub fn implied_rate_bps(&self) -> f64 {
        self.mean_frame_bytes * 8.0 * self.frame_rate_fps
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        let bad = |msg: String| {
            Err(TrafficError::Profile {
                label: self.label.clone(),
                msg,
            })
        };
        for (name, v) in [
            ("target_bitrate_bps", self.target_bitrate_bps),
            ("frame_rate_fps", self.frame_rate_fps),
            ("mean_frame_bytes", self.mean_frame_bytes),
            ("threshold_bytes", self.threshold_bytes),
            ("cap_slack", self.cap_slack),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.frac_over_threshold) {
            return bad(format!(
                "frac_over_threshold must be in [0,1], got {}",
                self.frac_over_threshold
            ));
        }
        if !(self.warmup_s >= 0.0) {
            return bad(format!("warmup_s must be >= 0, got {}", self.warmup_s));
        }
        if !(self.interval_jitter_ms >= 0.0) {
            return bad(format!(
                "interval_jitter_ms must be >= 0, got {}",
                self.interval_jitter_ms
            ));
        }
        if self.implied_rate_bps() > self.target_bitrate_bps * ENCODER_SLACK {
            return bad(format!(
                "mean rate {:.0} bps exceeds target {:.0} bps by more than encoder slack",
                self.implied_rate_bps(),
                self.target_bitrate_bps
            ));
        }
        if self.mean_frame_bytes > self.cap_bytes() {
            return bad(format!(
                "mean_frame_bytes {} exceeds per-frame cap {:.0}",
                self.mean_frame_bytes,
                self.cap_bytes()
            ));
        }
        if let SizeLaw::Mixture { params } = &self.size_law {
            params.validate()?;
        }
        Ok(())
    }

    /// The mixture used to draw sizes, or `None` for constant-size profiles.
    pub fn mixture(&self) -> Result<Option<MixtureParams>, TrafficError> {
        match &self.size_law {
            SizeLaw::Constant => Ok(None),
            SizeLaw::Mixture { params } => Ok(Some(params.clone())),
            SizeLaw::Fitted => Ok(Some(fit_mixture(
                self.mean_frame_bytes,
                self.frac_over_threshold,
                self.threshold_bytes,
                self.cap_bytes(),
            )?)),
        }
    }
}

/// On-disk collection of profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub schema_version: u32,
    pub profiles: Vec<TrafficProfile>,
}

impl ProfileFile {
    pub fn load(path: &Path) -> Result<Self, TrafficError> {
        let text = std::fs::read_to_string(path).map_err(|e| TrafficError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let file: ProfileFile = serde_json::from_str(&text).map_err(|e| TrafficError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        if file.schema_version != PROFILE_SCHEMA_VERSION {
            return Err(TrafficError::Profile {
                label: path.display().to_string(),
                msg: format!("unsupported schema_version {}", file.schema_version),
            });
        }
        for p in &file.profiles {
            p.validate()?;
        }
        Ok(file)
    }

    pub fn get(&self, label: &str) -> Option<&TrafficProfile> {
        self.profiles.iter().find(|p| p.label == label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rr() -> TrafficProfile {
        TrafficProfile {
            label: "rr".into(),
            codec: Codec::H265,
            target_bitrate_bps: 30e6,
            frame_rate_fps: 72.0,
            mean_frame_bytes: 24800.0,
            frac_over_threshold: 0.47,
            threshold_bytes: 30000.0,
            warmup_s: 0.0,
            interval_jitter_ms: 1.0,
            cap_slack: 1.25,
            size_law: SizeLaw::Fitted,
            provenance: None,
        }
    }

    #[test]
    fn cap_from_target() {
        let mut p = rr();
        p.cap_slack = 1.0;
        assert!((p.cap_bytes() - 30e6 / 576.0).abs() < 1e-9);
    }

    #[test]
    fn overrate_profile_rejected() {
        let mut p = rr();
        p.mean_frame_bytes = 60000.0;
        assert!(p.validate().is_err());
        p = rr();
        p.frac_over_threshold = 1.5;
        assert!(p.validate().is_err());
        assert!(rr().validate().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v = serde_json::to_value(rr()).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(serde_json::from_value::<TrafficProfile>(v).is_err());
    }
}
