//! Client/server clock offset estimation from two-way probe exchanges.

use serde::{Deserialize, Serialize};

use super::NetsimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockModel {
    /// Server clock minus client clock.
    #[serde(default)]
    pub true_offset_us: i64,
    #[serde(default = "default_probe_period")]
    pub probe_period_s: f64,
    /// Extra one-way delay on the server-to-client leg.
    #[serde(default)]
    pub path_asymmetry_us: i64,
    /// One-way delay of the client-to-server leg.
    #[serde(default = "default_probe_one_way")]
    pub probe_one_way_us: u64,
    /// Server turnaround between receiving a probe and replying.
    #[serde(default = "default_turnaround")]
    pub server_turnaround_us: u64,
    #[serde(default = "default_probe_bytes")]
    pub probe_bytes: u32,
}

fn default_probe_period() -> f64 {
    1.0
}

fn default_probe_one_way() -> u64 {
    1000
}

fn default_turnaround() -> u64 {
    50
}

fn default_probe_bytes() -> u32 {
    32
}

impl Default for ClockModel {
    fn default() -> Self {
        Self {
            true_offset_us: 0,
            probe_period_s: default_probe_period(),
            path_asymmetry_us: 0,
            probe_one_way_us: default_probe_one_way(),
            server_turnaround_us: default_turnaround(),
            probe_bytes: default_probe_bytes(),
        }
    }
}

impl ClockModel {
    pub fn validate(&self) -> Result<(), NetsimError> {
        if !(self.probe_period_s.is_finite() && self.probe_period_s > 0.0) {
            return Err(NetsimError::Config(format!(
                "clock: probe_period_s must be > 0, got {}",
                self.probe_period_s
            )));
        }
        if (self.probe_one_way_us as i64) + self.path_asymmetry_us < 0 {
            return Err(NetsimError::Config(
                "clock: path asymmetry makes the return leg negative".into(),
            ));
        }
        if self.probe_bytes == 0 {
            return Err(NetsimError::Config(
                "clock: probe_bytes must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn downlink_one_way_us(&self) -> u64 {
        (self.probe_one_way_us as i64 + self.path_asymmetry_us) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetEstimate {
    pub offset_us: f64,
    pub rtt_us: i64,
}

/// Two-way exchange estimator.
///
/// `t1` client send and `t4` client receive are on the client clock; `t2`
/// server receive and `t3` server reply on the server clock. With one-way
/// delays `d_up` and `d_down` the estimate is off by `(d_up - d_down) / 2`.
pub fn estimate_offset(t1: i64, t2: i64, t3: i64, t4: i64) -> Result<OffsetEstimate, NetsimError> {
    if t4 < t1 {
        return Err(NetsimError::ProbeRejected(format!(
            "client clock went backwards: t1={t1} t4={t4}"
        )));
    }
    if t3 < t2 {
        return Err(NetsimError::ProbeRejected(format!(
            "server reply precedes receipt: t2={t2} t3={t3}"
        )));
    }
    let rtt_us = (t4 - t1) - (t3 - t2);
    if rtt_us < 0 {
        return Err(NetsimError::ProbeRejected(format!(
            "negative round trip {rtt_us} us"
        )));
    }
    let offset_us = ((t2 - t1) + (t3 - t4)) as f64 / 2.0;
    Ok(OffsetEstimate { offset_us, rtt_us })
}
