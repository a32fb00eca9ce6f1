use serde::{Deserialize, Serialize};

use super::fragment::{fragment_count, HEADER_BYTES};
use super::NetsimError;
use crate::calibration::default_fec_redundancy;

/// Shared-medium link between edge server and HMD.
///
/// Each MPDU occupies the medium for `wire_bytes * 8 / effective_rate_bps`
/// plus `per_mpdu_overhead_us` (contention, preamble, ACK). `base_delay_us`
/// covers the wired leg and buffering ahead of the wireless hop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModel {
    pub effective_rate_bps: f64,
    #[serde(default)]
    pub per_mpdu_overhead_us: f64,
    #[serde(default)]
    pub base_delay_us: f64,
    /// Protocol header bytes charged per MPDU for airtime.
    #[serde(default = "default_header_bytes")]
    pub header_bytes: u32,
    #[serde(default)]
    pub loss_prob: f64,
    #[serde(default = "default_fec_redundancy")]
    pub fec_redundancy_factor: f64,
}

fn default_header_bytes() -> u32 {
    HEADER_BYTES
}

impl Default for LinkModel {
    /// MPDU spacing near 40 µs for full frames.
    fn default() -> Self {
        Self {
            effective_rate_bps: 400e6,
            per_mpdu_overhead_us: 10.0,
            base_delay_us: 0.0,
            header_bytes: HEADER_BYTES,
            loss_prob: 0.0,
            fec_redundancy_factor: default_fec_redundancy(),
        }
    }
}

impl LinkModel {
    pub fn validate(&self) -> Result<(), NetsimError> {
        let bad = |m: String| Err(NetsimError::Config(format!("link: {m}")));
        if !(self.effective_rate_bps.is_finite() && self.effective_rate_bps > 0.0) {
            return bad(format!(
                "effective_rate_bps must be > 0, got {}",
                self.effective_rate_bps
            ));
        }
        if !(self.per_mpdu_overhead_us >= 0.0) {
            return bad(format!(
                "per_mpdu_overhead_us must be >= 0, got {}",
                self.per_mpdu_overhead_us
            ));
        }
        if !(self.base_delay_us >= 0.0) {
            return bad(format!(
                "base_delay_us must be >= 0, got {}",
                self.base_delay_us
            ));
        }
        if !(0.0..1.0).contains(&self.loss_prob) {
            return bad(format!(
                "loss_prob must be in [0,1), got {}",
                self.loss_prob
            ));
        }
        if !(self.fec_redundancy_factor >= 1.0) {
            return bad(format!(
                "fec_redundancy_factor must be >= 1, got {}",
                self.fec_redundancy_factor
            ));
        }
        Ok(())
    }

    /// Medium occupancy of one MPDU with `wire_bytes` on air, in µs.
    pub fn mpdu_airtime_us(&self, wire_bytes: u32) -> f64 {
        f64::from(wire_bytes) * 8.0 / self.effective_rate_bps * 1e6 + self.per_mpdu_overhead_us
    }
}

/// Expected time (ms) to deliver an APDU across the link: base delay, then
/// serialization of payload plus per-fragment headers inflated by FEC
/// redundancy, plus per-MPDU access overhead.
pub fn link_transport_delay(apdu_bytes: u32, link: &LinkModel) -> f64 {
    let n = fragment_count(apdu_bytes.max(1));
    let bits = f64::from(apdu_bytes + n * link.header_bytes) * 8.0 * link.fec_redundancy_factor;
    let us = link.base_delay_us
        + bits / link.effective_rate_bps * 1e6
        + f64::from(n) * link.per_mpdu_overhead_us;
    us / 1000.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare(rate: f64) -> LinkModel {
        LinkModel {
            effective_rate_bps: rate,
            per_mpdu_overhead_us: 0.0,
            base_delay_us: 0.0,
            header_bytes: 0,
            loss_prob: 0.0,
            fec_redundancy_factor: 1.0,
        }
    }

    #[test]
    fn one_ms_at_eight_mbps() {
        assert_eq!(link_transport_delay(1000, &bare(8e6)), 1.0);
    }

    #[test]
    fn rate_halves_serialization() {
        let a = link_transport_delay(50_000, &bare(10e6));
        let b = link_transport_delay(50_000, &bare(20e6));
        assert!((a - 2.0 * b).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let mut l = LinkModel::default();
        assert!(l.validate().is_ok());
        l.loss_prob = 1.0;
        assert!(l.validate().is_err());
        l = LinkModel {
            fec_redundancy_factor: 0.9,
            ..LinkModel::default()
        };
        assert!(l.validate().is_err());
        l = LinkModel {
            effective_rate_bps: 0.0,
            ..LinkModel::default()
        };
        assert!(l.validate().is_err());
    }

    #[test]
    fn default_mpdu_spacing() {
        let gap = LinkModel::default().mpdu_airtime_us(1442);
        assert!((30.0..=50.0).contains(&gap), "{gap}");
    }
}
