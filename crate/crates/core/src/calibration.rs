//! Measured reference values the models are calibrated against.
//!
//! Delay rows are average/95th-percentile pairs in milliseconds for a
//! Quest HMD streaming from an edge server over 802.11ac; rates are mean
//! application- and MAC-layer downlink rates in Mbps over 90 s sessions.

use crate::netsim::fragment::{FULL_MPDU_WIRE, MPDU_PAYLOAD};

/// Mean and 95th percentile, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanP95 {
    pub mean: f64,
    pub p95: f64,
}

const fn mp(mean: f64, p95: f64) -> MeanP95 {
    MeanP95 { mean, p95 }
}

/// Per-stage delays of one measured configuration, in pipeline order:
/// TI uplink + render, encode, video transport, decode, overlay render,
/// per-eye render.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredDelays {
    pub label: &'static str,
    pub stages: [MeanP95; 6],
    pub total: MeanP95,
}

pub const MEASURED_DELAYS: [MeasuredDelays; 6] = [
    MeasuredDelays {
        label: "H.265 - 15 Mbps - RR",
        stages: [
            mp(18.57, 23.22),
            mp(12.23, 13.78),
            mp(7.07, 11.90),
            mp(12.40, 18.00),
            mp(14.75, 24.20),
            mp(4.82, 5.60),
        ],
        total: mp(69.85, 80.80),
    },
    MeasuredDelays {
        label: "H.264 - 30 Mbps - RR",
        stages: [
            mp(23.42, 28.35),
            mp(41.05, 53.57),
            mp(9.99, 13.60),
            mp(16.12, 21.50),
            mp(1.22, 1.50),
            mp(0.67, 3.20),
        ],
        total: mp(92.47, 107.90),
    },
    MeasuredDelays {
        label: "H.265 - 30 Mbps - RR",
        stages: [
            mp(18.82, 22.93),
            mp(12.01, 13.13),
            mp(6.37, 10.70),
            mp(13.55, 19.90),
            mp(15.17, 24.20),
            mp(4.73, 5.50),
        ],
        total: mp(70.65, 80.40),
    },
    MeasuredDelays {
        label: "H.265 - 60 Mbps - RR",
        stages: [
            mp(18.17, 22.61),
            mp(11.96, 13.04),
            mp(6.26, 10.60),
            mp(13.38, 19.70),
            mp(14.59, 23.90),
            mp(4.76, 5.60),
        ],
        total: mp(69.11, 80.30),
    },
    MeasuredDelays {
        label: "H.265 - 30 Mbps - TL",
        stages: [
            mp(18.98, 23.38),
            mp(12.20, 14.56),
            mp(7.75, 11.70),
            mp(12.20, 17.58),
            mp(16.72, 24.98),
            mp(4.83, 5.60),
        ],
        total: mp(72.67, 81.20),
    },
    MeasuredDelays {
        label: "H.265 - 30 Mbps - WR",
        stages: [
            mp(19.55, 23.72),
            mp(11.88, 12.78),
            mp(8.98, 13.60),
            mp(11.88, 16.70),
            mp(14.02, 24.10),
            mp(4.76, 5.60),
        ],
        total: mp(71.07, 81.80),
    },
];

pub fn measured_delays(label: &str) -> Option<&'static MeasuredDelays> {
    MEASURED_DELAYS.iter().find(|r| r.label == label)
}

/// Mean downlink rates (Mbps) for one game with H.265 at a 30 Mbps target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerRates {
    pub game: &'static str,
    pub app_mbps: f64,
    pub mac_mbps: f64,
}

impl LayerRates {
    pub fn ratio(&self) -> f64 {
        self.mac_mbps / self.app_mbps
    }
}

pub const LAYER_RATES: [LayerRates; 3] = [
    LayerRates {
        game: "Rec Room",
        app_mbps: 14.13,
        mac_mbps: 17.20,
    },
    LayerRates {
        game: "The Lab",
        app_mbps: 17.61,
        mac_mbps: 21.51,
    },
    LayerRates {
        game: "War Robots",
        app_mbps: 21.42,
        mac_mbps: 26.19,
    },
];

/// Cloud traffic for Rec Room, active from 40 s.
pub const CLOUD_DL_BPS: f64 = 0.32e6;
pub const CLOUD_UL_BPS: f64 = 0.03e6;
pub const CLOUD_START_S: f64 = 40.0;

/// Byte inflation of a full MPDU over its payload (1442 / 1400).
pub fn header_inflation() -> f64 {
    f64::from(FULL_MPDU_WIRE) / f64::from(MPDU_PAYLOAD)
}

pub fn mean_layer_ratio() -> f64 {
    LAYER_RATES.iter().map(LayerRates::ratio).sum::<f64>() / LAYER_RATES.len() as f64
}

/// Redundancy factor that, on top of header inflation, reproduces the mean
/// MAC/application rate ratio (about 1.185). Attributed to FEC and link-layer
/// retransmissions.
pub fn default_fec_redundancy() -> f64 {
    mean_layer_ratio() / header_inflation()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fec_default_value() {
        let f = default_fec_redundancy();
        assert!((f - 1.185).abs() < 0.001, "{f}");
    }

    #[test]
    fn ratios_are_near_constant() {
        for r in LAYER_RATES {
            assert!((1.21..1.23).contains(&r.ratio()), "{}", r.ratio());
        }
    }
}
