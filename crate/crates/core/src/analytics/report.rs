use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::stats::{interval_cdf, summary, threshold_fraction, Summary};
use super::AnalyticsError;
use crate::netsim::{DelayRecord, Stage};
use crate::trace::{Direction, Layer, TraceKind, TraceRecord};

/// Time range and settings for a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisWindow {
    pub from_us: Option<u64>,
    /// Exclusive end. Defaults to the end of the tumbling window holding the
    /// last application record.
    pub to_us: Option<u64>,
    pub window_s: f64,
    pub thresholds_bytes: Vec<u32>,
}

impl Default for AnalysisWindow {
    fn default() -> Self {
        Self {
            from_us: None,
            to_us: None,
            window_s: 1.0,
            thresholds_bytes: vec![30_000],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerRates {
    pub app_rate_bps: f64,
    pub mac_rate_bps: f64,
    /// `mac_rate_bps / app_rate_bps`.
    pub overhead_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    /// Keyed by stage key, plus `total`.
    pub stages: BTreeMap<String, Summary>,
    pub total: Summary,
    pub frames_displayed: u64,
    pub frames_lost: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub from_s: f64,
    pub to_s: f64,
    pub video_frames: u64,
    pub frame_size_bytes: Option<Summary>,
    pub video_interval_ms: Option<Summary>,
    /// `dl`, `ul` and `video` (downlink video only).
    pub rates: BTreeMap<String, LayerRates>,
    pub threshold_fractions: BTreeMap<u32, f64>,
    pub delays: Option<DelayStats>,
}

type FrameKey = (Direction, TraceKind, u64);

fn key(r: &TraceRecord) -> FrameKey {
    (r.direction, r.kind, r.frame_id)
}

/// Round to `dp` decimals via the decimal string, so the result prints
/// without binary noise.
pub fn round_dp(x: f64, dp: usize) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.dp$}").parse().expect("formatted float parses")
}

fn round_summary(s: &Summary, dp: usize) -> Summary {
    Summary {
        mean: round_dp(s.mean, dp),
        p95: round_dp(s.p95, dp),
        min: round_dp(s.min, dp),
        max: round_dp(s.max, dp),
        count: s.count,
    }
}

type Selector = fn(&TraceRecord) -> bool;

impl StatsSummary {
    /// Report over `[from, to)`. MAC bytes are attributed to the application
    /// PDU they carry, so a frame counts wholly inside or outside the range.
    pub fn compute(
        trace: &[TraceRecord],
        delays: Option<(&[DelayRecord], u64)>,
        window: &AnalysisWindow,
    ) -> Result<Self, AnalyticsError> {
        let w_us = (window.window_s * 1e6).round();
        if !(window.window_s.is_finite() && w_us >= 1.0) {
            return Err(AnalyticsError::Input(format!(
                "window must be > 0, got {}",
                window.window_s
            )));
        }
        let w_us = w_us as u64;
        let from = window.from_us.unwrap_or(0);
        let last_app = trace
            .iter()
            .filter(|r| r.layer == Layer::App)
            .map(|r| r.t_us)
            .max();
        let to = match (window.to_us, last_app) {
            (Some(t), _) => t,
            (None, Some(last)) if last >= from => from + ((last - from) / w_us + 1) * w_us,
            (None, _) => from,
        };
        if to < from {
            return Err(AnalyticsError::Input(format!(
                "range end {to} us precedes start {from} us"
            )));
        }
        let span_s = (to - from) as f64 / 1e6;
        let in_range = |t: u64| t >= from && t < to;

        let app: Vec<&TraceRecord> = trace
            .iter()
            .filter(|r| r.layer == Layer::App && in_range(r.t_us))
            .collect();
        let keys: HashSet<FrameKey> = app.iter().map(|r| key(r)).collect();
        let mac: Vec<&TraceRecord> = trace
            .iter()
            .filter(|r| r.layer == Layer::Mac && keys.contains(&key(r)))
            .collect();

        let mut rates = BTreeMap::new();
        let groups: [(&str, Selector); 3] = [
            ("dl", |r| r.direction == Direction::Dl),
            ("ul", |r| r.direction == Direction::Ul),
            ("video", |r| {
                r.direction == Direction::Dl && r.kind == TraceKind::Video
            }),
        ];
        for (name, sel) in groups {
            let app_bits: u64 = app.iter().filter(|r| sel(r)).map(|r| r.bits()).sum();
            let mac_bits: u64 = mac.iter().filter(|r| sel(r)).map(|r| r.bits()).sum();
            if app_bits == 0 && mac_bits == 0 {
                continue;
            }
            let (a, m) = if span_s > 0.0 {
                (app_bits as f64 / span_s, mac_bits as f64 / span_s)
            } else {
                (0.0, 0.0)
            };
            let ratio = if app_bits > 0 {
                mac_bits as f64 / app_bits as f64
            } else {
                f64::NAN
            };
            rates.insert(
                name.to_string(),
                LayerRates {
                    app_rate_bps: a,
                    mac_rate_bps: m,
                    overhead_ratio: ratio,
                },
            );
        }

        let video: Vec<&TraceRecord> = app
            .iter()
            .copied()
            .filter(|r| r.kind == TraceKind::Video && r.direction == Direction::Dl)
            .collect();
        let sizes: Vec<u32> = video.iter().map(|r| r.size_bytes).collect();
        let frame_size_bytes =
            summary(&sizes.iter().map(|&s| f64::from(s)).collect::<Vec<_>>()).ok();
        let times: Vec<u64> = video.iter().map(|r| r.t_us).collect();
        let video_interval_ms = interval_cdf(&times)
            .ok()
            .map(|c| summary(&c.gaps_ms))
            .transpose()?;
        let mut threshold_fractions = BTreeMap::new();
        if !sizes.is_empty() {
            for &t in &window.thresholds_bytes {
                threshold_fractions.insert(t, threshold_fraction(&sizes, t)?);
            }
        }

        let delays = match delays {
            Some((records, lost)) => {
                let sel: Vec<&DelayRecord> = records
                    .iter()
                    .filter(|r| in_range(r.render_start_us))
                    .collect();
                if sel.is_empty() {
                    None
                } else {
                    let mut stages = BTreeMap::new();
                    for stage in Stage::ALL {
                        let v: Vec<f64> = sel.iter().map(|r| r.stage_ms(stage)).collect();
                        stages.insert(stage.key().to_string(), summary(&v)?);
                    }
                    let total = summary(&sel.iter().map(|r| r.total_ms()).collect::<Vec<_>>())?;
                    Some(DelayStats {
                        stages,
                        total,
                        frames_displayed: sel.len() as u64,
                        frames_lost: lost,
                    })
                }
            }
            None => None,
        };

        Ok(Self {
            from_s: from as f64 / 1e6,
            to_s: to as f64 / 1e6,
            video_frames: video.len() as u64,
            frame_size_bytes,
            video_interval_ms,
            rates,
            threshold_fractions,
            delays,
        })
    }

    /// Copy at reporting precision: rates to 0.01 Mbps, delays and
    /// intervals to 0.001 ms.
    pub fn rounded(&self) -> Self {
        let mut s = self.clone();
        for r in s.rates.values_mut() {
            r.app_rate_bps = round_dp(r.app_rate_bps / 1e4, 0) * 1e4;
            r.mac_rate_bps = round_dp(r.mac_rate_bps / 1e4, 0) * 1e4;
            r.overhead_ratio = round_dp(r.overhead_ratio, 4);
        }
        s.frame_size_bytes = s.frame_size_bytes.map(|x| round_summary(&x, 2));
        s.video_interval_ms = s.video_interval_ms.map(|x| round_summary(&x, 3));
        for f in s.threshold_fractions.values_mut() {
            *f = round_dp(*f, 4);
        }
        if let Some(d) = &mut s.delays {
            for v in d.stages.values_mut() {
                *v = round_summary(v, 3);
            }
            d.total = round_summary(&d.total, 3);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rounded()).expect("summary serializes")
    }

    pub fn video_rates(&self) -> Option<&LayerRates> {
        self.rates.get("video")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t_us: u64, layer: Layer, size: u32, frame_id: u64, frag: Option<u32>) -> TraceRecord {
        TraceRecord {
            t_us,
            direction: Direction::Dl,
            layer,
            kind: TraceKind::Video,
            size_bytes: size,
            frame_id,
            fragment_index: frag,
        }
    }

    #[test]
    fn rates_and_ratio() {
        let trace = vec![
            rec(0, Layer::App, 1400, 0, None),
            rec(10, Layer::Mac, 1442, 0, Some(0)),
            rec(500_000, Layer::App, 1400, 1, None),
            rec(500_010, Layer::Mac, 1442, 1, Some(0)),
        ];
        let s = StatsSummary::compute(&trace, None, &AnalysisWindow::default()).unwrap();
        assert_eq!(s.to_s, 1.0);
        let v = s.video_rates().unwrap();
        assert_eq!(v.app_rate_bps, 2.0 * 1400.0 * 8.0);
        assert!((v.overhead_ratio - 1442.0 / 1400.0).abs() < 1e-12);
        assert_eq!(s.threshold_fractions[&30_000], 0.0);
        assert_eq!(s.video_interval_ms.unwrap().mean, 500.0);
    }

    #[test]
    fn empty_trace_gives_empty_report() {
        let s = StatsSummary::compute(&[], None, &AnalysisWindow::default()).unwrap();
        assert_eq!(s.video_frames, 0);
        assert!(s.rates.is_empty());
        assert!(s.frame_size_bytes.is_none());
    }
}
