use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::trace::{Layer, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSample {
    /// Window start, seconds from trace origin.
    pub t_s: f64,
    pub bits: u64,
    pub bits_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    pub window_s: f64,
    pub samples: Vec<RateSample>,
}

impl RateSeries {
    pub fn total_bits(&self) -> u64 {
        self.samples.iter().map(|s| s.bits).sum()
    }

    pub fn mean_bps(&self) -> Option<f64> {
        if self.samples.is_empty() {
            return None;
        }
        Some(self.total_bits() as f64 / (self.samples.len() as f64 * self.window_s))
    }
}

fn window_us(window_s: f64) -> Result<u64, AnalyticsError> {
    let w = (window_s * 1e6).round();
    if !(window_s.is_finite() && w >= 1.0) {
        return Err(AnalyticsError::Input(format!(
            "window must be >= 1 us, got {window_s} s"
        )));
    }
    Ok(w as u64)
}

/// Tumbling-window rate of all records on `layer`.
pub fn windowed_rate(
    trace: &[TraceRecord],
    layer: Layer,
    window_s: f64,
) -> Result<RateSeries, AnalyticsError> {
    windowed_rate_by(trace, window_s, |r| r.layer == layer)
}

/// Tumbling windows `[k·w, (k+1)·w)` from time zero up to the window holding
/// the last selected record.
pub fn windowed_rate_by(
    trace: &[TraceRecord],
    window_s: f64,
    mut keep: impl FnMut(&TraceRecord) -> bool,
) -> Result<RateSeries, AnalyticsError> {
    let w = window_us(window_s)?;
    let mut bins: Vec<u64> = Vec::new();
    for r in trace.iter().filter(|r| keep(r)) {
        let k = (r.t_us / w) as usize;
        if bins.len() <= k {
            bins.resize(k + 1, 0);
        }
        bins[k] += r.bits();
    }
    let samples = bins
        .into_iter()
        .enumerate()
        .map(|(k, bits)| RateSample {
            t_s: (k as u64 * w) as f64 / 1e6,
            bits,
            bits_per_s: bits as f64 / window_s,
        })
        .collect();
    Ok(RateSeries { window_s, samples })
}

/// Overlapping windows of length `window_s` starting every `step_s`.
pub fn sliding_rate(
    trace: &[TraceRecord],
    layer: Layer,
    window_s: f64,
    step_s: f64,
) -> Result<RateSeries, AnalyticsError> {
    let w = window_us(window_s)?;
    let step = window_us(step_s)?;
    let sel: Vec<&TraceRecord> = trace.iter().filter(|r| r.layer == layer).collect();
    let Some(last) = sel.last().map(|r| r.t_us) else {
        return Ok(RateSeries {
            window_s,
            samples: Vec::new(),
        });
    };
    let mut samples = Vec::new();
    let (mut lo, mut hi, mut bits) = (0usize, 0usize, 0u64);
    let mut start = 0u64;
    while start <= last {
        while hi < sel.len() && sel[hi].t_us < start + w {
            bits += sel[hi].bits();
            hi += 1;
        }
        while lo < hi && sel[lo].t_us < start {
            bits -= sel[lo].bits();
            lo += 1;
        }
        samples.push(RateSample {
            t_s: start as f64 / 1e6,
            bits,
            bits_per_s: bits as f64 / window_s,
        });
        start += step;
    }
    Ok(RateSeries { window_s, samples })
}
