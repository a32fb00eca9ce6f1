use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::trace::{Layer, TraceKind, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub p95: f64,
    pub min: f64,
    pub max: f64,
    pub count: u64,
}

/// 1-based nearest rank of the 95th percentile: `ceil(0.95 n)`.
fn p95_rank(n: usize) -> usize {
    (95 * n).div_ceil(100).max(1)
}

/// Mean, nearest-rank 95th percentile, extremes and count.
pub fn summary(values: &[f64]) -> Result<Summary, AnalyticsError> {
    if values.is_empty() {
        return Err(AnalyticsError::Input("summary of an empty sample".into()));
    }
    if let Some(v) = values.iter().find(|v| v.is_nan()) {
        return Err(AnalyticsError::Input(format!("sample contains {v}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(Summary {
        mean: sorted.iter().sum::<f64>() / n as f64,
        p95: sorted[p95_rank(n) - 1],
        min: sorted[0],
        max: sorted[n - 1],
        count: n as u64,
    })
}

/// Empirical distribution of gaps between consecutive events, in ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCdf {
    pub gaps_ms: Vec<f64>,
}

impl IntervalCdf {
    pub fn len(&self) -> usize {
        self.gaps_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps_ms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.gaps_ms.iter().sum::<f64>() / self.gaps_ms.len() as f64
    }

    /// Fraction of gaps `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.gaps_ms.partition_point(|&g| g <= x) as f64 / self.gaps_ms.len() as f64
    }

    /// Fraction of gaps in the closed range `[lo, hi]`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        let a = self.gaps_ms.partition_point(|&g| g < lo);
        let b = self.gaps_ms.partition_point(|&g| g <= hi);
        b.saturating_sub(a) as f64 / self.gaps_ms.len() as f64
    }

    /// `(gap, cumulative fraction)` at each distinct gap.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.gaps_ms.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &g) in self.gaps_ms.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == g => last.1 = (i + 1) as f64 / n,
                _ => out.push((g, (i + 1) as f64 / n)),
            }
        }
        out
    }
}

/// CDF of gaps between successive timestamps (µs, non-decreasing).
pub fn interval_cdf(times_us: &[u64]) -> Result<IntervalCdf, AnalyticsError> {
    if times_us.len() < 2 {
        return Err(AnalyticsError::Input(format!(
            "need at least 2 events for intervals, got {}",
            times_us.len()
        )));
    }
    let mut gaps_ms: Vec<f64> = times_us
        .windows(2)
        .map(|w| w[1].saturating_sub(w[0]) as f64 / 1000.0)
        .collect();
    gaps_ms.sort_by(f64::total_cmp);
    Ok(IntervalCdf { gaps_ms })
}

/// Inter-generation gaps of `kind` records on `layer`.
pub fn interval_histogram(
    trace: &[TraceRecord],
    layer: Layer,
    kind: TraceKind,
) -> Result<IntervalCdf, AnalyticsError> {
    let times: Vec<u64> = trace
        .iter()
        .filter(|r| r.layer == layer && r.kind == kind)
        .map(|r| r.t_us)
        .collect();
    interval_cdf(&times)
}

/// Gaps between consecutive MPDUs of the same parent frame.
pub fn mpdu_gaps(trace: &[TraceRecord], kind: TraceKind) -> Result<IntervalCdf, AnalyticsError> {
    let mac: Vec<&TraceRecord> = trace
        .iter()
        .filter(|r| r.layer == Layer::Mac && r.kind == kind)
        .collect();
    let mut gaps_ms: Vec<f64> = mac
        .windows(2)
        .filter(|w| w[0].frame_id == w[1].frame_id && w[0].direction == w[1].direction)
        .map(|w| (w[1].t_us - w[0].t_us) as f64 / 1000.0)
        .collect();
    if gaps_ms.is_empty() {
        return Err(AnalyticsError::Input(
            "no multi-fragment bursts in trace".into(),
        ));
    }
    gaps_ms.sort_by(f64::total_cmp);
    Ok(IntervalCdf { gaps_ms })
}

/// Fraction of sizes strictly above `threshold_bytes`.
pub fn threshold_fraction(sizes: &[u32], threshold_bytes: u32) -> Result<f64, AnalyticsError> {
    if sizes.is_empty() {
        return Err(AnalyticsError::Input(
            "threshold fraction of an empty sample".into(),
        ));
    }
    let over = sizes.iter().filter(|&&s| s > threshold_bytes).count();
    Ok(over as f64 / sizes.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = summary(&v).unwrap();
        assert_eq!(s.p95, 95.0);
        assert_eq!(s.mean, 50.5);
        assert_eq!((s.min, s.max, s.count), (1.0, 100.0, 100));
        let one = summary(&[3.5]).unwrap();
        assert_eq!((one.mean, one.p95), (3.5, 3.5));
        assert!(summary(&[]).is_err());
    }

    #[test]
    fn paced_intervals() {
        let times: Vec<u64> = (0..100).map(|k| k * 13_889).collect();
        let c = interval_cdf(&times).unwrap();
        assert_eq!(c.mass_in(12.0, 15.0), 1.0);
        assert!((c.mean() - 13.889).abs() < 1e-9);
        assert_eq!(c.points(), vec![(13.889, 1.0)]);
        assert!(interval_cdf(&[5]).is_err());
    }

    #[test]
    fn threshold() {
        assert_eq!(threshold_fraction(&[10, 20, 30], 30).unwrap(), 0.0);
        assert_eq!(threshold_fraction(&[10, 31, 40, 5], 30).unwrap(), 0.5);
        assert!(threshold_fraction(&[], 1).is_err());
    }
}
