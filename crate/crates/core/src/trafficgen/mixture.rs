//! Two-component truncated lognormal mixture for video frame sizes.
//!
//! Measured VBR streams are summarised by a mean frame size and the share of
//! frames above a size threshold. When the mean sits below the threshold while
//! roughly half the frames exceed it, no unimodal right-skewed law fits, so the
//! size law is a mixture of a "small" component (loading and low-motion
//! scenes) and a "large" component concentrated between threshold and cap.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::LogParams;

pub const DEFAULT_SIGMA_SMALL: f64 = 0.45;
pub const DEFAULT_SIGMA_LARGE: f64 = 0.20;

const MEAN_REL_TOL: f64 = 0.01;
const TAIL_ABS_TOL: f64 = 0.01;
const GRID_POINTS: usize = 400;
const BISECTION_STEPS: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("invalid fit input: {0}")]
    Input(String),
    #[error("no mixture satisfies mean={mean} bytes, {frac} above {threshold} bytes, cap={cap} bytes: {reason}")]
    Infeasible {
        mean: f64,
        frac: f64,
        threshold: f64,
        cap: f64,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureParams {
    pub weight_small: f64,
    pub small: LogParams,
    pub large: LogParams,
    pub cap_bytes: f64,
}

impl MixtureParams {
    pub fn validate(&self) -> Result<(), FitError> {
        if !(0.0..=1.0).contains(&self.weight_small) {
            return Err(FitError::Input(format!(
                "weight_small must be in [0,1], got {}",
                self.weight_small
            )));
        }
        if !(self.small.sigma > 0.0 && self.large.sigma > 0.0) {
            return Err(FitError::Input("component sigmas must be > 0".into()));
        }
        if !(self.cap_bytes > 0.0) {
            return Err(FitError::Input("cap_bytes must be > 0".into()));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.weight_small * self.small.truncated_mean(self.cap_bytes)
            + (1.0 - self.weight_small) * self.large.truncated_mean(self.cap_bytes)
    }

    /// Share of the mixture strictly above `threshold`.
    pub fn tail_mass(&self, threshold: f64) -> f64 {
        if threshold >= self.cap_bytes {
            return 0.0;
        }
        self.weight_small * self.small.truncated_tail(threshold, self.cap_bytes)
            + (1.0 - self.weight_small) * self.large.truncated_tail(threshold, self.cap_bytes)
    }

    /// One frame size in bytes, in `[1, floor(cap)]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let component = if rng.random::<f64>() < self.weight_small {
            &self.small
        } else {
            &self.large
        };
        let x = component.sample_truncated(rng, self.cap_bytes);
        (x.round().min(self.cap_bytes.floor())).max(1.0) as u32
    }
}

/// Component shapes held fixed while the weight and locations are solved.
#[derive(Debug, Clone, Copy)]
pub struct FitShape {
    pub sigma_small: f64,
    pub sigma_large: f64,
}

impl Default for FitShape {
    fn default() -> Self {
        Self {
            sigma_small: DEFAULT_SIGMA_SMALL,
            sigma_large: DEFAULT_SIGMA_LARGE,
        }
    }
}

pub fn fit_mixture(
    mean_bytes: f64,
    frac_over_threshold: f64,
    threshold_bytes: f64,
    cap_bytes: f64,
) -> Result<MixtureParams, FitError> {
    fit_mixture_with(
        mean_bytes,
        frac_over_threshold,
        threshold_bytes,
        cap_bytes,
        FitShape::default(),
    )
}

/// Solve for a mixture whose analytic mean equals `mean_bytes` and whose mass
/// above `threshold_bytes` equals `frac_over_threshold`.
///
/// The large component's median is searched on a log grid between threshold
/// and cap, nearest the geometric midpoint first. For each candidate the
/// weight follows from the tail constraint and the small component's location
/// is found by bisection on the mean constraint.
pub fn fit_mixture_with(
    mean_bytes: f64,
    frac_over_threshold: f64,
    threshold_bytes: f64,
    cap_bytes: f64,
    shape: FitShape,
) -> Result<MixtureParams, FitError> {
    let (mean, frac, thr, cap) = (mean_bytes, frac_over_threshold, threshold_bytes, cap_bytes);
    if !(mean > 0.0 && mean < cap) {
        return Err(FitError::Input(format!(
            "need 0 < mean < cap, got mean={mean} cap={cap}"
        )));
    }
    if !(frac > 0.0 && frac < 1.0) {
        return Err(FitError::Input(format!(
            "frac must be in (0,1), got {frac}"
        )));
    }
    if !(thr > 0.0 && thr < cap) {
        return Err(FitError::Input(format!(
            "need 0 < threshold < cap, got {thr}"
        )));
    }
    if !(shape.sigma_small > 0.0 && shape.sigma_large > 0.0) {
        return Err(FitError::Input("sigmas must be > 0".into()));
    }
    let infeasible = |reason: &str| FitError::Infeasible {
        mean,
        frac,
        threshold: thr,
        cap,
        reason: reason.to_string(),
    };

    let lo = thr.ln();
    let hi = cap.ln() + 2.0 * shape.sigma_large;
    let mid = 0.5 * (thr.ln() + cap.ln());
    let mut grid: Vec<f64> = (0..=GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / GRID_POINTS as f64)
        .collect();
    grid.sort_by(|a, b| {
        (a - mid)
            .abs()
            .total_cmp(&(b - mid).abs())
            .then(a.total_cmp(b))
    });

    let mut best_reason = "large component never exceeds the requested tail mass";
    for mu_large in grid {
        let large = LogParams {
            mu: mu_large,
            sigma: shape.sigma_large,
        };
        let tail_large = large.truncated_tail(thr, cap);
        if tail_large <= frac {
            continue;
        }
        let mean_large = large.truncated_mean(cap);
        match solve_small(
            mean,
            frac,
            thr,
            cap,
            shape.sigma_small,
            tail_large,
            mean_large,
        ) {
            Some((weight_small, small)) => {
                let params = MixtureParams {
                    weight_small,
                    small,
                    large,
                    cap_bytes: cap,
                };
                if ((params.mean() - mean) / mean).abs() <= MEAN_REL_TOL
                    && (params.tail_mass(thr) - frac).abs() <= TAIL_ABS_TOL
                {
                    return Ok(params);
                }
            }
            None => best_reason = "mean not bracketed for any large-component location",
        }
    }
    Err(infeasible(best_reason))
}

fn solve_small(
    mean: f64,
    frac: f64,
    thr: f64,
    cap: f64,
    sigma_small: f64,
    tail_large: f64,
    mean_large: f64,
) -> Option<(f64, LogParams)> {
    let small = |mu: f64| LogParams {
        mu,
        sigma: sigma_small,
    };
    let tail_small = |mu: f64| small(mu).truncated_tail(thr, cap);

    // Upper end: the small component alone carries the requested tail mass,
    // so the weight reaches 1.
    let mut lo = 0.0;
    let mut hi = cap.ln();
    if tail_small(lo) >= frac {
        return None;
    }
    let mu_max = if tail_small(hi) <= frac {
        hi
    } else {
        for _ in 0..BISECTION_STEPS {
            let m = 0.5 * (lo + hi);
            if tail_small(m) < frac {
                lo = m;
            } else {
                hi = m;
            }
        }
        lo
    };

    let weight = |mu: f64| (tail_large - frac) / (tail_large - tail_small(mu));
    let residual = |mu: f64| {
        let w = weight(mu);
        w * small(mu).truncated_mean(cap) + (1.0 - w) * mean_large - mean
    };
    let (mut a, mut b) = (0.0f64, mu_max);
    let (fa, fb) = (residual(a), residual(b));
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..BISECTION_STEPS {
        let m = 0.5 * (a + b);
        if residual(m).signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    let mu = 0.5 * (a + b);
    let w = weight(mu);
    (0.0..=1.0).contains(&w).then_some((w, small(mu)))
}
