//! Per-stage delay laws of the frame pipeline.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::NetsimError;
use crate::dist::{LogParams, Z95};

/// Bisection steps on the shape parameter; far beyond f64 resolution.
const FIT_STEPS: usize = 200;
const FIT_RESIDUAL: f64 = 1e-9;
const MIN_SIGMA: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Tracking uplink plus edge render; the two are coupled and never split.
    TiUlRender,
    Encode,
    ViTransport,
    Decode,
    RenderOverlay,
    RenderEyes,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::TiUlRender,
        Stage::Encode,
        Stage::ViTransport,
        Stage::Decode,
        Stage::RenderOverlay,
        Stage::RenderEyes,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn key(self) -> &'static str {
        match self {
            Stage::TiUlRender => "ti_ul_render",
            Stage::Encode => "encode",
            Stage::ViTransport => "vi_transport",
            Stage::Decode => "decode",
            Stage::RenderOverlay => "render_overlay",
            Stage::RenderEyes => "render_eyes",
        }
    }

    /// Column heading used in delay tables.
    pub fn heading(self) -> &'static str {
        match self {
            Stage::TiUlRender => "TI (UL) + Render",
            Stage::Encode => "Encode",
            Stage::ViTransport => "VI Transport",
            Stage::Decode => "Decode",
            Stage::RenderOverlay => "Render1 (Overlay)",
            Stage::RenderEyes => "Render2 (Eyes)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum StageLaw {
    /// Lognormal matched to a mean and 95th percentile.
    Lognormal {
        mean_ms: f64,
        p95_ms: f64,
    },
    Constant {
        ms: f64,
    },
    /// Delay computed from the link model (transport stage only).
    LinkComputed,
}

/// One model per pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageModels {
    pub ti_ul_render: StageLaw,
    pub encode: StageLaw,
    pub vi_transport: StageLaw,
    pub decode: StageLaw,
    pub render_overlay: StageLaw,
    pub render_eyes: StageLaw,
}

impl StageModels {
    pub fn get(&self, stage: Stage) -> &StageLaw {
        match stage {
            Stage::TiUlRender => &self.ti_ul_render,
            Stage::Encode => &self.encode,
            Stage::ViTransport => &self.vi_transport,
            Stage::Decode => &self.decode,
            Stage::RenderOverlay => &self.render_overlay,
            Stage::RenderEyes => &self.render_eyes,
        }
    }

    pub fn from_fn(mut f: impl FnMut(Stage) -> StageLaw) -> Self {
        Self {
            ti_ul_render: f(Stage::TiUlRender),
            encode: f(Stage::Encode),
            vi_transport: f(Stage::ViTransport),
            decode: f(Stage::Decode),
            render_overlay: f(Stage::RenderOverlay),
            render_eyes: f(Stage::RenderEyes),
        }
    }

    pub fn validate(&self) -> Result<(), NetsimError> {
        for stage in Stage::ALL {
            validate_law(stage, self.get(stage))?;
        }
        Ok(())
    }
}

fn validate_law(stage: Stage, law: &StageLaw) -> Result<(), NetsimError> {
    let bad = |m: String| Err(NetsimError::Config(format!("stage {}: {m}", stage.key())));
    match *law {
        StageLaw::Lognormal { mean_ms, p95_ms } => {
            if !(mean_ms.is_finite() && mean_ms > 0.0) {
                return bad(format!("mean_ms must be > 0, got {mean_ms}"));
            }
            if !(p95_ms >= mean_ms) {
                return bad(format!("p95_ms {p95_ms} must be >= mean_ms {mean_ms}"));
            }
        }
        StageLaw::Constant { ms } => {
            if !(ms.is_finite() && ms >= 0.0) {
                return bad(format!("constant ms must be >= 0, got {ms}"));
            }
        }
        StageLaw::LinkComputed => {
            if stage != Stage::ViTransport {
                return bad("link_computed is only valid for vi_transport".into());
            }
        }
    }
    Ok(())
}

/// Outcome of matching a lognormal to (mean, p95).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LognormalFit {
    Lognormal(LogParams),
    /// p95 equals the mean: no spread to fit.
    Constant(f64),
}

/// Solve `exp(mu + sigma²/2) = mean` and `exp(mu + z95·sigma) = p95`.
///
/// Eliminating `mu` leaves `z95·sigma - sigma²/2 = ln(p95/mean)`, increasing
/// on `[0, z95]`, which is bisected. The other root (sigma > z95) is not
/// used. Ratios above `exp(z95²/2)` (about 3.87) have no lognormal solution.
pub fn fit_lognormal(mean_ms: f64, p95_ms: f64) -> Result<LognormalFit, NetsimError> {
    if !(mean_ms.is_finite() && mean_ms > 0.0) {
        return Err(NetsimError::Input(format!(
            "mean must be > 0, got {mean_ms}"
        )));
    }
    if !(p95_ms >= mean_ms) {
        return Err(NetsimError::Input(format!(
            "p95 {p95_ms} is below mean {mean_ms}"
        )));
    }
    let target = (p95_ms / mean_ms).ln();
    let gap = |s: f64| Z95 * s - 0.5 * s * s - target;
    if gap(Z95) < 0.0 {
        return Err(NetsimError::NoLognormal { mean_ms, p95_ms });
    }
    let (mut lo, mut hi) = (0.0f64, Z95);
    for _ in 0..FIT_STEPS {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sigma = 0.5 * (lo + hi);
    if sigma < MIN_SIGMA {
        return Ok(LognormalFit::Constant(mean_ms));
    }
    let params = LogParams {
        mu: mean_ms.ln() - 0.5 * sigma * sigma,
        sigma,
    };
    debug_assert!(gap(sigma).abs() < FIT_RESIDUAL);
    Ok(LognormalFit::Lognormal(params))
}

/// A law ready to draw delays from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampledLaw {
    Constant(f64),
    Lognormal(LogParams),
}

impl SampledLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SampledLaw::Constant(ms) => ms,
            SampledLaw::Lognormal(p) => LogNormal::new(p.mu, p.sigma)
                .expect("validated lognormal")
                .sample(rng),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SampledLaw::Constant(ms) => ms,
            SampledLaw::Lognormal(p) => p.mean(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StageSampler {
    Sampled(SampledLaw),
    Link,
}

/// Turn a configured law into a sampler.
///
/// Lognormal targets without a solution (p95 far above the mean) fall back
/// to the widest lognormal with the requested mean, which keeps the mean
/// exact and gets the 95th percentile as close as the family allows.
pub fn compile_law(stage: Stage, law: &StageLaw) -> Result<StageSampler, NetsimError> {
    validate_law(stage, law)?;
    Ok(match *law {
        StageLaw::Constant { ms } => StageSampler::Sampled(SampledLaw::Constant(ms)),
        StageLaw::LinkComputed => StageSampler::Link,
        StageLaw::Lognormal { mean_ms, p95_ms } => match fit_lognormal(mean_ms, p95_ms) {
            Ok(LognormalFit::Lognormal(p)) => StageSampler::Sampled(SampledLaw::Lognormal(p)),
            Ok(LognormalFit::Constant(ms)) => {
                log::warn!(
                    "stage {}: p95 equals mean ({mean_ms} ms); using a constant delay",
                    stage.key()
                );
                StageSampler::Sampled(SampledLaw::Constant(ms))
            }
            Err(NetsimError::NoLognormal { .. }) => {
                let sigma = Z95;
                log::warn!(
                    "stage {}: no lognormal has mean {mean_ms} ms and p95 {p95_ms} ms; \
                     using sigma={sigma:.4} (p95 {:.3} ms)",
                    stage.key(),
                    mean_ms * (Z95 * sigma - 0.5 * sigma * sigma).exp()
                );
                StageSampler::Sampled(SampledLaw::Lognormal(LogParams {
                    mu: mean_ms.ln() - 0.5 * sigma * sigma,
                    sigma,
                }))
            }
            Err(e) => return Err(e),
        },
    })
}

/// Draw one delay (ms) from a stage model. Link-computed stages have no
/// sampled delay and yield `None`.
pub fn sample_stage<R: Rng + ?Sized>(
    stage: Stage,
    law: &StageLaw,
    rng: &mut R,
) -> Result<Option<f64>, NetsimError> {
    Ok(match compile_law(stage, law)? {
        StageSampler::Sampled(s) => Some(s.sample(rng)),
        StageSampler::Link => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn forward_construction_recovered() {
        let sigma = 0.3;
        let mean = 12.0;
        let p95 = mean * (Z95 * sigma - 0.5 * sigma * sigma).exp();
        match fit_lognormal(mean, p95).unwrap() {
            LognormalFit::Lognormal(p) => {
                assert!((p.sigma - sigma).abs() < 1e-6);
                assert!((p.mean() - mean).abs() < 1e-9);
                assert!(((p.mu + Z95 * p.sigma).exp() - p95).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_and_invalid() {
        assert_eq!(
            fit_lognormal(5.0, 5.0).unwrap(),
            LognormalFit::Constant(5.0)
        );
        assert!(matches!(
            fit_lognormal(5.0, 4.0),
            Err(NetsimError::Input(_))
        ));
        assert!(matches!(
            fit_lognormal(0.67, 3.20),
            Err(NetsimError::NoLognormal { .. })
        ));
    }

    #[test]
    fn constant_stage() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let d = sample_stage(Stage::Encode, &StageLaw::Constant { ms: 5.0 }, &mut rng).unwrap();
            assert_eq!(d, Some(5.0));
        }
    }

    #[test]
    fn link_only_for_transport() {
        let models = StageModels::from_fn(|s| {
            if s == Stage::Decode {
                StageLaw::LinkComputed
            } else {
                StageLaw::Constant { ms: 1.0 }
            }
        });
        assert!(models.validate().is_err());
    }

    #[test]
    fn fallback_keeps_mean() {
        let s = compile_law(
            Stage::RenderEyes,
            &StageLaw::Lognormal {
                mean_ms: 0.67,
                p95_ms: 3.2,
            },
        )
        .unwrap();
        match s {
            StageSampler::Sampled(l) => assert!((l.mean() - 0.67).abs() < 1e-12),
            StageSampler::Link => panic!(),
        }
    }
}
