//! Standard-normal helpers and truncated lognormal moments.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

/// 95th percentile of the standard normal distribution.
pub const Z95: f64 = 1.644_853_626_951_472_2;

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // One Newton step polishes the inverse to full precision.
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    x - (std_normal_cdf(x) - p) / pdf
}

/// Parameters of `ln X ~ N(mu, sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LogParams {
    pub fn median(&self) -> f64 {
        self.mu.exp()
    }

    pub fn mean(&self) -> f64 {
        (self.mu + 0.5 * self.sigma * self.sigma).exp()
    }

    fn z(&self, x: f64) -> f64 {
        (x.ln() - self.mu) / self.sigma
    }

    /// Probability mass at or below `cap`.
    pub fn mass_below(&self, cap: f64) -> f64 {
        std_normal_cdf(self.z(cap))
    }

    /// Mean of the distribution conditioned on `X <= cap`.
    pub fn truncated_mean(&self, cap: f64) -> f64 {
        let b = self.z(cap);
        self.mean() * std_normal_cdf(b - self.sigma) / std_normal_cdf(b)
    }

    /// `P(X > t | X <= cap)` for `t < cap`.
    pub fn truncated_tail(&self, t: f64, cap: f64) -> f64 {
        let below_cap = std_normal_cdf(self.z(cap));
        let below_t = std_normal_cdf(self.z(t));
        ((below_cap - below_t) / below_cap).clamp(0.0, 1.0)
    }

    /// Inverse-CDF draw from the distribution truncated to `(0, cap]`.
    pub fn sample_truncated<R: Rng + ?Sized>(&self, rng: &mut R, cap: f64) -> f64 {
        let upper = self.mass_below(cap);
        let u: f64 = rng.random::<f64>() * upper;
        let x = (self.mu + self.sigma * std_normal_quantile(u)).exp();
        x.min(cap)
    }
}
