//! Display geometry and raw/compressed throughput requirements.
//!
//! Everything here is a pure function of its inputs. Angles are reported in
//! degrees using the exact `180/π` conversion.

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Tolerance on `diag² = width² + height²` for physical panel dimensions.
const DIAGONAL_REL_TOL: f64 = 0.01;

/// Largest integer every `f64` in the integer path represents exactly.
const F64_EXACT_INT: u128 = 1 << 53;

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("invalid input: {0}")]
    Input(String),
}

fn input_err(msg: impl Into<String>) -> PerceptionError {
    PerceptionError::Input(msg.into())
}

fn require_positive(name: &str, value: f64) -> Result<(), PerceptionError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(input_err(format!("{name} must be > 0, got {value}")))
    }
}

/// Physical display geometry. Lengths are in inches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplaySpec {
    pub width_px: u32,
    pub height_px: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_in: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag_in: Option<f64>,
    /// True when the pixel counts describe a single eye's panel.
    #[serde(default)]
    pub per_eye: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Diag,
    Width,
    Height,
}

impl DisplaySpec {
    /// Panel with pixel counts only; physical lengths unknown.
    pub fn from_pixels(width_px: u32, height_px: u32, per_eye: bool) -> Self {
        Self {
            width_px,
            height_px,
            width_in: None,
            height_in: None,
            diag_in: None,
            per_eye,
        }
    }

    /// A display of the given diagonal whose physical aspect ratio equals its
    /// pixel aspect ratio (square pixels).
    pub fn with_diagonal(width_px: u32, height_px: u32, diag_in: f64) -> Self {
        let diag_px = (f64::from(width_px).powi(2) + f64::from(height_px).powi(2)).sqrt();
        let scale = diag_in / diag_px;
        Self {
            width_px,
            height_px,
            width_in: Some(f64::from(width_px) * scale),
            height_in: Some(f64::from(height_px) * scale),
            diag_in: Some(diag_in),
            per_eye: false,
        }
    }

    pub fn validate(&self) -> Result<(), PerceptionError> {
        if self.width_px < 1 || self.height_px < 1 {
            return Err(input_err(format!(
                "pixel counts must be >= 1, got {}x{}",
                self.width_px, self.height_px
            )));
        }
        for (name, v) in [
            ("width_in", self.width_in),
            ("height_in", self.height_in),
            ("diag_in", self.diag_in),
        ] {
            if let Some(v) = v {
                require_positive(name, v)?;
            }
        }
        if let (Some(d), Some(w), Some(h)) = (self.diag_in, self.width_in, self.height_in) {
            let implied = w.hypot(h);
            if ((d - implied) / implied).abs() > DIAGONAL_REL_TOL {
                return Err(input_err(format!(
                    "diag_in {d} inconsistent with width_in {w} and height_in {h}"
                )));
            }
        }
        Ok(())
    }

    pub fn diag_px(&self) -> f64 {
        (f64::from(self.width_px).powi(2) + f64::from(self.height_px).powi(2)).sqrt()
    }

    fn diag_len(&self) -> Option<f64> {
        self.diag_in
            .or_else(|| Some((self.width_in?.powi(2) + self.height_in?.powi(2)).sqrt()))
    }

    /// Pixel extent and physical length along `axis`, if both are known.
    pub fn extent(&self, axis: Axis) -> Option<(f64, f64)> {
        match axis {
            Axis::Width => Some((f64::from(self.width_px), self.width_in?)),
            Axis::Height => Some((f64::from(self.height_px), self.height_in?)),
            Axis::Diag => Some((self.diag_px(), self.diag_len()?)),
        }
    }
}

/// Inputs for the eye-like throughput requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerceptionQuery {
    pub fov_h_deg: f64,
    pub fov_v_deg: f64,
    pub ppd_h: f64,
    pub ppd_v: f64,
    /// Bits per pixel.
    pub bit_depth: f64,
    pub frame_rate: f64,
    /// Informational; the throughput does not depend on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viewing_distance_in: Option<f64>,
}

impl PerceptionQuery {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        for (name, fov) in [("fov_h_deg", self.fov_h_deg), ("fov_v_deg", self.fov_v_deg)] {
            if !(fov > 0.0 && fov < 360.0) {
                return Err(input_err(format!("{name} must be in (0, 360), got {fov}")));
            }
        }
        require_positive("ppd_h", self.ppd_h)?;
        require_positive("ppd_v", self.ppd_v)?;
        require_positive("bit_depth", self.bit_depth)?;
        require_positive("frame_rate", self.frame_rate)?;
        if let Some(l) = self.viewing_distance_in {
            require_positive("viewing_distance_in", l)?;
        }
        Ok(())
    }
}

/// Compression factor range `[lo, hi]`; a higher factor means fewer bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionRange {
    pub lo: f64,
    pub hi: f64,
}

impl CompressionRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self, PerceptionError> {
        require_positive("compression lo", lo)?;
        require_positive("compression hi", hi)?;
        if lo > hi {
            return Err(input_err(format!("compression lo {lo} exceeds hi {hi}")));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputResult {
    #[serde(serialize_with = "serialize_bits")]
    pub raw_bits_per_s: f64,
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "serialize_opt_bits"
    )]
    pub compressed_lo_bps: Option<f64>,
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "serialize_opt_bits"
    )]
    pub compressed_hi_bps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compression_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compression_hi: Option<f64>,
}

impl ThroughputResult {
    fn raw(raw_bits_per_s: f64) -> Self {
        Self {
            raw_bits_per_s,
            compressed_lo_bps: None,
            compressed_hi_bps: None,
            compression_lo: None,
            compression_hi: None,
        }
    }

    pub fn with_compression(mut self, range: CompressionRange) -> Self {
        self.compressed_lo_bps = Some(self.raw_bits_per_s / range.hi);
        self.compressed_hi_bps = Some(self.raw_bits_per_s / range.lo);
        self.compression_lo = Some(range.lo);
        self.compression_hi = Some(range.hi);
        self
    }

    /// The raw rate as an integer when it is integral and exactly representable.
    pub fn raw_bits_exact(&self) -> Option<u64> {
        as_exact_int(self.raw_bits_per_s)
    }
}

fn as_exact_int(v: f64) -> Option<u64> {
    (v.is_finite() && v >= 0.0 && v.fract() == 0.0 && (v as u128) <= F64_EXACT_INT)
        .then_some(v as u64)
}

fn serialize_bits<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    match as_exact_int(*v) {
        Some(i) => s.serialize_u64(i),
        None => s.serialize_f64(*v),
    }
}

fn serialize_opt_bits<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => serialize_bits(v, s),
        None => s.serialize_none(),
    }
}

/// Product of positive factors, computed in integer arithmetic when every
/// factor is integral so that large rates stay exact.
fn exact_product(factors: &[f64]) -> f64 {
    let integral = factors
        .iter()
        .all(|f| f.fract() == 0.0 && *f < u64::MAX as f64);
    if integral {
        let mut acc: u128 = 1;
        for f in factors {
            match acc.checked_mul(*f as u128) {
                Some(v) => acc = v,
                None => return factors.iter().product(),
            }
        }
        return acc as f64;
    }
    factors.iter().product()
}

/// Pixels per inch along `axis`.
pub fn ppi(display: &DisplaySpec, axis: Axis) -> Result<f64, PerceptionError> {
    display.validate()?;
    let (px, len) = display
        .extent(axis)
        .ok_or_else(|| input_err(format!("display has no physical length for axis {axis:?}")))?;
    Ok(px / len)
}

/// Angle in degrees subtended by an extent centred in front of the eye.
pub fn fov_deg(extent_in: f64, viewing_distance_in: f64) -> Result<f64, PerceptionError> {
    require_positive("extent_in", extent_in)?;
    require_positive("viewing_distance_in", viewing_distance_in)?;
    Ok(2.0
        * (extent_in / (2.0 * viewing_distance_in))
            .atan()
            .to_degrees())
}

pub fn ppd(pixels: f64, fov_deg: f64) -> Result<f64, PerceptionError> {
    require_positive("fov_deg", fov_deg)?;
    if !(pixels.is_finite() && pixels >= 0.0) {
        return Err(input_err(format!("pixels must be >= 0, got {pixels}")));
    }
    Ok(pixels / fov_deg)
}

/// Pixel extent needed to cover `fov_deg` at `ppd` pixels per degree.
/// Real-valued; callers round as needed.
pub fn pixels_for(fov_deg: f64, ppd: f64) -> Result<f64, PerceptionError> {
    require_positive("fov_deg", fov_deg)?;
    require_positive("ppd", ppd)?;
    Ok(fov_deg * ppd)
}

/// Raw bit rate of a frame covering the query's field of view at its angular
/// resolution.
pub fn eye_throughput(q: &PerceptionQuery) -> Result<ThroughputResult, PerceptionError> {
    q.validate()?;
    let w_px = pixels_for(q.fov_h_deg, q.ppd_h)?;
    let h_px = pixels_for(q.fov_v_deg, q.ppd_v)?;
    Ok(ThroughputResult::raw(exact_product(&[
        w_px,
        h_px,
        q.bit_depth,
        q.frame_rate,
    ])))
}

/// Raw (and optionally compressed) bit rate of a two-panel head-mounted display.
///
/// The display must describe a single eye; the factor of two for the second
/// panel is applied here.
pub fn hmd_throughput(
    display: &DisplaySpec,
    bit_depth: f64,
    frame_rate: f64,
    compression: Option<CompressionRange>,
) -> Result<ThroughputResult, PerceptionError> {
    display.validate()?;
    if !display.per_eye {
        return Err(input_err(
            "hmd_throughput needs a per-eye display spec (per_eye = true)",
        ));
    }
    require_positive("bit_depth", bit_depth)?;
    require_positive("frame_rate", frame_rate)?;
    let raw = exact_product(&[
        2.0,
        f64::from(display.width_px),
        f64::from(display.height_px),
        bit_depth,
        frame_rate,
    ]);
    let result = ThroughputResult::raw(raw);
    Ok(match compression {
        Some(c) => result.with_compression(c),
        None => result,
    })
}

/// Viewing distance (inches) at which a single pixel subtends one arcminute.
///
/// Uses the diagonal density when computable, otherwise width, then height.
pub fn optimal_viewing_distance(display: &DisplaySpec) -> Result<f64, PerceptionError> {
    display.validate()?;
    let density = [Axis::Diag, Axis::Width, Axis::Height]
        .into_iter()
        .find_map(|axis| display.extent(axis).map(|(px, len)| px / len))
        .ok_or_else(|| input_err("no axis with both pixel and physical length"))?;
    Ok(distance_for_ppi(density))
}

pub fn distance_for_ppi(ppi: f64) -> f64 {
    let arcminute = (1.0f64 / 60.0).to_radians();
    (1.0 / ppi) / arcminute.tan()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppi_width_exact() {
        let d = DisplaySpec {
            width_px: 1920,
            height_px: 1080,
            width_in: Some(19.2),
            height_in: None,
            diag_in: None,
            per_eye: false,
        };
        assert_eq!(ppi(&d, Axis::Width).unwrap(), 100.0);
        assert!(ppi(&d, Axis::Height).is_err());
    }

    #[test]
    fn zero_pixels_rejected() {
        let mut d = DisplaySpec::with_diagonal(1920, 1080, 50.0);
        d.width_px = 0;
        assert!(matches!(
            ppi(&d, Axis::Width),
            Err(PerceptionError::Input(_))
        ));
    }

    #[test]
    fn inconsistent_diagonal_rejected() {
        let mut d = DisplaySpec::with_diagonal(1920, 1080, 50.0);
        d.diag_in = Some(55.0);
        assert!(d.validate().is_err());
        d.diag_in = Some(50.3);
        assert!(d.validate().is_ok());
    }

    #[test]
    fn fov_right_angle() {
        assert!((fov_deg(20.0, 10.0).unwrap() - 90.0).abs() < 1e-12);
        assert!(fov_deg(1e-9, 10.0).unwrap() < 1e-7);
        assert!(fov_deg(0.0, 10.0).is_err());
        assert!(fov_deg(1.0, -1.0).is_err());
    }

    #[test]
    fn ppd_and_inverse() {
        assert_eq!(ppd(1800.0, 90.0).unwrap(), 20.0);
        assert_eq!(ppd(30000.0, 150.0).unwrap(), 200.0);
        assert!(ppd(100.0, 0.0).is_err());
        assert_eq!(pixels_for(150.0, 200.0).unwrap(), 30000.0);
        assert_eq!(pixels_for(120.0, 200.0).unwrap(), 24000.0);
        assert_eq!(pixels_for(1.0, 1.0).unwrap(), 1.0);
        assert!(pixels_for(-1.0, 1.0).is_err());
    }

    #[test]
    fn eye_rejects_zero_frame_rate() {
        let q = PerceptionQuery {
            fov_h_deg: 150.0,
            fov_v_deg: 120.0,
            ppd_h: 200.0,
            ppd_v: 200.0,
            bit_depth: 36.0,
            frame_rate: 0.0,
            viewing_distance_in: None,
        };
        assert!(eye_throughput(&q).is_err());
    }

    #[test]
    fn hmd_requires_per_eye() {
        let d = DisplaySpec::from_pixels(1440, 1600, false);
        assert!(hmd_throughput(&d, 24.0, 72.0, None).is_err());
    }

    #[test]
    fn identity_compression() {
        let d = DisplaySpec::from_pixels(1440, 1600, true);
        let r = hmd_throughput(
            &d,
            24.0,
            72.0,
            Some(CompressionRange::new(1.0, 1.0).unwrap()),
        )
        .unwrap();
        assert_eq!(r.compressed_lo_bps, Some(r.raw_bits_per_s));
        assert_eq!(r.compressed_hi_bps, Some(r.raw_bits_per_s));
    }

    #[test]
    fn integral_rate_serializes_as_integer() {
        let d = DisplaySpec::from_pixels(1440, 1600, true);
        let r = hmd_throughput(&d, 24.0, 72.0, None).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, r#"{"raw_bits_per_s":7962624000}"#);
    }

    #[test]
    fn no_length_means_no_distance() {
        let d = DisplaySpec::from_pixels(1920, 1080, false);
        assert!(optimal_viewing_distance(&d).is_err());
    }
}
