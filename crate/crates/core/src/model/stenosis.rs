use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Cosine-shaped narrowing of a vessel in normalized coordinates.
///
/// `severity` is the fractional area reduction at the lesion centre, the
/// lesion spans `[start, end]` of the normalized vessel length, and
/// `reference` is the auxiliary point the start and end are drawn around,
/// which forces a lesion length of at least 10 % of the vessel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StenosisSpec {
    pub severity: f64,
    pub start: f64,
    pub end: f64,
    pub reference: f64,
}

pub const SEVERITY_RANGE: (f64, f64) = (0.5, 0.9);
pub const REFERENCE_RANGE: (f64, f64) = (0.2, 0.8);
pub const START_MIN: f64 = 0.1;
pub const END_MAX: f64 = 0.9;
pub const HALF_MIN_LENGTH: f64 = 0.05;

// Bound checks carry a small slack so that values that went through a
// decimal text round trip are still accepted.
const SLACK: f64 = 1e-12;

impl StenosisSpec {
    pub fn new(severity: f64, start: f64, end: f64, reference: f64) -> Result<Self> {
        let spec = Self {
            severity,
            start,
            end,
            reference,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            severity,
            start,
            end,
            reference,
        } = *self;
        let within = |v: f64, lo: f64, hi: f64| v.is_finite() && v >= lo - SLACK && v <= hi + SLACK;
        if !within(reference, REFERENCE_RANGE.0, REFERENCE_RANGE.1) {
            return Err(Error::invalid(
                "reference",
                format!("{reference} outside [0.2, 0.8]"),
            ));
        }
        if !within(start, START_MIN, reference - HALF_MIN_LENGTH) {
            return Err(Error::invalid(
                "start",
                format!("{start} outside [0.1, r - 0.05]"),
            ));
        }
        if !within(end, reference + HALF_MIN_LENGTH, END_MAX) {
            return Err(Error::invalid(
                "end",
                format!("{end} outside [r + 0.05, 0.9]"),
            ));
        }
        if !within(severity, SEVERITY_RANGE.0, SEVERITY_RANGE.1) {
            return Err(Error::invalid(
                "severity",
                format!("{severity} outside [0.5, 0.9]"),
            ));
        }
        Ok(())
    }

    /// Rebuilds a spec from its area-map parameters alone, choosing the
    /// reference point closest to the lesion midpoint that satisfies the
    /// sampling constraints. The reference point does not affect the map.
    pub fn from_lesion(severity: f64, start: f64, end: f64) -> Result<Self> {
        let lo = REFERENCE_RANGE.0.max(start + HALF_MIN_LENGTH);
        let hi = REFERENCE_RANGE.1.min(end - HALF_MIN_LENGTH);
        if lo > hi + SLACK {
            return Err(Error::invalid(
                "stenosis",
                format!("no reference point fits lesion [{start}, {end}]"),
            ));
        }
        let reference = (0.5 * (start + end)).clamp(lo, hi.max(lo));
        Self::new(severity, start, end, reference)
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// Normalized area `A/A_d` at normalized position `x_n`.
    pub fn normalized_area(&self, x_n: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x_n) {
            return Err(Error::PositionOutOfRange(x_n));
        }
        Ok(self.area_factor(x_n))
    }

    pub(crate) fn area_factor(&self, x_n: f64) -> f64 {
        if x_n < self.start || x_n > self.end {
            return 1.0;
        }
        let phase = 2.0 * (x_n - self.start) * PI / (self.end - self.start);
        (1.0 - 0.5 * self.severity) + 0.5 * self.severity * phase.cos()
    }
}
