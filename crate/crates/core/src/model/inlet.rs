use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::require_positive;
use crate::error::{Error, Result};

/// Truncation order of every Fourier series in this crate.
pub const INLET_HARMONICS: usize = 5;

/// Reference inflow, `(b_0, a_1, b_1, ..., a_5, b_5)` in m³/s for a 1 s
/// cycle: an order-5 least-squares fit of a 0.3 s systolic half-sine
/// ejection peaking at 4.5e-5 m³/s followed by a 0.1 s reverse-flow notch
/// of 10 % amplitude.
pub const REFERENCE_INLET_COEFFICIENTS: [f64; 11] = [
    8.308e-6, 1.231e-5, 9.613e-6, 1.201e-5, -3.560e-6, 2.093e-6, -7.441e-6, -2.006e-6, -1.966e-6,
    4.500e-7, 0.0,
];

/// Periodic inlet flow `Q(t) = Σ a_n sin(nωt) + b_n cos(nωt)`, n = 0..5,
/// with `a_0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InletFlowSeries {
    /// Cardiac period, s.
    pub period: f64,
    /// `a_0..a_5`, m³/s. `a_0` is always zero.
    pub sine: [f64; INLET_HARMONICS + 1],
    /// `b_0..b_5`, m³/s.
    pub cosine: [f64; INLET_HARMONICS + 1],
}

impl InletFlowSeries {
    /// Builds a series from its 11 free coefficients in the order
    /// `(b_0, a_1, b_1, ..., a_5, b_5)`.
    pub fn from_free_coefficients(period: f64, coefficients: &[f64]) -> Result<Self> {
        require_positive("period", period)?;
        if coefficients.len() != 2 * INLET_HARMONICS + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * INLET_HARMONICS + 1,
                found: coefficients.len(),
            });
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("inlet", "coefficients must be finite"));
        }
        let mut sine = [0.0; INLET_HARMONICS + 1];
        let mut cosine = [0.0; INLET_HARMONICS + 1];
        cosine[0] = coefficients[0];
        for n in 1..=INLET_HARMONICS {
            sine[n] = coefficients[2 * n - 1];
            cosine[n] = coefficients[2 * n];
        }
        Ok(Self {
            period,
            sine,
            cosine,
        })
    }

    pub fn reference(period: f64) -> Result<Self> {
        Self::from_free_coefficients(period, &REFERENCE_INLET_COEFFICIENTS)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("period", self.period)?;
        if self.sine[0] != 0.0 {
            return Err(Error::invalid("inlet.sine_0", "a_0 must be zero"));
        }
        if self
            .sine
            .iter()
            .chain(self.cosine.iter())
            .any(|c| !c.is_finite())
        {
            return Err(Error::invalid("inlet", "coefficients must be finite"));
        }
        Ok(())
    }

    pub fn free_coefficients(&self) -> [f64; 2 * INLET_HARMONICS + 1] {
        let mut out = [0.0; 2 * INLET_HARMONICS + 1];
        out[0] = self.cosine[0];
        for n in 1..=INLET_HARMONICS {
            out[2 * n - 1] = self.sine[n];
            out[2 * n] = self.cosine[n];
        }
        out
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Flow rate at time `t`, m³/s.
    pub fn flow(&self, t: f64) -> f64 {
        // Reduce to one period first so that Q(t) and Q(t + T) see the same
        // phase argument up to one rounding of `t`.
        let phase = (t / self.period).rem_euclid(1.0);
        let theta = 2.0 * PI * phase;
        let mut q = self.cosine[0];
        for n in 1..=INLET_HARMONICS {
            let (s, c) = (n as f64 * theta).sin_cos();
            q += self.sine[n] * s + self.cosine[n] * c;
        }
        q
    }

    /// Cycle-averaged flow, equal to `b_0`.
    pub fn mean_flow(&self) -> f64 {
        self.cosine[0]
    }
}
