use serde::{Deserialize, Serialize};

pub const PASCAL_PER_MMHG: f64 = 133.322387415;

/// Physiological acceptance ranges for the inlet pressure, mmHg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterLimits {
    pub max_systolic: f64,
    pub min_diastolic: f64,
    pub max_pulse: f64,
}

impl Default for FilterLimits {
    fn default() -> Self {
        Self {
            max_systolic: 225.0,
            min_diastolic: 25.0,
            max_pulse: 120.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterRule {
    /// Peak pressure at or above the systolic limit.
    MaxPressure,
    /// Minimum pressure at or below the diastolic limit.
    MinPressure,
    /// Pulse pressure at or above its limit.
    PulsePressure,
}

impl FilterRule {
    pub fn number(self) -> usize {
        self as usize + 1
    }
}

/// Checks the inlet pressure signal (Pa) and returns the first rule it
/// breaks, if any.
pub fn apply_filters(pressure: &[f64], limits: &FilterLimits) -> Option<FilterRule> {
    let (lo, hi) = pressure
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
            (lo.min(p), hi.max(p))
        });
    let (lo, hi) = (lo / PASCAL_PER_MMHG, hi / PASCAL_PER_MMHG);
    if !(hi < limits.max_systolic) {
        Some(FilterRule::MaxPressure)
    } else if !(lo > limits.min_diastolic) {
        Some(FilterRule::MinPressure)
    } else if !(hi - lo < limits.max_pulse) {
        Some(FilterRule::PulsePressure)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mmhg(v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| x * PASCAL_PER_MMHG).collect()
    }

    #[test]
    fn rules() {
        let l = FilterLimits::default();
        assert_eq!(apply_filters(&mmhg(&[100.0; 8]), &l), None);
        assert_eq!(
            apply_filters(&mmhg(&[120.0, 230.0, 130.0]), &l),
            Some(FilterRule::MaxPressure)
        );
        assert_eq!(
            apply_filters(&mmhg(&[30.0, 90.0, 160.0]), &l),
            Some(FilterRule::PulsePressure)
        );
        assert_eq!(
            apply_filters(&mmhg(&[20.0, 90.0]), &l),
            Some(FilterRule::MinPressure)
        );
        assert_eq!(FilterRule::PulsePressure.number(), 3);
    }
}
