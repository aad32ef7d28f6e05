use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vpd::Measurement;

/// Non-empty subset of the six measurements, as a bit mask over
/// [`Measurement::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct MeasurementCombination(u8);

impl MeasurementCombination {
    pub const COUNT: usize = 63;

    pub fn new(measurements: &[Measurement]) -> Result<Self> {
        let mask = measurements.iter().fold(0u8, |m, x| m | 1 << x.block());
        if mask == 0 {
            return Err(Error::invalid(
                "combination",
                "must contain at least one measurement",
            ));
        }
        Ok(Self(mask))
    }

    pub fn all_six() -> Self {
        Self(0b11_1111)
    }

    pub fn contains(self, m: Measurement) -> bool {
        self.0 & 1 << m.block() != 0
    }

    pub fn measurements(self) -> Vec<Measurement> {
        Measurement::ALL
            .into_iter()
            .filter(|&m| self.contains(m))
            .collect()
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Feature columns of the included measurements, in block order.
    pub fn columns(self) -> Vec<usize> {
        self.measurements()
            .into_iter()
            .flat_map(|m| m.columns())
            .collect()
    }

    /// Swaps the two iliac probes.
    pub fn mirror(self) -> Self {
        Self(
            self.measurements()
                .into_iter()
                .fold(0u8, |m, x| m | 1 << x.mirror().block()),
        )
    }

    /// All 63 combinations: by size, then lexicographically in block
    /// order (`Q3`, `Q2`, `Q1`, `P3`, `P2`, `P1`).
    pub fn all() -> Vec<Self> {
        let mut v: Vec<Self> = (1u8..64).map(Self).collect();
        v.sort_by_key(|c| {
            (
                c.len(),
                c.measurements()
                    .iter()
                    .map(|m| m.block())
                    .collect::<Vec<_>>(),
            )
        });
        v
    }
}

/// The 24 unordered pairs `(c, mirror(c))` with `c ≠ mirror(c)`, each
/// listed once with the canonically earlier combination first.
pub fn like_for_like_pairs() -> Vec<(MeasurementCombination, MeasurementCombination)> {
    let all = MeasurementCombination::all();
    let rank = |c: MeasurementCombination| all.iter().position(|&x| x == c).unwrap();
    all.iter()
        .filter(|&&c| c != c.mirror() && rank(c) < rank(c.mirror()))
        .map(|&c| (c, c.mirror()))
        .collect()
}

impl fmt::Display for MeasurementCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.measurements().iter().map(|m| m.name()).collect();
        f.write_str(&names.join("+"))
    }
}

impl FromStr for MeasurementCombination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ms = s
            .split(['+', ','])
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Measurement>>>()?;
        Self::new(&ms)
    }
}

impl From<MeasurementCombination> for String {
    fn from(c: MeasurementCombination) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for MeasurementCombination {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Measurement::*;

    #[test]
    fn sixty_three_in_canonical_order() {
        let all = MeasurementCombination::all();
        assert_eq!(all.len(), 63);
        let names: Vec<String> = all.iter().take(8).map(|c| c.to_string()).collect();
        assert_eq!(
            names,
            ["Q3", "Q2", "Q1", "P3", "P2", "P1", "Q3+Q2", "Q3+Q1"]
        );
        assert_eq!(all[62], MeasurementCombination::all_six());
        let sizes: Vec<usize> = (1..=6)
            .map(|k| all.iter().filter(|c| c.len() == k).count())
            .collect();
        assert_eq!(sizes, [6, 15, 20, 15, 6, 1]);
    }

    #[test]
    fn mirrors() {
        let c = MeasurementCombination::new(&[Q3, P3]).unwrap();
        assert_eq!(c.mirror(), MeasurementCombination::new(&[Q2, P2]).unwrap());
        let s = MeasurementCombination::new(&[Q1, P1]).unwrap();
        assert_eq!(s.mirror(), s);
        let pairs = like_for_like_pairs();
        assert_eq!(pairs.len(), 24);
        assert!(pairs.iter().all(|(a, b)| a.mirror() == *b && a != b));
    }

    #[test]
    fn columns_and_parsing() {
        let c: MeasurementCombination = "p1+Q3".parse().unwrap();
        assert_eq!(c.to_string(), "Q3+P1");
        let cols = c.columns();
        assert_eq!(cols.len(), 22);
        assert_eq!((cols[0], cols[11]), (0, 55));
        assert!("".parse::<MeasurementCombination>().is_err());
    }
}
