use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::VesselId;
use crate::vpd::HealthClass;

/// How health classes are mapped to classifier labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Scheme {
    /// `C1` = healthy, `C2` = disease anywhere.
    Enbc,
    /// `C1` = disease in the vessel, `C2` = everything else.
    Ivbc(VesselId),
    /// The four health classes.
    Multiclass,
}

impl Scheme {
    pub fn is_binary(self) -> bool {
        !matches!(self, Scheme::Multiclass)
    }

    /// Binary labels, `true` for `C1`.
    pub fn binary_labels(self, classes: &[HealthClass]) -> Result<Vec<bool>> {
        match self {
            Scheme::Enbc => Ok(classes.iter().map(|&c| c == HealthClass::Healthy).collect()),
            Scheme::Ivbc(v) => Ok(classes.iter().map(|c| c.vessel() == Some(v)).collect()),
            Scheme::Multiclass => Err(Error::invalid("scheme", "multiclass labels are not binary")),
        }
    }
}

/// Label vector for `scheme`: `0` = `C1`, `1` = `C2` for binary schemes,
/// the class index for multiclass.
pub fn make_labels(classes: &[HealthClass], scheme: Scheme) -> Vec<usize> {
    match scheme.binary_labels(classes) {
        Ok(b) => b.into_iter().map(|c1| usize::from(!c1)).collect(),
        Err(_) => classes.iter().map(|c| c.index()).collect(),
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Enbc => f.write_str("enbc"),
            Scheme::Ivbc(v) => write!(f, "ivbc:{v}"),
            Scheme::Multiclass => f.write_str("multiclass"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "enbc" => Ok(Scheme::Enbc),
            "multiclass" => Ok(Scheme::Multiclass),
            _ => match lower.strip_prefix("ivbc:") {
                Some(v) => Ok(Scheme::Ivbc(v.parse()?)),
                None => Err(Error::invalid(
                    "scheme",
                    format!("`{s}`: expected enbc, ivbc:<vessel> or multiclass"),
                )),
            },
        }
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for Scheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enbc_of_healthy_cohort_is_all_c1() {
        let classes = vec![HealthClass::Healthy; 5];
        assert!(Scheme::Enbc
            .binary_labels(&classes)
            .unwrap()
            .iter()
            .all(|&c| c));
        assert_eq!(make_labels(&classes, Scheme::Enbc), vec![0; 5]);
    }

    #[test]
    fn ivbc_positive_rate_on_balanced_design() {
        let classes: Vec<HealthClass> = (0..600)
            .map(|i| HealthClass::ALL[[0, 0, 0, 1, 2, 3][i % 6]])
            .collect();
        for v in VesselId::ALL {
            let labels = Scheme::Ivbc(v).binary_labels(&classes).unwrap();
            assert_eq!(labels.iter().filter(|&&c| c).count(), 100);
        }
    }

    #[test]
    fn multiclass_is_the_class_index() {
        assert_eq!(
            make_labels(&HealthClass::ALL, Scheme::Multiclass),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn parse_and_print() {
        for s in [
            "enbc",
            "ivbc:aorta",
            "ivbc:iliac1",
            "ivbc:iliac2",
            "multiclass",
        ] {
            assert_eq!(s.parse::<Scheme>().unwrap().to_string(), s);
        }
        assert!("ivbc:femoral".parse::<Scheme>().is_err());
    }
}
