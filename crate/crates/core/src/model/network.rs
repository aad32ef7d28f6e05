use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::fmt;
use std::str::FromStr;

use super::{
    BloodProperties, InletFlowSeries, StenosisSpec, TubeLaw, VesselGeometry, WindkesselParams,
};
use crate::error::{Error, Result};

/// The three vessels of the aorto-iliac bifurcation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VesselId {
    Aorta,
    Iliac1,
    Iliac2,
}

impl VesselId {
    pub const ALL: [VesselId; 3] = [VesselId::Aorta, VesselId::Iliac1, VesselId::Iliac2];

    pub fn name(self) -> &'static str {
        match self {
            VesselId::Aorta => "aorta",
            VesselId::Iliac1 => "iliac1",
            VesselId::Iliac2 => "iliac2",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for VesselId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VesselId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aorta" => Ok(VesselId::Aorta),
            "iliac1" | "iliac-1" | "iliac_1" => Ok(VesselId::Iliac1),
            "iliac2" | "iliac-2" | "iliac_2" => Ok(VesselId::Iliac2),
            other => Err(Error::invalid(
                "vessel",
                format!("unknown vessel `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stenosis {
    pub vessel: VesselId,
    pub spec: StenosisSpec,
}

/// Everything needed to simulate one virtual patient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParameters {
    pub aorta: VesselGeometry,
    /// Shared by both common iliacs.
    pub iliac: VesselGeometry,
    pub windkessel_1: WindkesselParams,
    pub windkessel_2: WindkesselParams,
    pub inlet: InletFlowSeries,
    pub blood: BloodProperties,
    /// Pa
    pub external_pressure: f64,
    /// Pa
    pub diastolic_pressure: f64,
    pub stenosis: Option<Stenosis>,
}

impl NetworkParameters {
    /// The mean healthy patient: Table-1 means for geometry and Windkessels,
    /// default blood, 1 s period, 10 kPa diastolic pressure and the reference
    /// inflow.
    pub fn reference() -> Self {
        Self {
            aorta: VesselGeometry {
                length: 0.086,
                diastolic_diameter: 0.0172,
                wall_thickness: 1.03e-3,
                youngs_modulus: 500e3,
            },
            iliac: VesselGeometry {
                length: 0.085,
                diastolic_diameter: 0.012,
                wall_thickness: 0.72e-3,
                youngs_modulus: 700e3,
            },
            windkessel_1: WindkesselParams::TABLE_MEAN,
            windkessel_2: WindkesselParams::TABLE_MEAN,
            inlet: InletFlowSeries::reference(1.0).expect("reference inflow is valid"),
            blood: BloodProperties::default(),
            external_pressure: 0.0,
            diastolic_pressure: 10_000.0,
            stenosis: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.aorta.validate()?;
        self.iliac.validate()?;
        self.windkessel_1.validate()?;
        self.windkessel_2.validate()?;
        self.inlet.validate()?;
        self.blood.validate()?;
        if !self.external_pressure.is_finite() || !self.diastolic_pressure.is_finite() {
            return Err(Error::invalid(
                "pressure",
                "external and diastolic pressure must be finite",
            ));
        }
        if let Some(s) = &self.stenosis {
            s.spec.validate()?;
        }
        Ok(())
    }

    pub fn geometry(&self, vessel: VesselId) -> &VesselGeometry {
        match vessel {
            VesselId::Aorta => &self.aorta,
            VesselId::Iliac1 | VesselId::Iliac2 => &self.iliac,
        }
    }

    /// Stenosis acting on `vessel`, if any.
    pub fn stenosis_in(&self, vessel: VesselId) -> Option<&StenosisSpec> {
        self.stenosis
            .as_ref()
            .filter(|s| s.vessel == vessel)
            .map(|s| &s.spec)
    }

    pub fn tube_law(&self, vessel: VesselId) -> TubeLaw {
        TubeLaw {
            stiffness: self.geometry(vessel).stiffness(),
            external_pressure: self.external_pressure,
            diastolic_pressure: self.diastolic_pressure,
        }
    }

    /// Flat key/value view with dotted keys mirroring the field names.
    pub fn to_flat_map(&self) -> Map<String, Value> {
        let mut map = Map::new();
        let mut put = |k: String, v: f64| {
            map.insert(k, Value::from(v));
        };
        for (prefix, g) in [("aorta", &self.aorta), ("iliac", &self.iliac)] {
            put(format!("{prefix}.length"), g.length);
            put(format!("{prefix}.diastolic_diameter"), g.diastolic_diameter);
            put(format!("{prefix}.wall_thickness"), g.wall_thickness);
            put(format!("{prefix}.youngs_modulus"), g.youngs_modulus);
        }
        for (prefix, w) in [
            ("windkessel_1", &self.windkessel_1),
            ("windkessel_2", &self.windkessel_2),
        ] {
            put(
                format!("{prefix}.proximal_resistance"),
                w.proximal_resistance,
            );
            put(format!("{prefix}.distal_resistance"), w.distal_resistance);
            put(format!("{prefix}.compliance"), w.compliance);
            put(format!("{prefix}.outflow_pressure"), w.outflow_pressure);
        }
        put("inlet.period".into(), self.inlet.period);
        for n in 0..self.inlet.sine.len() {
            put(format!("inlet.sine_{n}"), self.inlet.sine[n]);
            put(format!("inlet.cosine_{n}"), self.inlet.cosine[n]);
        }
        put("blood.density".into(), self.blood.density);
        put(
            "blood.dynamic_viscosity".into(),
            self.blood.dynamic_viscosity,
        );
        put(
            "blood.velocity_profile_constant".into(),
            self.blood.velocity_profile_constant,
        );
        put("external_pressure".into(), self.external_pressure);
        put("diastolic_pressure".into(), self.diastolic_pressure);
        if let Some(s) = &self.stenosis {
            put("stenosis.severity".into(), s.spec.severity);
            put("stenosis.start".into(), s.spec.start);
            put("stenosis.end".into(), s.spec.end);
            put("stenosis.reference".into(), s.spec.reference);
            map.insert("stenosis.vessel".into(), Value::from(s.vessel.name()));
        }
        map
    }

    pub fn from_flat_map(map: &Map<String, Value>) -> Result<Self> {
        let get = |k: &str| -> Result<f64> {
            map.get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Data(format!("missing or non-numeric key `{k}`")))
        };
        let geometry = |p: &str| -> Result<VesselGeometry> {
            VesselGeometry::new(
                get(&format!("{p}.length"))?,
                get(&format!("{p}.diastolic_diameter"))?,
                get(&format!("{p}.wall_thickness"))?,
                get(&format!("{p}.youngs_modulus"))?,
            )
        };
        let windkessel = |p: &str| -> Result<WindkesselParams> {
            WindkesselParams::new(
                get(&format!("{p}.proximal_resistance"))?,
                get(&format!("{p}.distal_resistance"))?,
                get(&format!("{p}.compliance"))?,
                get(&format!("{p}.outflow_pressure"))?,
            )
        };
        let mut inlet = InletFlowSeries {
            period: get("inlet.period")?,
            sine: [0.0; 6],
            cosine: [0.0; 6],
        };
        for n in 0..6 {
            inlet.sine[n] = get(&format!("inlet.sine_{n}"))?;
            inlet.cosine[n] = get(&format!("inlet.cosine_{n}"))?;
        }
        let stenosis = match map.get("stenosis.vessel") {
            None => None,
            Some(v) => {
                let vessel: VesselId = v
                    .as_str()
                    .ok_or_else(|| Error::Data("`stenosis.vessel` must be a string".into()))?
                    .parse()?;
                let spec = StenosisSpec::new(
                    get("stenosis.severity")?,
                    get("stenosis.start")?,
                    get("stenosis.end")?,
                    get("stenosis.reference")?,
                )?;
                Some(Stenosis { vessel, spec })
            }
        };
        let params = Self {
            aorta: geometry("aorta")?,
            iliac: geometry("iliac")?,
            windkessel_1: windkessel("windkessel_1")?,
            windkessel_2: windkessel("windkessel_2")?,
            inlet,
            blood: BloodProperties::new(
                get("blood.density")?,
                get("blood.dynamic_viscosity")?,
                get("blood.velocity_profile_constant")?,
            )?,
            external_pressure: get("external_pressure")?,
            diastolic_pressure: get("diastolic_pressure")?,
            stenosis,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Diastolic area at each grid position (m) along a vessel.
pub fn reference_area_profile(
    geometry: &VesselGeometry,
    stenosis: Option<&StenosisSpec>,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let ad = geometry.diastolic_area();
    grid.iter()
        .map(|&x| {
            if !(0.0..=geometry.length).contains(&x) {
                return Err(Error::GridOutsideVessel {
                    x,
                    length: geometry.length,
                });
            }
            Ok(match stenosis {
                None => ad,
                Some(s) => ad * s.area_factor((x / geometry.length).clamp(0.0, 1.0)),
            })
        })
        .collect()
}
