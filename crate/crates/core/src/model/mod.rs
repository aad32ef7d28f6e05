//! Arterial network description: vessel geometry, wall mechanics, blood
//! properties, the stenosis area map, the Fourier inlet flow and the
//! three-element Windkessel outlets.
//!
//! All quantities are SI. The wall follows the elastic tube law
//!
//! ```text
//! P - P_ext = P_d + beta * (sqrt(A) - sqrt(A_d)) / A_d,   beta = 4/3 * E * h * sqrt(pi)
//! ```
//!
//! which maps cross-sectional area to pressure given the local diastolic
//! area `A_d`.

mod inlet;
mod network;
pub mod stenosis;

pub use inlet::{InletFlowSeries, INLET_HARMONICS, REFERENCE_INLET_COEFFICIENTS};
pub use network::{reference_area_profile, NetworkParameters, Stenosis, VesselId};
pub use stenosis::StenosisSpec;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

/// Density, viscosity and velocity-profile constant of blood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BloodProperties {
    /// kg/m³
    pub density: f64,
    /// Pa·s
    pub dynamic_viscosity: f64,
    /// Velocity profile constant entering the friction term `-2(ζ+2)μπU`.
    pub velocity_profile_constant: f64,
}

impl Default for BloodProperties {
    fn default() -> Self {
        Self {
            density: 1060.0,
            dynamic_viscosity: 4.0e-3,
            velocity_profile_constant: 9.0,
        }
    }
}

impl BloodProperties {
    pub fn new(
        density: f64,
        dynamic_viscosity: f64,
        velocity_profile_constant: f64,
    ) -> Result<Self> {
        let props = Self {
            density,
            dynamic_viscosity,
            velocity_profile_constant,
        };
        props.validate()?;
        Ok(props)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("density", self.density)?;
        require_positive("dynamic_viscosity", self.dynamic_viscosity)?;
        if !(self.velocity_profile_constant.is_finite() && self.velocity_profile_constant >= 0.0) {
            return Err(Error::invalid(
                "velocity_profile_constant",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }

    /// Friction coefficient `K` such that the momentum source per unit mass
    /// is `-K U / A`.
    pub fn friction_coefficient(&self) -> f64 {
        2.0 * (self.velocity_profile_constant + 2.0) * PI * self.dynamic_viscosity / self.density
    }
}

/// Geometry and wall mechanics of one straight vessel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VesselGeometry {
    /// m
    pub length: f64,
    /// Diastolic (reference) diameter, m.
    pub diastolic_diameter: f64,
    /// m
    pub wall_thickness: f64,
    /// Pa
    pub youngs_modulus: f64,
}

impl VesselGeometry {
    pub fn new(
        length: f64,
        diastolic_diameter: f64,
        wall_thickness: f64,
        youngs_modulus: f64,
    ) -> Result<Self> {
        let geometry = Self {
            length,
            diastolic_diameter,
            wall_thickness,
            youngs_modulus,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("length", self.length)?;
        require_positive("diastolic_diameter", self.diastolic_diameter)?;
        require_positive("wall_thickness", self.wall_thickness)?;
        require_positive("youngs_modulus", self.youngs_modulus)
    }

    pub fn diastolic_area(&self) -> f64 {
        let radius = 0.5 * self.diastolic_diameter;
        PI * radius * radius
    }

    /// Tube-law stiffness `β = 4/3·E·h·√π` in Pa·m.
    pub fn stiffness(&self) -> f64 {
        tube_law_stiffness(self)
    }
}

pub fn tube_law_stiffness(geometry: &VesselGeometry) -> f64 {
    4.0 / 3.0 * geometry.youngs_modulus * geometry.wall_thickness * PI.sqrt()
}

/// Pressure from area through the elastic tube law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeLaw {
    pub stiffness: f64,
    pub external_pressure: f64,
    pub diastolic_pressure: f64,
}

impl TubeLaw {
    #[inline]
    pub fn pressure(&self, area: f64, diastolic_area: f64) -> f64 {
        self.external_pressure
            + self.diastolic_pressure
            + self.stiffness * (area.sqrt() - diastolic_area.sqrt()) / diastolic_area
    }

    /// Inverse of [`TubeLaw::pressure`].
    pub fn area(&self, pressure: f64, diastolic_area: f64) -> f64 {
        let excess = pressure - self.external_pressure - self.diastolic_pressure;
        let root = diastolic_area.sqrt() + excess * diastolic_area / self.stiffness;
        root * root
    }

    /// Pulse wave speed `c = sqrt(A/ρ · dP/dA)`.
    #[inline]
    pub fn wave_speed(&self, area: f64, diastolic_area: f64, density: f64) -> f64 {
        (self.stiffness * area.sqrt() / (2.0 * density * diastolic_area)).sqrt()
    }
}

/// Three-element (RCR) Windkessel closing an outlet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindkesselParams {
    /// Proximal resistance R1, Pa·s·m⁻³.
    pub proximal_resistance: f64,
    /// Distal resistance R2, Pa·s·m⁻³.
    pub distal_resistance: f64,
    /// m³·Pa⁻¹
    pub compliance: f64,
    /// Pressure downstream of R2, Pa.
    pub outflow_pressure: f64,
}

impl WindkesselParams {
    /// Mean outlet values of the virtual cohort, zero outflow pressure.
    pub const TABLE_MEAN: Self = Self {
        proximal_resistance: 6.81e7,
        distal_resistance: 3.10e9,
        compliance: 3.67e-10,
        outflow_pressure: 0.0,
    };

    pub fn new(
        proximal_resistance: f64,
        distal_resistance: f64,
        compliance: f64,
        outflow_pressure: f64,
    ) -> Result<Self> {
        let params = Self {
            proximal_resistance,
            distal_resistance,
            compliance,
            outflow_pressure,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("proximal_resistance", self.proximal_resistance)?;
        require_positive("distal_resistance", self.distal_resistance)?;
        require_positive("compliance", self.compliance)?;
        if !self.outflow_pressure.is_finite() {
            return Err(Error::invalid("outflow_pressure", "must be finite"));
        }
        Ok(())
    }

    /// Inlet pressure of the RCR circuit under a constant flow.
    pub fn steady_pressure(&self, flow: f64) -> f64 {
        flow * (self.proximal_resistance + self.distal_resistance) + self.outflow_pressure
    }

    pub fn time_constant(&self) -> f64 {
        self.distal_resistance * self.compliance
    }
}
