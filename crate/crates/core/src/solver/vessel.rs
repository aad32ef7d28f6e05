//! Two-step Lax–Wendroff discretization of one vessel.
//!
//! The unknowns are the cell averages of area `A` and velocity `U`. In these
//! variables the system is in conservation form,
//!
//! ```text
//! ∂A/∂t + ∂(AU)/∂x = 0
//! ∂U/∂t + ∂(U²/2 + P(A, x)/ρ)/∂x = -K U / A
//! ```
//!
//! even when the diastolic area varies along the vessel. The predictor
//! averages the deviation `A - A_d` rather than `A`, so a fluid at rest with
//! `A = A_d(x)` is reproduced exactly.

use crate::error::{Error, Result};
use crate::model::{reference_area_profile, NetworkParameters, TubeLaw, VesselId};

/// Area and velocity on a cell face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceState {
    pub area: f64,
    pub velocity: f64,
}

impl FaceState {
    pub fn flow(&self) -> f64 {
        self.area * self.velocity
    }
}

/// Tube law evaluated at a fixed diastolic area, used at vessel ends.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EndLaw {
    pub law: TubeLaw,
    pub diastolic_area: f64,
    pub density: f64,
}

impl EndLaw {
    #[inline]
    pub fn pressure(&self, area: f64) -> f64 {
        self.law.pressure(area, self.diastolic_area)
    }

    #[inline]
    pub fn dpressure(&self, area: f64) -> f64 {
        self.law.stiffness / (2.0 * self.diastolic_area * area.sqrt())
    }

    #[inline]
    pub fn wave_speed(&self, area: f64) -> f64 {
        self.law.wave_speed(area, self.diastolic_area, self.density)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Vessel {
    pub id: VesselId,
    pub cells: usize,
    pub dx: f64,
    beta_over_rho: f64,
    friction: f64,
    pub law: TubeLaw,
    density: f64,
    ad: Vec<f64>,
    sqrt_ad: Vec<f64>,
    inv_ad: Vec<f64>,
    ad_face: Vec<f64>,
    sqrt_ad_face: Vec<f64>,
    inv_ad_face: Vec<f64>,
    pub area: Vec<f64>,
    pub velocity: Vec<f64>,
    flux_a: Vec<f64>,
    flux_u: Vec<f64>,
    face_flux_a: Vec<f64>,
    face_flux_u: Vec<f64>,
}

impl Vessel {
    pub fn new(params: &NetworkParameters, id: VesselId, cells: usize) -> Result<Self> {
        let geometry = params.geometry(id);
        let stenosis = params.stenosis_in(id);
        let dx = geometry.length / cells as f64;
        let centres: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) * dx).collect();
        let faces: Vec<f64> = (0..=cells)
            .map(|j| (j as f64 * dx).min(geometry.length))
            .collect();
        let ad = reference_area_profile(geometry, stenosis, &centres)?;
        let ad_face = reference_area_profile(geometry, stenosis, &faces)?;
        let law = params.tube_law(id);
        let density = params.blood.density;
        Ok(Self {
            id,
            cells,
            dx,
            beta_over_rho: law.stiffness / density,
            friction: params.blood.friction_coefficient(),
            law,
            density,
            sqrt_ad: ad.iter().map(|a| a.sqrt()).collect(),
            inv_ad: ad.iter().map(|a| 1.0 / a).collect(),
            sqrt_ad_face: ad_face.iter().map(|a| a.sqrt()).collect(),
            inv_ad_face: ad_face.iter().map(|a| 1.0 / a).collect(),
            area: ad.clone(),
            velocity: vec![0.0; cells],
            flux_a: vec![0.0; cells],
            flux_u: vec![0.0; cells],
            face_flux_a: vec![0.0; cells + 1],
            face_flux_u: vec![0.0; cells + 1],
            ad,
            ad_face,
        })
    }

    /// Sets every cell to rest at the given pressure.
    pub fn inflate(&mut self, pressure: f64) {
        for (a, &ad) in self.area.iter_mut().zip(&self.ad) {
            *a = self.law.area(pressure, ad);
        }
        self.velocity.iter_mut().for_each(|u| *u = 0.0);
    }

    /// `dV/dP` of the vessel at uniform pressure, m³/Pa.
    pub fn compliance(&self, pressure: f64) -> f64 {
        let stiffness = self.law.stiffness;
        self.ad
            .iter()
            .map(|&ad| 2.0 * self.law.area(pressure, ad).sqrt() * ad / stiffness)
            .sum::<f64>()
            * self.dx
    }

    pub fn left_end(&self) -> EndLaw {
        EndLaw {
            law: self.law,
            diastolic_area: self.ad_face[0],
            density: self.density,
        }
    }

    pub fn right_end(&self) -> EndLaw {
        EndLaw {
            law: self.law,
            diastolic_area: self.ad_face[self.cells],
            density: self.density,
        }
    }

    #[inline]
    fn cell_speed(&self, i: usize) -> f64 {
        (0.5 * self.beta_over_rho * self.area[i].sqrt() * self.inv_ad[i]).sqrt()
    }

    /// Largest characteristic rate `(|U| + c) / dx` over the cells, 1/s.
    pub fn max_rate(&self) -> f64 {
        (0..self.cells)
            .map(|i| (self.velocity[i].abs() + self.cell_speed(i)) / self.dx)
            .fold(0.0, f64::max)
    }

    /// Backward Riemann invariant `U - 4c` transported to the left face at
    /// the half step.
    pub fn incoming_from_left(&self, dt: f64) -> f64 {
        let w0 = self.velocity[0] - 4.0 * self.cell_speed(0);
        let w1 = self.velocity[1] - 4.0 * self.cell_speed(1);
        let speed = self.cell_speed(0) - self.velocity[0];
        let foot = 0.5 * speed * dt;
        w0 + (w1 - w0) * (foot - 0.5 * self.dx) / self.dx
    }

    /// Forward Riemann invariant `U + 4c` transported to the right face at
    /// the half step.
    pub fn incoming_from_right(&self, dt: f64) -> f64 {
        let n = self.cells;
        let w0 = self.velocity[n - 1] + 4.0 * self.cell_speed(n - 1);
        let w1 = self.velocity[n - 2] + 4.0 * self.cell_speed(n - 2);
        let speed = self.cell_speed(n - 1) + self.velocity[n - 1];
        let foot = 0.5 * speed * dt;
        w0 + (w1 - w0) * (foot - 0.5 * self.dx) / self.dx
    }

    #[inline]
    fn momentum_flux(&self, area: f64, velocity: f64, sqrt_ad: f64, inv_ad: f64) -> f64 {
        0.5 * velocity * velocity + self.beta_over_rho * (area.sqrt() - sqrt_ad) * inv_ad
    }

    /// Advances the cells by `dt` given the half-step states on the two end
    /// faces. Returns the largest Courant number met during the step.
    pub fn step(&mut self, dt: f64, left: FaceState, right: FaceState, time: f64) -> Result<f64> {
        let n = self.cells;
        let lambda = dt / self.dx;
        let mut courant: f64 = 0.0;

        for i in 0..n {
            let (a, u) = (self.area[i], self.velocity[i]);
            self.flux_a[i] = a * u;
            self.flux_u[i] = self.momentum_flux(a, u, self.sqrt_ad[i], self.inv_ad[i]);
            let c = (0.5 * self.beta_over_rho * a.sqrt() * self.inv_ad[i]).sqrt();
            courant = courant.max((u.abs() + c) * lambda);
        }

        self.face_flux_a[0] = left.flow();
        self.face_flux_u[0] = self.momentum_flux(
            left.area,
            left.velocity,
            self.sqrt_ad_face[0],
            self.inv_ad_face[0],
        );
        self.face_flux_a[n] = right.flow();
        self.face_flux_u[n] = self.momentum_flux(
            right.area,
            right.velocity,
            self.sqrt_ad_face[n],
            self.inv_ad_face[n],
        );

        let half = 0.5 * lambda;
        let k_half_dt = 0.5 * dt * self.friction;
        for j in 1..n {
            let (l, r) = (j - 1, j);
            let deviation = 0.5 * ((self.area[l] - self.ad[l]) + (self.area[r] - self.ad[r]));
            let a = self.ad_face[j] + deviation - half * (self.flux_a[r] - self.flux_a[l]);
            let source = -0.5 * (self.velocity[l] / self.area[l] + self.velocity[r] / self.area[r]);
            let u = 0.5 * (self.velocity[l] + self.velocity[r])
                - half * (self.flux_u[r] - self.flux_u[l])
                + k_half_dt * source;
            if !(a > 0.0) {
                return Err(self.blowup(time));
            }
            self.face_flux_a[j] = a * u;
            self.face_flux_u[j] =
                self.momentum_flux(a, u, self.sqrt_ad_face[j], self.inv_ad_face[j]);
        }

        for i in 0..n {
            let a_old = self.area[i];
            let u_old = self.velocity[i];
            let a = a_old - lambda * (self.face_flux_a[i + 1] - self.face_flux_a[i]);
            // Crank–Nicolson on the linear friction term.
            let explicit = u_old
                - lambda * (self.face_flux_u[i + 1] - self.face_flux_u[i])
                - k_half_dt * u_old / a_old;
            let u = explicit / (1.0 + k_half_dt / a);
            if !(a > 0.0) || !u.is_finite() {
                return Err(self.blowup(time));
            }
            self.area[i] = a;
            self.velocity[i] = u;
        }
        Ok(courant)
    }

    fn blowup(&self, time: f64) -> Error {
        Error::NumericalBlowup {
            vessel: self.id.name().to_string(),
            time,
        }
    }
}
