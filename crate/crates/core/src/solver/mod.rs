//! Time-domain solution of the 1D pulse-wave equations on the aorto-iliac
//! bifurcation.
//!
//! The network is advanced one cardiac cycle at a time with a fixed number
//! of steps per cycle, until two consecutive cycles agree at the six probes
//! to within the periodicity tolerance.

mod boundary;
mod probe;
mod vessel;
mod waveio;
mod windkessel;

pub use boundary::{bifurcation_coupling, JunctionEnd, JunctionPressure, JunctionSolution};
pub use probe::{probe, resample_periodic, ProbeHistory, Waveforms};
pub use vessel::FaceState;
pub use waveio::{
    read_waveforms, write_waveforms, WAVEFORM_HEADER_LEN, WAVEFORM_MAGIC, WAVEFORM_VERSION,
};
pub use windkessel::{windkessel_advance, WindkesselStep};

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NetworkParameters, VesselId};
use boundary::{inlet_state, windkessel_outlet_state};
use vessel::Vessel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericsConfig {
    pub cells_per_vessel: usize,
    /// Minimum number of cells spanning a lesion; a stenosed vessel is
    /// refined beyond `cells_per_vessel` when needed.
    pub min_lesion_cells: usize,
    pub cfl_number: f64,
    pub max_cycles: usize,
    /// Relative L2 change between consecutive cycles at which the solution
    /// counts as periodic.
    pub periodicity_tolerance: f64,
    pub samples_per_cycle: usize,
    /// Largest accepted cycle mass-balance residual. A cycle must also meet
    /// this before it is returned, since the network volume still drifts
    /// while the Windkessels charge.
    pub mass_tolerance: f64,
    pub junction_pressure: JunctionPressure,
    /// Start from the periodic state of a lumped model of the network (all
    /// vessel compliance at one node feeding both RCR outlets) at `t = 0`,
    /// with the vessels at rest. Otherwise everything starts at
    /// `P_ext + P_d` with `A = A_d`.
    pub steady_start: bool,
    /// Upper bound on steps per cycle before the run is declared unstable.
    pub max_steps_per_cycle: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            cells_per_vessel: 32,
            min_lesion_cells: 8,
            cfl_number: 0.8,
            max_cycles: 20,
            periodicity_tolerance: 1e-3,
            samples_per_cycle: 128,
            mass_tolerance: 1e-3,
            junction_pressure: JunctionPressure::Static,
            steady_start: true,
            max_steps_per_cycle: 1_000_000,
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cells_per_vessel < 16 {
            return Err(Error::invalid("cells_per_vessel", "must be at least 16"));
        }
        if self.min_lesion_cells == 0 {
            return Err(Error::invalid("min_lesion_cells", "must be at least 1"));
        }
        if !(self.cfl_number > 0.0 && self.cfl_number <= 1.0) {
            return Err(Error::invalid("cfl_number", "must lie in (0, 1]"));
        }
        if !(self.periodicity_tolerance > 0.0) {
            return Err(Error::invalid("periodicity_tolerance", "must be > 0"));
        }
        if self.samples_per_cycle < 64 {
            return Err(Error::invalid("samples_per_cycle", "must be at least 64"));
        }
        if !(self.mass_tolerance > 0.0) {
            return Err(Error::invalid("mass_tolerance", "must be > 0"));
        }
        if self.max_cycles == 0 {
            return Err(Error::invalid("max_cycles", "must be at least 1"));
        }
        Ok(())
    }

    /// Cells used for `vessel` of `params`.
    pub fn cells_for(&self, params: &NetworkParameters, vessel: VesselId) -> usize {
        match params.stenosis_in(vessel) {
            Some(spec) => {
                let lesion = (self.min_lesion_cells as f64 / spec.length()).ceil() as usize;
                self.cells_per_vessel.max(lesion)
            }
            None => self.cells_per_vessel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub cycles_run: usize,
    /// Relative L2 change of the returned cycle against the previous one.
    pub periodicity_residual: f64,
    /// `|∮Q1 - ∮(Q2 + Q3)| / |∮Q1|` over the returned cycle (absolute when
    /// there is no net inflow).
    pub mass_balance_residual: f64,
    pub steps_per_cycle: usize,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub waveforms: Waveforms,
    pub diagnostics: Diagnostics,
    /// Raw probe record of the returned cycle.
    pub history: ProbeHistory,
}

#[derive(Debug, Clone)]
struct Network {
    params: NetworkParameters,
    vessels: [Vessel; 3],
    capacitor_pressure: [f64; 2],
    last_outflow: [f64; 2],
    last_faces: [FaceState; 4],
    time: f64,
}

enum CycleError {
    Courant { rate: f64 },
    Fatal(Error),
}

impl From<Error> for CycleError {
    fn from(e: Error) -> Self {
        CycleError::Fatal(e)
    }
}

impl Network {
    fn new(params: &NetworkParameters, numerics: &NumericsConfig) -> Result<Self> {
        let mut vessels = [
            Vessel::new(
                params,
                VesselId::Aorta,
                numerics.cells_for(params, VesselId::Aorta),
            )?,
            Vessel::new(
                params,
                VesselId::Iliac1,
                numerics.cells_for(params, VesselId::Iliac1),
            )?,
            Vessel::new(
                params,
                VesselId::Iliac2,
                numerics.cells_for(params, VesselId::Iliac2),
            )?,
        ];
        let p0 = params.external_pressure + params.diastolic_pressure;
        let mut capacitor_pressure = [p0, p0];
        let mut last_outflow = [0.0, 0.0];
        if numerics.steady_start {
            let start = lumped_start(params, &vessels);
            for v in &mut vessels {
                v.inflate(start.pressure);
            }
            capacitor_pressure = start.capacitor_pressure;
            last_outflow = start.outflow;
        }
        let last_faces = [
            FaceState {
                area: vessels[0].area[0],
                velocity: 0.0,
            },
            FaceState {
                area: vessels[0].area[vessels[0].cells - 1],
                velocity: 0.0,
            },
            FaceState {
                area: vessels[1].area[vessels[1].cells - 1],
                velocity: 0.0,
            },
            FaceState {
                area: vessels[2].area[vessels[2].cells - 1],
                velocity: 0.0,
            },
        ];
        Ok(Self {
            params: *params,
            vessels,
            capacitor_pressure,
            last_outflow,
            last_faces,
            time: 0.0,
        })
    }

    fn max_rate(&self) -> f64 {
        self.vessels
            .iter()
            .map(Vessel::max_rate)
            .fold(0.0, f64::max)
    }

    fn windkessel(&self, k: usize) -> &crate::model::WindkesselParams {
        if k == 0 {
            &self.params.windkessel_1
        } else {
            &self.params.windkessel_2
        }
    }

    fn run_cycle(
        &mut self,
        steps: usize,
        numerics: &NumericsConfig,
        courant_limit: f64,
    ) -> std::result::Result<(ProbeHistory, f64), CycleError> {
        let period = self.params.inlet.period;
        let dt = period / steps as f64;
        let cycle_start = self.time;
        let laws = [
            self.vessels[0].left_end(),
            self.vessels[1].right_end(),
            self.vessels[2].right_end(),
        ];
        let mut history = ProbeHistory::new(period, 0.5, laws, steps);
        let mut peak_rate: f64 = 0.0;

        for n in 0..steps {
            let t_half = cycle_start + (n as f64 + 0.5) * dt;
            let time = cycle_start + n as f64 * dt;
            let [aorta, iliac1, iliac2] = &mut self.vessels;

            let inlet_law = aorta.left_end();
            let inflow = self.params.inlet.flow(t_half);
            let w_in = aorta.incoming_from_left(dt);
            let inlet = inlet_state(&inlet_law, w_in, inflow, self.last_faces[0].area, t_half)?;

            let parent = JunctionEnd {
                law: aorta.right_end(),
                invariant: aorta.incoming_from_right(dt),
                guess: self.last_faces[1].area,
            };
            let d1 = JunctionEnd {
                law: iliac1.left_end(),
                invariant: iliac1.incoming_from_left(dt),
                guess: iliac1.area[0],
            };
            let d2 = JunctionEnd {
                law: iliac2.left_end(),
                invariant: iliac2.incoming_from_left(dt),
                guess: iliac2.area[0],
            };
            let junction = bifurcation_coupling(&parent, [&d1, &d2], numerics.junction_pressure)?;

            let mut outlets = [inlet; 2];
            for (k, vessel) in [&*iliac1, &*iliac2].into_iter().enumerate() {
                let wk = if k == 0 {
                    &self.params.windkessel_1
                } else {
                    &self.params.windkessel_2
                };
                // Capacitor pressure extrapolated to the half step.
                let pc = self.capacitor_pressure[k];
                let pc_half = pc
                    + 0.5
                        * dt
                        * (self.last_outflow[k]
                            - (pc - wk.outflow_pressure) / wk.distal_resistance)
                        / wk.compliance;
                outlets[k] = windkessel_outlet_state(
                    &vessel.right_end(),
                    vessel.incoming_from_right(dt),
                    wk.proximal_resistance,
                    pc_half,
                    self.last_faces[2 + k].area,
                    vessel.id.name(),
                    t_half,
                )?;
            }

            let c0 = aorta.step(dt, inlet, junction.parent, time)?;
            let c1 = iliac1.step(dt, junction.daughters[0], outlets[0], time)?;
            let c2 = iliac2.step(dt, junction.daughters[1], outlets[1], time)?;
            let courant = c0.max(c1).max(c2);
            peak_rate = peak_rate.max(courant / dt);
            if courant > courant_limit {
                return Err(CycleError::Courant { rate: courant / dt });
            }

            for k in 0..2 {
                let q = outlets[k].flow();
                let wk = *self.windkessel(k);
                self.capacitor_pressure[k] =
                    windkessel_advance(self.capacitor_pressure[k], q, &wk, dt).capacitor_pressure;
                self.last_outflow[k] = q;
            }
            self.last_faces = [inlet, junction.parent, outlets[0], outlets[1]];
            history.faces[0].push(inlet);
            history.faces[1].push(outlets[0]);
            history.faces[2].push(outlets[1]);
        }
        self.time = cycle_start + period;
        Ok((history, peak_rate))
    }
}

struct LumpedStart {
    pressure: f64,
    capacitor_pressure: [f64; 2],
    outflow: [f64; 2],
}

/// Periodic solution at `t = 0` of the lumped network: the vessel
/// compliance `C_v` at one node of pressure `P`, draining through the two
/// Windkessels. Per harmonic, `P = Z Q` with `1/Z = iωC_v + 1/Z_1 + 1/Z_2`
/// and `Z_k = R1 + R2 / (1 + iωR2C)`.
fn lumped_start(params: &NetworkParameters, vessels: &[Vessel; 3]) -> LumpedStart {
    let wk = [&params.windkessel_1, &params.windkessel_2];
    let mean_flow = params.inlet.mean_flow();
    let conductance = wk.map(|w| 1.0 / (w.proximal_resistance + w.distal_resistance));
    let total = conductance[0] + conductance[1];
    let out_p =
        (wk[0].outflow_pressure * conductance[0] + wk[1].outflow_pressure * conductance[1]) / total;
    let mean_pressure = out_p + mean_flow / total;
    let compliance: f64 = vessels.iter().map(|v| v.compliance(mean_pressure)).sum();

    let mut pressure = mean_pressure;
    let mut outflow = [0.0; 2];
    let mut capacitor_pressure = [0.0; 2];
    for k in 0..2 {
        outflow[k] = (mean_pressure - wk[k].outflow_pressure) * conductance[k];
        capacitor_pressure[k] = mean_pressure - wk[k].proximal_resistance * outflow[k];
    }
    let omega = params.inlet.angular_frequency();
    for n in 1..params.inlet.sine.len() {
        let w = omega * n as f64;
        let q = Complex::new(params.inlet.cosine[n], -params.inlet.sine[n]);
        let z = wk.map(|p| {
            Complex::new(p.proximal_resistance, 0.0)
                + Complex::new(p.distal_resistance, 0.0)
                    / Complex::new(1.0, w * p.distal_resistance * p.compliance)
        });
        let admittance = Complex::new(0.0, w * compliance) + z[0].inv() + z[1].inv();
        let p_n = q / admittance;
        pressure += p_n.re;
        for k in 0..2 {
            let q_k = p_n / z[k];
            outflow[k] += q_k.re;
            capacitor_pressure[k] += (p_n - q_k * wk[k].proximal_resistance).re;
        }
    }
    LumpedStart {
        pressure,
        capacitor_pressure,
        outflow,
    }
}

fn steps_for_rate(rate: f64, period: f64, cfl: f64) -> usize {
    // Rounded up to a multiple of 16 so small changes in the peak speed do
    // not alter the step count from cycle to cycle.
    let raw = (rate * period / cfl).ceil() as usize;
    raw.div_ceil(16).max(1) * 16
}

/// Simulates the network until the probe signals are periodic.
pub fn simulate(params: &NetworkParameters, numerics: &NumericsConfig) -> Result<Simulation> {
    params.validate()?;
    numerics.validate()?;
    let mut network = Network::new(params, numerics)?;
    let period = params.inlet.period;
    let courant_limit = (1.25 * numerics.cfl_number).min(1.0);

    // The initial state is at rest; pressurization raises the wave speed and
    // adds convection, hence the margin.
    let mut steps = steps_for_rate(1.5 * network.max_rate(), period, numerics.cfl_number);
    let mut previous: Option<Waveforms> = None;
    let mut residual = f64::INFINITY;

    for cycle in 1..=numerics.max_cycles {
        let snapshot = network.clone();
        let (history, peak_rate) = loop {
            if steps > numerics.max_steps_per_cycle {
                return Err(Error::InstabilityAtSeverity {
                    steps_per_cycle: steps,
                });
            }
            match network.run_cycle(steps, numerics, courant_limit) {
                Ok(result) => break result,
                Err(CycleError::Courant { rate }) => {
                    network = snapshot.clone();
                    steps = steps_for_rate(1.1 * rate, period, numerics.cfl_number).max(steps + 16);
                }
                Err(CycleError::Fatal(e)) => return Err(e),
            }
        };

        let waveforms = probe(&history, numerics.samples_per_cycle);
        if let Some(prev) = &previous {
            residual = waveforms.relative_difference(prev);
        }
        let [inflow, out1, out2] = history.cycle_volumes();
        let defect = (inflow - out1 - out2).abs();
        let mass_balance_residual = if inflow.abs() > 0.0 {
            defect / inflow.abs()
        } else {
            defect
        };
        if residual < numerics.periodicity_tolerance
            && mass_balance_residual < numerics.mass_tolerance
        {
            return Ok(Simulation {
                waveforms,
                diagnostics: Diagnostics {
                    cycles_run: cycle,
                    periodicity_residual: residual,
                    mass_balance_residual,
                    steps_per_cycle: steps,
                },
                history,
            });
        }
        previous = Some(waveforms);
        steps = steps.max(steps_for_rate(
            peak_rate * 1.05,
            period,
            numerics.cfl_number,
        ));
    }
    Err(Error::NonConvergence {
        cycles: numerics.max_cycles,
        residual,
    })
}
