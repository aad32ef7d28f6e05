use crate::model::WindkesselParams;

/// Result of advancing an RCR outlet by one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindkesselStep {
    /// Pressure across the compliance, Pa.
    pub capacitor_pressure: f64,
    /// Pressure seen by the 1D domain, `Q R1 + P_c`, Pa.
    pub boundary_pressure: f64,
}

/// Advances `dP_c/dt = (Q - (P_c - P_out)/R2) / C` over `dt` with the
/// trapezoidal rule, holding the inflow `Q` fixed over the step.
pub fn windkessel_advance(
    capacitor_pressure: f64,
    inflow: f64,
    params: &WindkesselParams,
    dt: f64,
) -> WindkesselStep {
    let WindkesselParams {
        proximal_resistance,
        distal_resistance,
        compliance,
        outflow_pressure,
    } = *params;
    let k = dt / (2.0 * distal_resistance * compliance);
    let pc = (capacitor_pressure * (1.0 - k)
        + dt / compliance * (inflow + outflow_pressure / distal_resistance))
        / (1.0 + k);
    WindkesselStep {
        capacitor_pressure: pc,
        boundary_pressure: inflow * proximal_resistance + pc,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> WindkesselParams {
        WindkesselParams::new(6.81e7, 3.10e9, 3.67e-10, 1_000.0).unwrap()
    }

    fn exact(pc0: f64, q: f64, w: &WindkesselParams, t: f64) -> f64 {
        let target = w.outflow_pressure + q * w.distal_resistance;
        target + (pc0 - target) * (-t / w.time_constant()).exp()
    }

    #[test]
    fn zero_flow_decays_toward_outflow_pressure() {
        let w = params();
        let (dt, mut pc) = (1e-3, 12_000.0);
        for _ in 0..2000 {
            pc = windkessel_advance(pc, 0.0, &w, dt).capacitor_pressure;
        }
        let expected = exact(12_000.0, 0.0, &w, 2.0);
        assert!((pc - expected).abs() < 1e-3, "{pc} vs {expected}");
        assert!(pc > w.outflow_pressure);
    }

    #[test]
    fn constant_flow_reaches_resistive_steady_state() {
        let w = params();
        let q = 8e-6;
        let mut step = windkessel_advance(0.0, q, &w, 1e-2);
        for _ in 0..5000 {
            step = windkessel_advance(step.capacitor_pressure, q, &w, 1e-2);
        }
        let expected = w.steady_pressure(q);
        assert!((step.boundary_pressure - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn single_step_error_is_third_order() {
        // Local error of a second-order integrator shrinks ~8x per halving.
        let w = params();
        let (pc0, q) = (9_000.0, 1e-5);
        let err = |dt: f64| {
            (windkessel_advance(pc0, q, &w, dt).capacitor_pressure - exact(pc0, q, &w, dt)).abs()
        };
        let (e1, e2, e3) = (err(0.2), err(0.1), err(0.05));
        let (r1, r2) = (e1 / e2, e2 / e3);
        assert!(
            (r1 - 8.0).abs() < 0.8 && (r2 - 8.0).abs() < 0.8,
            "{r1} {r2}"
        );
    }

    #[test]
    fn fixed_point_is_exact() {
        let w = params();
        let p = w.outflow_pressure;
        let step = windkessel_advance(p, 0.0, &w, 1e-4);
        assert!((step.capacitor_pressure - p).abs() < 1e-9);
    }
}
