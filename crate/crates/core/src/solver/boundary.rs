//! Characteristic boundary conditions: prescribed inflow at the aortic
//! inlet, RCR Windkessel outlets and the three-way bifurcation.

use serde::{Deserialize, Serialize};

use super::vessel::{EndLaw, FaceState};
use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-13;
const MAX_NEWTON: usize = 60;

/// Pressure continuity condition at the bifurcation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JunctionPressure {
    /// Static pressure is continuous.
    #[default]
    Static,
    /// Total pressure `P + ρU²/2` is continuous.
    Total,
}

fn scalar_newton(
    mut area: f64,
    vessel: &str,
    time: f64,
    f: impl Fn(f64) -> (f64, f64),
) -> Result<f64> {
    for _ in 0..MAX_NEWTON {
        let (value, slope) = f(area);
        let mut next = area - value / slope;
        if !next.is_finite() {
            break;
        }
        if next <= 0.0 {
            next = 0.5 * area;
        }
        let converged = (next - area).abs() <= NEWTON_TOL * area;
        area = next;
        if converged {
            return Ok(area);
        }
    }
    Err(Error::NumericalBlowup {
        vessel: vessel.to_string(),
        time,
    })
}

/// Face state at an inlet with prescribed volumetric flow, given the
/// outgoing invariant `U - 4c` arriving from the interior.
pub(crate) fn inlet_state(
    law: &EndLaw,
    outgoing: f64,
    flow: f64,
    guess: f64,
    time: f64,
) -> Result<FaceState> {
    let area = scalar_newton(guess, "aorta inlet", time, |a| {
        let c = law.wave_speed(a);
        (a * (outgoing + 4.0 * c) - flow, outgoing + 5.0 * c)
    })?;
    Ok(FaceState {
        area,
        velocity: outgoing + 4.0 * law.wave_speed(area),
    })
}

/// Face state at an outlet closed by `P = Q R1 + P_c`, given the outgoing
/// invariant `U + 4c` arriving from the interior.
pub(crate) fn windkessel_outlet_state(
    law: &EndLaw,
    outgoing: f64,
    proximal_resistance: f64,
    capacitor_pressure: f64,
    guess: f64,
    vessel: &str,
    time: f64,
) -> Result<FaceState> {
    let area = scalar_newton(guess, vessel, time, |a| {
        let c = law.wave_speed(a);
        let q = a * (outgoing - 4.0 * c);
        (
            law.pressure(a) - capacitor_pressure - proximal_resistance * q,
            law.dpressure(a) - proximal_resistance * (outgoing - 5.0 * c),
        )
    })?;
    Ok(FaceState {
        area,
        velocity: outgoing - 4.0 * law.wave_speed(area),
    })
}

/// One vessel end meeting the junction.
#[derive(Debug, Clone, Copy)]
pub struct JunctionEnd {
    pub(crate) law: EndLaw,
    /// Riemann invariant arriving from the vessel interior: `U + 4c` for the
    /// parent, `U - 4c` for daughters.
    pub invariant: f64,
    /// Initial guess for the face area.
    pub guess: f64,
}

impl JunctionEnd {
    #[inline]
    fn velocity(&self, area: f64, sign: f64) -> f64 {
        self.invariant - sign * 4.0 * self.law.wave_speed(area)
    }
}

/// Face states returned by [`bifurcation_coupling`].
#[derive(Debug, Clone, Copy)]
pub struct JunctionSolution {
    pub parent: FaceState,
    pub daughters: [FaceState; 2],
    pub iterations: usize,
}

impl JunctionSolution {
    /// `Q_parent - Q_1 - Q_2`.
    pub fn mass_defect(&self) -> f64 {
        self.parent.flow() - self.daughters[0].flow() - self.daughters[1].flow()
    }
}

/// Solves for the face states at a bifurcation: mass conservation, pressure
/// continuity and the three incoming characteristics, by damped Newton
/// iteration on the three face areas.
pub fn bifurcation_coupling(
    parent: &JunctionEnd,
    daughters: [&JunctionEnd; 2],
    pressure: JunctionPressure,
) -> Result<JunctionSolution> {
    // Parent invariant is forward (+), daughters' backward (-).
    let ends = [parent, daughters[0], daughters[1]];
    let signs = [1.0, -1.0, -1.0];
    let total = pressure == JunctionPressure::Total;
    let density = parent.law.density;

    let residual = |areas: &[f64; 3]| -> ([f64; 3], [[f64; 3]; 3]) {
        let mut q = [0.0; 3];
        let mut dq = [0.0; 3];
        let mut p = [0.0; 3];
        let mut dp = [0.0; 3];
        for k in 0..3 {
            let a = areas[k];
            let c = ends[k].law.wave_speed(a);
            let u = ends[k].velocity(a, signs[k]);
            // dU/dA = -sign * c / A
            let du = -signs[k] * c / a;
            q[k] = a * u;
            dq[k] = u + a * du;
            p[k] = ends[k].law.pressure(a);
            dp[k] = ends[k].law.dpressure(a);
            if total {
                p[k] += 0.5 * density * u * u;
                dp[k] += density * u * du;
            }
        }
        let g = [q[0] - q[1] - q[2], p[0] - p[1], p[0] - p[2]];
        let jac = [
            [dq[0], -dq[1], -dq[2]],
            [dp[0], -dp[1], 0.0],
            [dp[0], 0.0, -dp[2]],
        ];
        (g, jac)
    };

    // Scales that make the three equations comparable.
    let flow_scale = parent.guess * parent.law.wave_speed(parent.guess);
    let pressure_scale = parent.law.law.stiffness / parent.law.diastolic_area.sqrt();
    let norm = |g: &[f64; 3]| {
        (g[0] / flow_scale)
            .abs()
            .max((g[1] / pressure_scale).abs())
            .max((g[2] / pressure_scale).abs())
    };

    let mut areas = [parent.guess, daughters[0].guess, daughters[1].guess];
    let (mut g, mut jac) = residual(&areas);
    let mut current = norm(&g);
    for iteration in 0..MAX_NEWTON {
        if current <= NEWTON_TOL {
            return Ok(solution(&ends, &signs, areas, iteration));
        }
        let Some(delta) = solve3(&jac, &g) else {
            break;
        };
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = [
                areas[0] - damping * delta[0],
                areas[1] - damping * delta[1],
                areas[2] - damping * delta[2],
            ];
            if trial.iter().all(|&a| a > 0.0 && a.is_finite()) {
                let (tg, tj) = residual(&trial);
                let trial_norm = norm(&tg);
                if trial_norm < current || trial_norm <= NEWTON_TOL {
                    areas = trial;
                    g = tg;
                    jac = tj;
                    current = trial_norm;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            // Residual can no longer decrease: at the rounding floor.
            if current <= 1e3 * NEWTON_TOL {
                return Ok(solution(&ends, &signs, areas, iteration + 1));
            }
            return Err(Error::JunctionSolve {
                iterations: iteration + 1,
                residual: current,
            });
        }
    }
    if current <= 1e3 * NEWTON_TOL {
        return Ok(solution(&ends, &signs, areas, MAX_NEWTON));
    }
    Err(Error::JunctionSolve {
        iterations: MAX_NEWTON,
        residual: current,
    })
}

fn solution(
    ends: &[&JunctionEnd; 3],
    signs: &[f64; 3],
    areas: [f64; 3],
    iterations: usize,
) -> JunctionSolution {
    let face = |k: usize| FaceState {
        area: areas[k],
        velocity: ends[k].velocity(areas[k], signs[k]),
    };
    JunctionSolution {
        parent: face(0),
        daughters: [face(1), face(2)],
        iterations,
    }
}

/// Gaussian elimination with partial pivoting for a 3×3 system.
fn solve3(matrix: &[[f64; 3]; 3], rhs: &[f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for r in 0..3 {
        m[r][..3].copy_from_slice(&matrix[r]);
        m[r][3] = rhs[r];
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col] == 0.0 || !m[pivot][col].is_finite() {
            return None;
        }
        m.swap(col, pivot);
        for r in col + 1..3 {
            let factor = m[r][col] / m[col][col];
            for c in col..4 {
                m[r][c] -= factor * m[col][c];
            }
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let mut s = m[r][3];
        for c in r + 1..3 {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TubeLaw;

    fn law(stiffness: f64, ad: f64) -> EndLaw {
        EndLaw {
            law: TubeLaw {
                stiffness,
                external_pressure: 0.0,
                diastolic_pressure: 10_000.0,
            },
            diastolic_area: ad,
            density: 1060.0,
        }
    }

    #[test]
    fn inlet_matches_prescribed_flow() {
        let l = law(1217.0, 2.32e-4);
        let w2 = 0.1 - 4.0 * l.wave_speed(2.4e-4);
        let s = inlet_state(&l, w2, 3e-5, 2.32e-4, 0.0).unwrap();
        assert!((s.flow() - 3e-5).abs() < 1e-17);
        assert!((s.velocity - 4.0 * l.wave_speed(s.area) - w2).abs() < 1e-12);
    }

    #[test]
    fn outlet_satisfies_windkessel_relation() {
        let l = law(1191.0, 1.13e-4);
        let w1 = 0.2 + 4.0 * l.wave_speed(1.2e-4);
        let (r1, pc) = (6.81e7, 11_000.0);
        let s = windkessel_outlet_state(&l, w1, r1, pc, 1.13e-4, "iliac1", 0.0).unwrap();
        assert!((l.pressure(s.area) - (pc + r1 * s.flow())).abs() < 1e-7);
    }

    fn symmetric_ends(
        parent_area: f64,
        daughter_area: f64,
    ) -> (JunctionEnd, JunctionEnd, JunctionEnd) {
        let p = law(1217.0, 2.32e-4);
        let d = law(1191.0, 1.13e-4);
        let parent = JunctionEnd {
            law: p,
            invariant: 0.3 + 4.0 * p.wave_speed(parent_area),
            guess: parent_area,
        };
        let daughter = JunctionEnd {
            law: d,
            invariant: 0.25 - 4.0 * d.wave_speed(daughter_area),
            guess: daughter_area,
        };
        (parent, daughter, daughter)
    }

    #[test]
    fn symmetric_daughters_share_flow_equally() {
        let (p, d1, d2) = symmetric_ends(2.4e-4, 1.15e-4);
        let s = bifurcation_coupling(&p, [&d1, &d2], JunctionPressure::Static).unwrap();
        assert_eq!(s.daughters[0].flow(), s.daughters[1].flow());
        assert!(s.mass_defect().abs() < 1e-12 * s.parent.flow().abs());
        let total = bifurcation_coupling(&p, [&d1, &d2], JunctionPressure::Total).unwrap();
        assert!(total.mass_defect().abs() < 1e-12 * total.parent.flow().abs());
    }

    #[test]
    fn consistent_state_is_a_fixed_point() {
        // Manufacture face states that already satisfy the junction
        // equations, then check the solve returns them unchanged.
        let p = law(1217.0, 2.32e-4);
        let d1 = law(1191.0, 1.13e-4);
        let d2 = law(1100.0, 1.05e-4);
        let pressure = 12_500.0;
        let areas = [
            p.law.area(pressure, p.diastolic_area),
            d1.law.area(pressure, d1.diastolic_area),
            d2.law.area(pressure, d2.diastolic_area),
        ];
        let (u1, u2) = (0.21, 0.17);
        let u0 = (areas[1] * u1 + areas[2] * u2) / areas[0];
        let parent = JunctionEnd {
            law: p,
            invariant: u0 + 4.0 * p.wave_speed(areas[0]),
            guess: areas[0],
        };
        let a = JunctionEnd {
            law: d1,
            invariant: u1 - 4.0 * d1.wave_speed(areas[1]),
            guess: areas[1],
        };
        let b = JunctionEnd {
            law: d2,
            invariant: u2 - 4.0 * d2.wave_speed(areas[2]),
            guess: areas[2],
        };
        let s = bifurcation_coupling(&parent, [&a, &b], JunctionPressure::Static).unwrap();
        assert!(s.iterations <= 1);
        assert!((s.parent.area - areas[0]).abs() < 1e-12 * areas[0]);
        assert!((s.daughters[0].velocity - u1).abs() < 1e-9);
        assert!((s.daughters[1].velocity - u2).abs() < 1e-9);
    }

    #[test]
    fn converges_from_a_poor_guess() {
        let (mut p, mut d1, d2) = symmetric_ends(2.4e-4, 1.15e-4);
        p.guess *= 1.5;
        d1.guess *= 0.6;
        let s = bifurcation_coupling(&p, [&d1, &d2], JunctionPressure::Static).unwrap();
        let pp = p.law.pressure(s.parent.area);
        assert!((pp - d1.law.pressure(s.daughters[0].area)).abs() < 1e-6);
        assert!((pp - d2.law.pressure(s.daughters[1].area)).abs() < 1e-6);
        assert!(s.mass_defect().abs() < 1e-15);
    }
}
