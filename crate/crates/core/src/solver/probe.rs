use serde::{Deserialize, Serialize};

use super::vessel::{EndLaw, FaceState};

/// One cardiac cycle of pressure (Pa) and flow (m³/s) at the six probes,
/// uniformly sampled starting at the beginning of the cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveforms {
    pub period: f64,
    /// Aortic inlet.
    pub p1: Vec<f64>,
    pub q1: Vec<f64>,
    /// Outlet of the first iliac.
    pub p2: Vec<f64>,
    pub q2: Vec<f64>,
    /// Outlet of the second iliac.
    pub p3: Vec<f64>,
    pub q3: Vec<f64>,
}

impl Waveforms {
    pub fn samples(&self) -> usize {
        self.p1.len()
    }

    /// Signals in storage order `P1, Q1, P2, Q2, P3, Q3`.
    pub fn signals(&self) -> [&[f64]; 6] {
        [&self.p1, &self.q1, &self.p2, &self.q2, &self.p3, &self.q3]
    }

    pub fn is_consistent(&self) -> bool {
        let n = self.p1.len();
        self.period > 0.0 && self.signals().iter().all(|s| s.len() == n)
    }

    /// Largest relative L2 difference between corresponding signals. A pair
    /// of identically zero signals counts as no difference.
    pub fn relative_difference(&self, other: &Waveforms) -> f64 {
        self.signals()
            .iter()
            .zip(other.signals().iter())
            .map(|(a, b)| {
                let diff = l2(a.iter().zip(b.iter()).map(|(x, y)| x - y));
                let scale = l2(a.iter().copied());
                if diff == 0.0 {
                    0.0
                } else if scale == 0.0 {
                    f64::INFINITY
                } else {
                    diff / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

fn l2(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v * v).sum::<f64>().sqrt()
}

/// Linear interpolation of a periodic signal onto `target` uniform samples.
///
/// Source sample `i` sits at time `(i + offset) T / n`; target sample `k` at
/// `k T / target`.
pub fn resample_periodic(values: &[f64], offset: f64, target: usize) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return vec![0.0; target];
    }
    (0..target)
        .map(|k| {
            let s = (k as f64 * n as f64 / target as f64 - offset).rem_euclid(n as f64);
            let i0 = (s.floor() as usize).min(n - 1);
            let frac = s - i0 as f64;
            let i1 = (i0 + 1) % n;
            if frac == 0.0 {
                values[i0]
            } else {
                values[i0] * (1.0 - frac) + values[i1] * frac
            }
        })
        .collect()
}

/// Face states recorded at the three probe locations over one cycle.
#[derive(Debug, Clone)]
pub struct ProbeHistory {
    pub period: f64,
    /// Sample times as a fraction of the step, `t_i = (i + offset) dt`.
    pub offset: f64,
    pub(crate) laws: [EndLaw; 3],
    /// Inlet, iliac-1 outlet, iliac-2 outlet.
    pub faces: [Vec<FaceState>; 3],
}

impl ProbeHistory {
    pub(crate) fn new(period: f64, offset: f64, laws: [EndLaw; 3], capacity: usize) -> Self {
        Self {
            period,
            offset,
            laws,
            faces: std::array::from_fn(|_| Vec::with_capacity(capacity)),
        }
    }

    pub fn steps(&self) -> usize {
        self.faces[0].len()
    }

    /// Areas at each probe resampled onto the output grid.
    pub fn resampled_areas(&self, samples: usize) -> [Vec<f64>; 3] {
        std::array::from_fn(|k| {
            let raw: Vec<f64> = self.faces[k].iter().map(|f| f.area).collect();
            resample_periodic(&raw, self.offset, samples)
        })
    }

    /// Tube law at the probe faces.
    pub fn pressure_at(&self, probe: usize, area: f64) -> f64 {
        self.laws[probe].pressure(area)
    }

    /// Cycle integral of each probe flow, m³.
    pub fn cycle_volumes(&self) -> [f64; 3] {
        let dt = self.period / self.steps().max(1) as f64;
        std::array::from_fn(|k| self.faces[k].iter().map(FaceState::flow).sum::<f64>() * dt)
    }
}

/// Converts recorded face states into uniformly sampled waveforms: pressure
/// from the tube law applied to the resampled area, flow as `A U`.
pub fn probe(history: &ProbeHistory, samples: usize) -> Waveforms {
    let areas = history.resampled_areas(samples);
    let flows: [Vec<f64>; 3] = std::array::from_fn(|k| {
        let raw: Vec<f64> = history.faces[k].iter().map(FaceState::flow).collect();
        resample_periodic(&raw, history.offset, samples)
    });
    let pressures: [Vec<f64>; 3] = std::array::from_fn(|k| {
        areas[k]
            .iter()
            .map(|&a| history.pressure_at(k, a))
            .collect()
    });
    let [p1, p2, p3] = pressures;
    let [q1, q2, q3] = flows;
    Waveforms {
        period: history.period,
        p1,
        q1,
        p2,
        q2,
        p3,
        q3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resampling_on_the_same_grid_is_identity() {
        let v: Vec<f64> = (0..128)
            .map(|i| (i as f64 * 0.37).sin() * 1e4 + 3.0)
            .collect();
        assert_eq!(resample_periodic(&v, 0.0, 128), v);
    }

    #[test]
    fn resampling_is_exact_for_linear_segments_and_wraps() {
        let v = vec![0.0, 1.0, 2.0, 3.0];
        let r = resample_periodic(&v, 0.5, 4);
        // target k at source position k - 0.5; position -0.5 wraps to 3.5.
        assert_eq!(r, vec![1.5, 0.5, 1.5, 2.5]);
    }

    #[test]
    fn relative_difference_handles_zero_signals() {
        let z = vec![0.0; 4];
        let w = Waveforms {
            period: 1.0,
            p1: vec![1.0; 4],
            q1: z.clone(),
            p2: vec![1.0; 4],
            q2: z.clone(),
            p3: vec![1.0; 4],
            q3: z,
        };
        assert_eq!(w.relative_difference(&w.clone()), 0.0);
        let mut v = w.clone();
        v.p2[0] = 1.1;
        assert!((w.relative_difference(&v) - 0.05).abs() < 1e-12);
    }
}
