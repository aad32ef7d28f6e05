//! Least-squares fit of a truncated Fourier series to one period of a
//! uniformly sampled signal.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Harmonics kept in the feature representation.
pub const FOURIER_ORDER: usize = 5;
/// Coefficients per signal, `b_0, a_1, b_1, ..., a_N, b_N`.
pub const COEFFICIENTS_PER_SIGNAL: usize = 2 * FOURIER_ORDER + 1;

/// Coefficients in the order `b_0, a_1, b_1, ..., a_N, b_N` where `a_n`
/// multiplies `sin(nωt)` and `b_n` multiplies `cos(nωt)`, plus the relative
/// L2 error of the reconstruction at the sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierFit {
    pub coefficients: Vec<f64>,
    pub relative_error: f64,
}

fn basis(order: usize, phase: f64) -> impl Iterator<Item = f64> {
    std::iter::once(1.0).chain((1..=order).flat_map(move |n| {
        let x = n as f64 * phase;
        [x.sin(), x.cos()]
    }))
}

/// Evaluates the series at `samples` uniform points over one period.
pub fn synthesize(coefficients: &[f64], samples: usize) -> Vec<f64> {
    let order = (coefficients.len() - 1) / 2;
    (0..samples)
        .map(|k| {
            let phase = std::f64::consts::TAU * k as f64 / samples as f64;
            basis(order, phase)
                .zip(coefficients)
                .map(|(b, c)| b * c)
                .sum()
        })
        .collect()
}

/// Fits an order-`order` series to `signal`, whose samples sit at
/// `t_k = k T / n`.
pub fn fit_fourier(signal: &[f64], order: usize) -> Result<FourierFit> {
    let n = signal.len();
    let m = 2 * order + 1;
    if n < m {
        return Err(Error::DegenerateSampling {
            samples: n,
            coefficients: m,
        });
    }
    let design = DMatrix::from_fn(n, m, |k, j| {
        let phase = std::f64::consts::TAU * k as f64 / n as f64;
        match j {
            0 => 1.0,
            _ => {
                let h = j.div_ceil(2) as f64;
                if j % 2 == 1 {
                    (h * phase).sin()
                } else {
                    (h * phase).cos()
                }
            }
        }
    });
    let rhs = DVector::from_column_slice(signal);
    let coefficients = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|_| Error::DegenerateSampling {
            samples: n,
            coefficients: m,
        })?;
    let residual = &design * &coefficients - &rhs;
    let scale = rhs.norm();
    let relative_error = if scale > 0.0 {
        residual.norm() / scale
    } else {
        residual.norm()
    };
    Ok(FourierFit {
        coefficients: coefficients.iter().copied().collect(),
        relative_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_signal() {
        let fit = fit_fourier(&[3.5; 128], FOURIER_ORDER).unwrap();
        assert!((fit.coefficients[0] - 3.5).abs() < 1e-12);
        assert!(fit.coefficients[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn single_sine() {
        let s: Vec<f64> = (0..128)
            .map(|k| (std::f64::consts::TAU * k as f64 / 128.0).sin())
            .collect();
        let fit = fit_fourier(&s, FOURIER_ORDER).unwrap();
        for (j, c) in fit.coefficients.iter().enumerate() {
            let expected = if j == 1 { 1.0 } else { 0.0 };
            assert!((c - expected).abs() < 1e-10, "{j}: {c}");
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            fit_fourier(&[1.0; 10], 5),
            Err(Error::DegenerateSampling {
                samples: 10,
                coefficients: 11
            })
        ));
    }

    proptest! {
        #[test]
        fn round_trip_recovers_coefficients(c in prop::collection::vec(-10.0f64..10.0, COEFFICIENTS_PER_SIGNAL)) {
            let fit = fit_fourier(&synthesize(&c, 128), FOURIER_ORDER).unwrap();
            for (a, b) in fit.coefficients.iter().zip(&c) {
                prop_assert!((a - b).abs() < 1e-8);
            }
            prop_assert!(fit.relative_error < 1e-10);
        }
    }
}
