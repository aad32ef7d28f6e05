use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{check_dim, require_both_classes, ClassWeighting, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Rbf,
}

/// Kernel with its bandwidth resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                (-gamma * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub kernel: KernelKind,
    /// RBF bandwidth; `None` means `1 / n_features`.
    pub gamma: Option<f64>,
    /// Box constraint of the negative class; the positive class gets
    /// `c · w`.
    pub c: f64,
    /// Stop once the maximal KKT violation is below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Kernel matrix entries kept in the row cache.
    pub cache_entries: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Rbf,
            gamma: None,
            c: 1.0,
            tolerance: 1e-3,
            max_iterations: 1_000_000,
            cache_entries: 4_000_000,
        }
    }
}

impl SvmConfig {
    pub fn linear() -> Self {
        Self {
            kernel: KernelKind::Linear,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid("c", "must be positive and finite"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::invalid("gamma", "must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Soft-margin SVM stored by its support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub support_vectors: Vec<Vec<f64>>,
    pub support_labels: Vec<bool>,
    /// Dual coefficients `α_i`, each in `[0, c · weight(label)]`.
    pub dual: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub positive_weight: f64,
}

struct KernelRows<'a> {
    x: &'a Matrix,
    kernel: Kernel,
    rows: Vec<Option<Vec<f64>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a Matrix, kernel: Kernel, entries: usize) -> Self {
        let n = x.rows();
        Self {
            x,
            kernel,
            rows: vec![None; n],
            order: VecDeque::new(),
            capacity: (entries / n.max(1)).max(2),
        }
    }

    /// Computes row `i` if missing, never evicting row `keep`.
    fn load(&mut self, i: usize, keep: usize) {
        if self.rows[i].is_some() {
            return;
        }
        if self.order.len() >= self.capacity {
            if self.order.front() == Some(&keep) {
                self.order.rotate_left(1);
            }
            if let Some(old) = self.order.pop_front() {
                self.rows[old] = None;
            }
        }
        let xi = self.x.row(i);
        self.rows[i] = Some(
            self.x
                .iter_rows()
                .map(|xj| self.kernel.eval(xi, xj))
                .collect(),
        );
        self.order.push_back(i);
    }

    fn pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        self.load(i, j);
        self.load(j, i);
        (
            self.rows[i].as_deref().unwrap(),
            self.rows[j].as_deref().unwrap(),
        )
    }
}

/// Sequential minimal optimization with second-order working-set
/// selection on the dual
/// `min ½ Σ α_i α_j y_i y_j K_ij − Σ α_i`, `Σ y_i α_i = 0`, `0 ≤ α_i ≤ C_i`.
pub fn svm_train(
    x: &Matrix,
    y: &[bool],
    weighting: &ClassWeighting,
    config: &SvmConfig,
) -> Result<SvmModel> {
    config.validate()?;
    check_dim(x.rows(), y.len())?;
    require_both_classes(y)?;
    let kernel = match config.kernel {
        KernelKind::Linear => Kernel::Linear,
        KernelKind::Rbf => Kernel::Rbf {
            gamma: config.gamma.unwrap_or(1.0 / x.cols().max(1) as f64),
        },
    };
    let n = x.rows();
    let sign: Vec<f64> = y.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();
    let cap: Vec<f64> = y.iter().map(|&p| config.c * weighting.weight(p)).collect();
    let diag: Vec<f64> = x.iter_rows().map(|r| kernel.eval(r, r)).collect();
    let mut cache = KernelRows::new(x, kernel, config.cache_entries);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |t: usize, a: &[f64]| {
        if sign[t] > 0.0 {
            a[t] < cap[t]
        } else {
            a[t] > 0.0
        }
    };
    let low = |t: usize, a: &[f64]| {
        if sign[t] > 0.0 {
            a[t] > 0.0
        } else {
            a[t] < cap[t]
        }
    };

    let mut iterations = 0;
    loop {
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..n {
            if up(t, &alpha) && -sign[t] * grad[t] > g_max {
                g_max = -sign[t] * grad[t];
                i = t;
            }
        }
        let mut g_min = f64::INFINITY;
        let mut j = usize::MAX;
        if i != usize::MAX {
            cache.load(i, i);
            let ki = cache.rows[i].as_deref().unwrap();
            let mut best = f64::INFINITY;
            for t in 0..n {
                if !low(t, &alpha) {
                    continue;
                }
                let v = -sign[t] * grad[t];
                g_min = g_min.min(v);
                let b = g_max - v;
                if b > 0.0 {
                    let a = diag[i] + diag[t] - 2.0 * ki[t];
                    let obj = -b * b / if a > 0.0 { a } else { 1e-12 };
                    if obj < best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if j == usize::MAX || g_max - g_min < config.tolerance {
            break;
        }
        if iterations >= config.max_iterations {
            return Err(Error::SvmNonConvergence {
                iterations,
                max_violation: g_max - g_min,
            });
        }
        iterations += 1;

        let (ki, kj) = cache.pair(i, j);
        let quad = {
            let q = diag[i] + diag[j] - 2.0 * ki[j];
            if q > 0.0 {
                q
            } else {
                1e-12
            }
        };
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (ci, cj) = (cap[i], cap[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if sign[i] != sign[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = ((ai - old_i) * sign[i], (aj - old_j) * sign[j]);
        for t in 0..n {
            grad[t] += sign[t] * (ki[t] * di + kj[t] * dj);
        }
    }

    let (mut ub, mut lb, mut free_sum, mut free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = sign[t] * grad[t];
        if alpha[t] >= cap[t] {
            if sign[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if sign[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        0.5 * (ub + lb)
    };

    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(SvmModel {
        kernel,
        support_vectors: support.iter().map(|&t| x.row(t).to_vec()).collect(),
        support_labels: support.iter().map(|&t| y[t]).collect(),
        dual: support.iter().map(|&t| alpha[t]).collect(),
        bias: -rho,
        c: config.c,
        positive_weight: weighting.positive_weight,
    })
}

impl SvmModel {
    /// `Σ α_i y_i K(sv_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if let Some(sv) = self.support_vectors.first() {
            check_dim(sv.len(), x.len())?;
        }
        let s: f64 = self
            .support_vectors
            .iter()
            .zip(&self.support_labels)
            .zip(&self.dual)
            .map(|((sv, &p), a)| if p { *a } else { -a } * self.kernel.eval(sv, x))
            .sum();
        Ok(s + self.bias)
    }

    /// Positive class iff the decision value is non-negative.
    pub fn predict(&self, x: &[f64]) -> Result<bool> {
        Ok(self.decision(x)? >= 0.0)
    }

    /// Largest violation of the soft-margin optimality conditions over
    /// `(x, y)`, which should be the training set.
    pub fn kkt_violation(&self, x: &Matrix, y: &[bool]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (row, &p) in x.iter_rows().zip(y) {
            let margin = if p { 1.0 } else { -1.0 } * self.decision(row)?;
            let cap = self.c * if p { self.positive_weight } else { 1.0 };
            let alpha = self
                .support_vectors
                .iter()
                .position(|sv| sv.as_slice() == row)
                .map_or(0.0, |k| self.dual[k]);
            let v = if alpha <= 0.0 {
                (1.0 - margin).max(0.0)
            } else if alpha >= cap {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            };
            worst = worst.max(v);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rows(v: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(&v.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn four_point_maximum_margin() {
        let x = rows(&[[2.0, 0.0], [2.0, 2.0], [0.0, 0.0], [0.0, 2.0]]);
        let y = [true, true, false, false];
        let config = SvmConfig {
            c: 100.0,
            tolerance: 1e-9,
            ..SvmConfig::linear()
        };
        let m = svm_train(&x, &y, &ClassWeighting::UNIT, &config).unwrap();
        // The separator is x₁ = 1 with margin width 2, i.e. f(x) = x₁ - 1.
        for q in [[0.3, -4.0], [1.0, 1.0], [5.0, 0.5]] {
            assert!((m.decision(&q).unwrap() - (q[0] - 1.0)).abs() < 1e-6);
        }
        for r in x.iter_rows() {
            assert!((m.decision(r).unwrap().abs() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn symmetric_pair_has_zero_bias() {
        let x = rows(&[[1.0, 0.0], [-1.0, 0.0]]);
        for config in [SvmConfig::linear(), SvmConfig::default()] {
            let m = svm_train(&x, &[true, false], &ClassWeighting::UNIT, &config).unwrap();
            assert!(m.bias.abs() < 1e-12);
        }
    }

    #[test]
    fn xor_needs_the_rbf_kernel() {
        let x = rows(&[[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]]);
        let y = [true, true, false, false];
        let accuracy = |m: &SvmModel| {
            x.iter_rows()
                .zip(&y)
                .filter(|(r, &t)| m.predict(r).unwrap() == t)
                .count() as f64
                / 4.0
        };
        let linear = svm_train(&x, &y, &ClassWeighting::UNIT, &SvmConfig::linear()).unwrap();
        let rbf = svm_train(&x, &y, &ClassWeighting::UNIT, &SvmConfig::default()).unwrap();
        assert!(accuracy(&linear) <= 0.75);
        assert_eq!(accuracy(&rbf), 1.0);
    }

    fn noisy(seed: u64, n: usize) -> (Matrix, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let p = rng.random_bool(0.3);
            let shift = if p { 0.8 } else { -0.4 };
            data.extend((0..3).map(|_| rng.random_range(-1.0..1.0) + shift));
            y.push(p);
        }
        (Matrix::new(n, 3, data).unwrap(), y)
    }

    #[test]
    fn kkt_conditions_hold_at_convergence() {
        let (x, y) = noisy(3, 150);
        let w = ClassWeighting::from_ratio(1.0, &y).unwrap();
        for config in [SvmConfig::default(), SvmConfig::linear()] {
            let m = svm_train(&x, &y, &w, &config).unwrap();
            assert!(m.kkt_violation(&x, &y).unwrap() < 1e-3);
            for (a, &p) in m.dual.iter().zip(&m.support_labels) {
                assert!(*a > 0.0 && *a <= config.c * w.weight(p));
            }
        }
    }

    #[test]
    fn duplicated_points_leave_a_hard_margin_unchanged() {
        let x = rows(&[
            [2.0, 0.5],
            [3.0, 2.0],
            [2.5, -1.0],
            [0.0, 0.0],
            [-1.0, 2.0],
            [0.5, 1.5],
        ]);
        let y = [true, true, true, false, false, false];
        let config = SvmConfig {
            c: 1e3,
            tolerance: 1e-8,
            gamma: Some(0.3),
            ..Default::default()
        };
        let once = svm_train(&x, &y, &ClassWeighting::UNIT, &config).unwrap();
        let doubled_rows: Vec<Vec<f64>> = x
            .iter_rows()
            .chain(x.iter_rows())
            .map(<[f64]>::to_vec)
            .collect();
        let doubled_y: Vec<bool> = y.iter().chain(&y).copied().collect();
        let twice = svm_train(
            &Matrix::from_rows(&doubled_rows).unwrap(),
            &doubled_y,
            &ClassWeighting::UNIT,
            &config,
        )
        .unwrap();
        assert!(once.dual.iter().all(|&a| a < config.c));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let q = [rng.random_range(-2.0..4.0), rng.random_range(-2.0..3.0)];
            assert!((once.decision(&q).unwrap() - twice.decision(&q).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_feature_does_not_move_rbf_scores() {
        let (x, y) = noisy(8, 60);
        let padded: Vec<Vec<f64>> = x.iter_rows().map(|r| [r, &[7.5]].concat()).collect();
        let config = SvmConfig {
            gamma: Some(0.4),
            tolerance: 1e-8,
            ..Default::default()
        };
        let a = svm_train(&x, &y, &ClassWeighting::UNIT, &config).unwrap();
        let b = svm_train(
            &Matrix::from_rows(&padded).unwrap(),
            &y,
            &ClassWeighting::UNIT,
            &config,
        )
        .unwrap();
        for (r, p) in x.iter_rows().zip(&padded) {
            assert!((a.decision(r).unwrap() - b.decision(p).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn decision_uses_only_the_stored_support_vectors() {
        let (x, y) = noisy(5, 80);
        let m = svm_train(&x, &y, &ClassWeighting::UNIT, &SvmConfig::default()).unwrap();
        let copy: SvmModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        for r in x.iter_rows() {
            assert_eq!(
                m.decision(r).unwrap().to_bits(),
                copy.decision(r).unwrap().to_bits()
            );
        }
        assert!(m.support_vectors.len() < x.rows());
    }

    #[test]
    fn iteration_cap_reports_violation() {
        let (x, y) = noisy(6, 100);
        let config = SvmConfig {
            max_iterations: 3,
            ..Default::default()
        };
        let err = svm_train(&x, &y, &ClassWeighting::UNIT, &config).unwrap_err();
        assert!(
            matches!(err, Error::SvmNonConvergence { iterations: 3, .. }),
            "{err}"
        );
    }
}
