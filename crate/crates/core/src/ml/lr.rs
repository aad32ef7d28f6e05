use serde::{Deserialize, Serialize};

use super::{check_dim, require_both_classes, ClassWeighting, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// Reject steps that increase the loss: drop the velocity and halve
    /// the step until the loss does not increase.
    pub monotone: bool,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            momentum: 0.9,
            epochs: 500,
            monotone: true,
        }
    }
}

impl LrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(
                "learning_rate",
                "must be positive and finite",
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Logistic regression weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Training loss before the first epoch and after each accepted epoch.
    pub loss_history: Vec<f64>,
}

pub const PROBABILITY_EPSILON: f64 = 1e-15;

/// `1/(1+e^{-z})` without overflow for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1+e^z)`.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `C1` iff `p ≥ boundary`.
pub fn decide(p: f64, boundary: f64) -> bool {
    p >= boundary
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Weighted mean log loss and its gradient; `theta` holds the feature
/// weights followed by the bias.
fn loss_and_gradient(theta: &[f64], x: &Matrix, y: &[bool], w: f64) -> (f64, Vec<f64>) {
    let d = x.cols();
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (row, &positive) in x.iter_rows().zip(y) {
        let z = dot(&theta[..d], row) + theta[d];
        let h = sigmoid(z);
        let dz = if positive {
            loss += w * softplus(-z);
            w * (h - 1.0)
        } else {
            loss += softplus(z);
            h
        };
        for (g, xi) in grad[..d].iter_mut().zip(row) {
            *g += dz * xi;
        }
        grad[d] += dz;
    }
    let m = x.rows() as f64;
    grad.iter_mut().for_each(|g| *g /= m);
    (loss / m, grad)
}

/// `-(1/m) Σ [w τ ln h + (1-τ) ln(1-h)]` with `h = sigmoid(θᵀx + b)`.
pub fn weighted_log_loss(theta: &[f64], x: &Matrix, y: &[bool], w: f64) -> Result<f64> {
    check_dim(x.cols() + 1, theta.len())?;
    Ok(loss_and_gradient(theta, x, y, w).0)
}

pub fn log_loss_gradient(theta: &[f64], x: &Matrix, y: &[bool], w: f64) -> Result<Vec<f64>> {
    check_dim(x.cols() + 1, theta.len())?;
    Ok(loss_and_gradient(theta, x, y, w).1)
}

/// Full-batch gradient descent with momentum from zero weights.
pub fn lr_train(
    x: &Matrix,
    y: &[bool],
    weighting: &ClassWeighting,
    config: &LrConfig,
) -> Result<LinearModel> {
    config.validate()?;
    check_dim(x.rows(), y.len())?;
    require_both_classes(y)?;
    let w = weighting.positive_weight;
    let d = x.cols();
    let mut theta = vec![0.0; d + 1];
    let mut velocity = vec![0.0; d + 1];
    let mut step = config.learning_rate;
    let (mut loss, mut grad) = loss_and_gradient(&theta, x, y, w);
    let mut history = vec![loss];

    'epochs: for epoch in 0..config.epochs {
        let mut trial: Vec<f64> = (0..=d)
            .map(|k| {
                velocity[k] = config.momentum * velocity[k] - step * grad[k];
                theta[k] + velocity[k]
            })
            .collect();
        let (mut trial_loss, mut trial_grad) = loss_and_gradient(&trial, x, y, w);
        if !trial_loss.is_finite() && !config.monotone {
            return Err(Error::Divergence { iteration: epoch });
        }
        if config.monotone && !(trial_loss <= loss) {
            velocity.iter_mut().for_each(|v| *v = 0.0);
            let mut accepted = false;
            for _ in 0..60 {
                trial = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
                (trial_loss, trial_grad) = loss_and_gradient(&trial, x, y, w);
                if trial_loss <= loss {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break 'epochs;
            }
        }
        if !trial_loss.is_finite() {
            return Err(Error::Divergence { iteration: epoch });
        }
        theta = trial;
        loss = trial_loss;
        grad = trial_grad;
        history.push(loss);
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Divergence {
            iteration: history.len(),
        });
    }
    let bias = theta.pop().unwrap_or_default();
    Ok(LinearModel {
        weights: theta,
        bias,
        loss_history: history,
    })
}

impl LinearModel {
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x.len())?;
        Ok(dot(&self.weights, x) + self.bias)
    }

    /// Probability of the positive class, kept inside
    /// `[PROBABILITY_EPSILON, 1 - PROBABILITY_EPSILON]` so that saturated
    /// scores still compare below a boundary of one.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.score(x)?).clamp(PROBABILITY_EPSILON, 1.0 - PROBABILITY_EPSILON))
    }

    pub fn predict(&self, x: &[f64], boundary: f64) -> Result<bool> {
        Ok(decide(self.predict_proba(x)?, boundary))
    }
}
