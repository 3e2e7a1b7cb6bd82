use crate::error::{Error, Result};
use crate::image::ImagePlane;
use crate::linalg::{dot, norm_sq};
use crate::prng::Prng;

use super::ToyFeatureExtractor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskLoss {
    /// `|z - y|`, Lipschitz with `L = 1`.
    Absolute,
    /// `(z - y)^2`; `L` is taken per instance on the segment between the two logits.
    Squared,
}

/// Scalar task: linear head `z = <h, f> + b` followed by a loss against label `y`.
#[derive(Clone, Debug)]
pub struct LipschitzTask {
    head: Vec<f64>,
    bias: f64,
    loss: TaskLoss,
    label: f64,
    head_norm: f64,
}

/// Result of one evaluation of the task-consistency bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzCheck {
    pub consistency_loss: f64,
    pub bound: f64,
    pub head_norm: f64,
    pub loss_lipschitz: f64,
    pub feature_distance: f64,
}

impl LipschitzTask {
    pub fn new(head: Vec<f64>, bias: f64, loss: TaskLoss, label: f64) -> Result<Self> {
        if head.is_empty() || head.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("head must be a non-empty finite vector"));
        }
        let head_norm = norm_sq(&head).sqrt();
        Ok(LipschitzTask { head, bias, loss, label, head_norm })
    }

    /// Gaussian head with unit-variance entries scaled by `1/sqrt(n_f)`.
    pub fn random(n_f: usize, loss: TaskLoss, rng: &mut Prng) -> Result<Self> {
        let scale = 1.0 / (n_f.max(1) as f64).sqrt();
        let head = (0..n_f).map(|_| rng.normal() * scale).collect();
        let bias = rng.normal();
        let label = rng.normal();
        Self::new(head, bias, loss, label)
    }

    /// Operator norm `H` of the head (its Euclidean norm).
    pub fn head_norm(&self) -> f64 {
        self.head_norm
    }

    pub fn loss(&self) -> TaskLoss {
        self.loss
    }

    /// Same task with the head multiplied by `factor`.
    pub fn scaled_head(&self, factor: f64) -> Result<Self> {
        Self::new(self.head.iter().map(|v| v * factor).collect(), self.bias * factor, self.loss, self.label)
    }

    pub fn logit(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.head.len() {
            return Err(Error::domain("feature length does not match head"));
        }
        Ok(dot(&self.head, features) + self.bias)
    }

    pub fn task_loss(&self, z: f64) -> f64 {
        match self.loss {
            TaskLoss::Absolute => (z - self.label).abs(),
            TaskLoss::Squared => (z - self.label).powi(2),
        }
    }

    /// Lipschitz constant of the loss on the interval spanned by two logits.
    pub fn loss_lipschitz(&self, z0: f64, z1: f64) -> f64 {
        match self.loss {
            TaskLoss::Absolute => 1.0,
            TaskLoss::Squared => 2.0 * (z0 - self.label).abs().max((z1 - self.label).abs()),
        }
    }
}

/// Evaluates the task-consistency loss `(l(f(x_hat)) - l(f(x)))^2` and the
/// bound `H^2 L^2 ||f(x_hat) - f(x)||^2`. Fails if the bound is violated.
pub fn lipschitz_bound_check(
    task: &LipschitzTask,
    fe: &ToyFeatureExtractor,
    x: &ImagePlane,
    x_hat: &ImagePlane,
) -> Result<LipschitzCheck> {
    let f0 = fe.features(x)?;
    let f1 = fe.features(x_hat)?;
    let z0 = task.logit(&f0)?;
    let z1 = task.logit(&f1)?;
    let consistency_loss = (task.task_loss(z1) - task.task_loss(z0)).powi(2);
    let fd: f64 = f0.iter().zip(&f1).map(|(a, b)| (a - b) * (a - b)).sum();
    let l = task.loss_lipschitz(z0, z1);
    let bound = task.head_norm.powi(2) * l * l * fd;
    // slack for rounding in the two independent evaluations
    let slack = 1e-9 * (1.0 + bound);
    if consistency_loss > bound + slack {
        return Err(Error::domain(format!(
            "task-consistency bound violated: {consistency_loss} > {bound}"
        )));
    }
    Ok(LipschitzCheck {
        consistency_loss,
        bound,
        head_norm: task.head_norm,
        loss_lipschitz: l,
        feature_distance: fd,
    })
}
