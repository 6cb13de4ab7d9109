//! Weighted, L2-regularized binary logistic regression.
//!
//! The objective is
//!
//! ```text
//! Obj(theta, b) = 0.5 * ||theta||^2
//!               + C * sum_i w_i * ( -l_i * ln s(z_i) - (1 - l_i) * ln(1 - s(z_i)) )
//! z_i = theta . f_i + b
//! ```
//!
//! with the bias unpenalized by default. The problem is low-dimensional and
//! convex, so the solver is full-batch Newton with backtracking line search,
//! falling back to a gradient step whenever the Hessian solve fails. Training
//! is deterministic: zero initialization, no stochasticity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A trained linear scorer: weights `theta` and an intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScorer {
    pub theta: Vec<f64>,
    pub bias: f64,
}

impl LinearScorer {
    pub fn new(theta: Vec<f64>, bias: f64) -> Self {
        Self { theta, bias }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// The raw linear score `theta . f + b`. Ordering by this value is
    /// identical to ordering by [`LinearScorer::predict_proba`] because the
    /// sigmoid is strictly increasing.
    pub fn linear_score(&self, features: &[f64]) -> f64 {
        debug_assert_eq!(features.len(), self.theta.len());
        self.theta
            .iter()
            .zip(features)
            .map(|(t, f)| t * f)
            .sum::<f64>()
            + self.bias
    }

    /// The match probability `sigmoid(theta . f + b)`, clamped into the open
    /// unit interval so saturated scores never round to exactly 0 or 1.
    pub fn predict_proba(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.theta.len() {
            return Err(Error::InvalidInput(format!(
                "feature dimension {} does not match scorer dimension {}",
                features.len(),
                self.theta.len()
            )));
        }
        Ok(sigmoid(self.linear_score(features)))
    }
}

/// Numerically stable sigmoid, clamped to the open interval (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Trainer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Iteration cap.
    pub max_iters: usize,
    /// Stop when the gradient infinity norm drops below this.
    pub grad_tol: f64,
    /// Inverse regularization strength C scaling the data term.
    pub reg_inverse_strength: f64,
    /// Whether the bias is included in the L2 penalty.
    pub bias_penalized: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            grad_tol: 1e-6,
            reg_inverse_strength: 1.0,
            bias_penalized: false,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        if !self.grad_tol.is_finite() || self.grad_tol <= 0.0 {
            return Err(Error::InvalidInput("grad_tol must be positive".into()));
        }
        if !self.reg_inverse_strength.is_finite() || self.reg_inverse_strength <= 0.0 {
            return Err(Error::InvalidInput("C must be positive".into()));
        }
        Ok(())
    }
}

/// Flat row-major feature storage.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut m = Self::new(dim);
        for row in rows {
            m.push_row(row)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "feature row has dimension {}, expected {}",
                row.len(),
                self.dim
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Per-sample weights that equalize the two classes: a sample of class `c`
/// gets weight `N / (2 * n_c)`, so each class contributes `N / 2` total.
pub fn balanced_weights(labels: &[bool]) -> Result<Vec<f64>> {
    let n = labels.len() as f64;
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let n_neg = n - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::SingleClass(
            "balanced weights need both classes present".into(),
        ));
    }
    let w_pos = n / (2.0 * n_pos);
    let w_neg = n / (2.0 * n_neg);
    Ok(labels
        .iter()
        .map(|&l| if l { w_pos } else { w_neg })
        .collect())
}

/// Objective value and its gradient at `scorer`. The gradient vector has the
/// bias derivative as its last component (length `dim + 1`).
pub fn loss_and_gradient(
    scorer: &LinearScorer,
    features: &FeatureMatrix,
    labels: &[bool],
    weights: &[f64],
    config: &TrainConfig,
) -> (f64, Vec<f64>) {
    let d = scorer.dim();
    let c = config.reg_inverse_strength;
    let mut loss = 0.5 * scorer.theta.iter().map(|t| t * t).sum::<f64>();
    if config.bias_penalized {
        loss += 0.5 * scorer.bias * scorer.bias;
    }
    let mut grad = vec![0.0; d + 1];
    for (j, t) in scorer.theta.iter().enumerate() {
        grad[j] = *t;
    }
    if config.bias_penalized {
        grad[d] = scorer.bias;
    }
    for (i, (&is_pos, &weight)) in labels.iter().zip(weights).enumerate() {
        let row = features.row(i);
        let z = scorer.linear_score(row);
        let label = f64::from(u8::from(is_pos));
        // -l ln s(z) - (1-l) ln(1-s(z)) == softplus(z) - l z
        loss += c * weight * (softplus(z) - label * z);
        let residual = c * weight * (sigmoid_raw(z) - label);
        for (j, f) in row.iter().enumerate() {
            grad[j] += residual * f;
        }
        grad[d] += residual;
    }
    (loss, grad)
}

/// Sigmoid without the open-interval clamp, for gradient arithmetic.
fn sigmoid_raw(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Convergence bookkeeping from [`fit_logistic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_grad_norm: f64,
    pub objective: f64,
}

/// Fit the scorer by full-batch Newton with backtracking line search.
///
/// Parameters start at zero; the solve is deterministic (`_seed` is reserved
/// for stochastic solvers). Requires both classes present and finite
/// features.
pub fn fit_logistic(
    features: &FeatureMatrix,
    labels: &[bool],
    weights: &[f64],
    config: &TrainConfig,
    _seed: u64,
) -> Result<(LinearScorer, FitReport)> {
    config.validate()?;
    let n = features.n_rows();
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 samples".into()));
    }
    if labels.len() != n || weights.len() != n {
        return Err(Error::InvalidInput(format!(
            "feature/label/weight length mismatch: {n} vs {} vs {}",
            labels.len(),
            weights.len()
        )));
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(Error::SingleClass(
            "logistic fit needs both classes present".into(),
        ));
    }

    let d = features.dim();
    let c = config.reg_inverse_strength;
    let mut scorer = LinearScorer::new(vec![0.0; d], 0.0);
    let (mut loss, mut grad) = loss_and_gradient(&scorer, features, labels, weights, config);

    let mut iterations = 0;
    let mut converged = false;
    for iter in 0..config.max_iters {
        if !loss.is_finite() {
            return Err(Error::NonFinite { iteration: iter });
        }
        let grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_norm < config.grad_tol {
            converged = true;
            break;
        }
        iterations = iter + 1;

        // Hessian of the objective in (theta, bias) coordinates.
        let p = d + 1;
        let mut hessian = vec![0.0; p * p];
        for j in 0..d {
            hessian[j * p + j] = 1.0;
        }
        if config.bias_penalized {
            hessian[d * p + d] = 1.0;
        }
        for (i, &weight) in weights.iter().enumerate() {
            let row = features.row(i);
            let z = scorer.linear_score(row);
            let s = sigmoid_raw(z);
            let curvature = c * weight * s * (1.0 - s);
            for j in 0..d {
                for l in j..d {
                    hessian[j * p + l] += curvature * row[j] * row[l];
                }
                hessian[j * p + d] += curvature * row[j];
            }
            hessian[d * p + d] += curvature;
        }
        for j in 0..p {
            for l in 0..j {
                hessian[j * p + l] = hessian[l * p + j];
            }
        }

        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut direction = match cholesky_solve(&hessian, &neg_grad, p) {
            Some(dir) => dir,
            None => neg_grad.clone(),
        };
        // A Newton direction must descend; otherwise take the gradient.
        let slope: f64 = grad.iter().zip(&direction).map(|(g, s)| g * s).sum();
        if slope >= 0.0 {
            direction = neg_grad.clone();
        }
        let slope: f64 = grad.iter().zip(&direction).map(|(g, s)| g * s).sum();

        // Backtracking with the Armijo condition.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = apply_step(&scorer, &direction, step);
            let (trial_loss, trial_grad) =
                loss_and_gradient(&trial, features, labels, weights, config);
            if trial_loss.is_finite() && trial_loss <= loss + 1e-4 * step * slope {
                scorer = trial;
                loss = trial_loss;
                grad = trial_grad;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No progress possible at double precision.
            converged = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < config.grad_tol;
            break;
        }
    }
    if !converged {
        let grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        converged = grad_norm < config.grad_tol;
    }

    if scorer.theta.iter().any(|t| !t.is_finite()) || !scorer.bias.is_finite() {
        return Err(Error::NonFinite {
            iteration: iterations,
        });
    }
    let final_grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    Ok((
        scorer,
        FitReport {
            iterations,
            converged,
            final_grad_norm,
            objective: loss,
        },
    ))
}

fn apply_step(scorer: &LinearScorer, direction: &[f64], step: f64) -> LinearScorer {
    let d = scorer.dim();
    let theta = scorer
        .theta
        .iter()
        .zip(&direction[..d])
        .map(|(t, s)| t + step * s)
        .collect();
    LinearScorer::new(theta, scorer.bias + step * direction[d])
}

/// Solve `A x = b` for symmetric positive-definite `A` (row-major, `p x p`).
/// Returns `None` when a pivot is too small to trust.
fn cholesky_solve(a: &[f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut sum = a[i * p + j];
            for k in 0..j {
                sum -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if sum <= 1e-12 {
                    return None;
                }
                l[i * p + i] = sum.sqrt();
            } else {
                l[i * p + j] = sum / l[j * p + j];
            }
        }
    }
    // Forward then backward substitution.
    let mut y = vec![0.0; p];
    for i in 0..p {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * p + k] * y[k];
        }
        y[i] = sum / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut sum = y[i];
        for k in i + 1..p {
            sum -= l[k * p + i] * x[k];
        }
        x[i] = sum / l[i * p + i];
    }
    Some(x)
}
