//! Binary logistic regression trained by full-batch gradient descent.
//!
//! Objective (intercept never penalized):
//!
//! ```text
//! J(w, b) = mean_i[ softplus(s_i) - y_i s_i ] + lambda * R(w),   s_i = w.x_i + b
//! lambda  = 1 / (C n)
//! R(w)    = 0 | ||w||_1 | ||w||^2 / 2
//! ```
//!
//! The l1 term is handled with a proximal soft-threshold step after each
//! gradient step on the smooth part.

use serde::{Deserialize, Serialize};

/// Regularizer applied to the weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    None,
    L1,
    L2,
}

impl Penalty {
    pub fn as_str(self) -> &'static str {
        match self {
            Penalty::None => "none",
            Penalty::L1 => "l1",
            Penalty::L2 => "l2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub penalty: Penalty,
    #[serde(rename = "C")]
    pub c: f64,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub tolerance: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            penalty: Penalty::L2,
            c: 1.0,
            max_epochs: 2000,
            learning_rate: 0.1,
            tolerance: 1e-6,
        }
    }
}

/// Learned coefficients, expressed on the standardized feature scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogisticModel {
    pub fn decision(&self, z: &[f64]) -> f64 {
        dot(&self.weights, z) + self.intercept
    }

    pub fn proba(&self, z: &[f64]) -> f64 {
        sigmoid(self.decision(z))
    }
}

/// Summary of a gradient-descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentTrace {
    pub epochs: usize,
    pub converged: bool,
    pub final_grad_norm: f64,
    /// Objective value before each update, populated only when requested.
    pub losses: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

/// The regularized logistic objective over a row-major design matrix.
pub struct LogisticObjective<'a> {
    rows: &'a [f64],
    labels: &'a [u8],
    dim: usize,
    penalty: Penalty,
    lambda: f64,
}

impl<'a> LogisticObjective<'a> {
    /// `rows` is row-major with `labels.len()` rows of width `dim`.
    pub fn new(rows: &'a [f64], labels: &'a [u8], dim: usize, penalty: Penalty, c: f64) -> Self {
        assert_eq!(rows.len(), labels.len() * dim);
        let n = labels.len().max(1) as f64;
        let lambda = match penalty {
            Penalty::None => 0.0,
            _ => 1.0 / (c * n),
        };
        LogisticObjective {
            rows,
            labels,
            dim,
            penalty,
            lambda,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn n(&self) -> f64 {
        self.labels.len() as f64
    }

    /// Full objective, including the penalty term.
    pub fn loss(&self, w: &[f64], b: f64) -> f64 {
        let data: f64 = self
            .rows
            .chunks_exact(self.dim)
            .zip(self.labels)
            .map(|(x, &y)| {
                let s = dot(w, x) + b;
                softplus(s) - f64::from(y) * s
            })
            .sum::<f64>()
            / self.n();
        data + self.lambda * self.regularizer(w)
    }

    fn regularizer(&self, w: &[f64]) -> f64 {
        match self.penalty {
            Penalty::None => 0.0,
            Penalty::L1 => w.iter().map(|v| v.abs()).sum(),
            Penalty::L2 => 0.5 * dot(w, w),
        }
    }

    /// Gradient of the differentiable part: the data term plus, for l2,
    /// the ridge term. Writes into `gw` and returns the intercept gradient.
    pub fn smooth_gradient(&self, w: &[f64], b: f64, gw: &mut [f64]) -> f64 {
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (x, &y) in self.rows.chunks_exact(self.dim).zip(self.labels) {
            let r = sigmoid(dot(w, x) + b) - f64::from(y);
            gb += r;
            for (g, xi) in gw.iter_mut().zip(x) {
                *g += r * xi;
            }
        }
        let inv_n = 1.0 / self.n();
        for (g, wi) in gw.iter_mut().zip(w) {
            *g *= inv_n;
            if self.penalty == Penalty::L2 {
                *g += self.lambda * wi;
            }
        }
        gb * inv_n
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Runs gradient descent from zero until the (proximal) gradient's
/// infinity norm drops below `tolerance` or `max_epochs` is reached.
pub fn train(
    objective: &LogisticObjective<'_>,
    params: &LogisticParams,
    record_losses: bool,
) -> (LogisticModel, DescentTrace) {
    let d = objective.dim;
    let lr = params.learning_rate;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut gw = vec![0.0; d];
    let mut losses = Vec::new();
    let mut grad_norm = f64::INFINITY;
    let mut epochs = 0;
    let mut converged = false;
    while epochs < params.max_epochs {
        if record_losses {
            losses.push(objective.loss(&w, b));
        }
        let gb = objective.smooth_gradient(&w, b, &mut gw);
        match objective.penalty {
            Penalty::L1 => {
                // gradient mapping (w - prox(w - lr g)) / lr
                let t = lr * objective.lambda;
                let mut norm = gb.abs();
                for (wi, g) in w.iter_mut().zip(&gw) {
                    let next = soft_threshold(*wi - lr * g, t);
                    norm = norm.max(((*wi - next) / lr).abs());
                    *wi = next;
                }
                grad_norm = norm;
                b -= lr * gb;
                epochs += 1;
                if grad_norm < params.tolerance {
                    converged = true;
                    break;
                }
            }
            Penalty::None | Penalty::L2 => {
                grad_norm = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
                if grad_norm < params.tolerance {
                    converged = true;
                    break;
                }
                for (wi, g) in w.iter_mut().zip(&gw) {
                    *wi -= lr * g;
                }
                b -= lr * gb;
                epochs += 1;
            }
        }
    }
    if record_losses {
        losses.push(objective.loss(&w, b));
    }
    (
        LogisticModel {
            weights: w,
            intercept: b,
        },
        DescentTrace {
            epochs,
            converged,
            final_grad_norm: grad_norm,
            losses,
        },
    )
}
