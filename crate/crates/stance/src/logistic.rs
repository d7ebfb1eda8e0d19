//! L2-regularized, class-weighted logistic regression trained with L-BFGS.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeights {
    /// Each class weighted by `n / (2 n_c)`.
    #[default]
    Balanced,
    Uniform,
}

impl ClassWeights {
    /// Per-example weights for labels `y` (true = positive).
    pub fn per_example(self, y: &[bool]) -> Result<Vec<f64>> {
        let pos = y.iter().filter(|&&v| v).count();
        let neg = y.len() - pos;
        if pos == 0 || neg == 0 {
            return Err(Error::SingleClass);
        }
        let n = y.len() as f64;
        let (wp, wn) = match self {
            ClassWeights::Balanced => (n / (2.0 * pos as f64), n / (2.0 * neg as f64)),
            ClassWeights::Uniform => (1.0, 1.0),
        };
        Ok(y.iter().map(|&v| if v { wp } else { wn }).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub l2_lambda: f64,
    pub class_weights: ClassWeights,
    pub max_iter: usize,
    /// Stop when the relative objective change falls below this (and the
    /// gradient has shrunk by four orders of magnitude).
    pub tolerance: f64,
    pub memory: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2_lambda: 1.0,
            class_weights: ClassWeights::Balanced,
            max_iter: 500,
            tolerance: 1e-6,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub beta: Vec<f64>,
    pub intercept: f64,
    /// Objective after each accepted step, starting at the initial point.
    pub objective_trace: Vec<f64>,
}

fn dot(row: &SparseRow, beta: &[f64]) -> f64 {
    row.iter().map(|&(j, v)| beta[j] * v).sum()
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn predict_proba(&self, row: &SparseRow) -> f64 {
        sigmoid(dot(row, &self.beta) + self.intercept)
    }
}

/// The training objective for a parameter vector `[beta..., intercept]`.
pub struct Objective<'a> {
    pub x: &'a [SparseRow],
    pub y: &'a [bool],
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub dim: usize,
}

impl<'a> Objective<'a> {
    pub fn new(x: &'a [SparseRow], y: &'a [bool], dim: usize, cfg: &LogisticConfig) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidConfig(format!("{} rows but {} labels", x.len(), y.len())));
        }
        if let Some(&(j, _)) = x.iter().flatten().find(|&&(j, _)| j >= dim) {
            return Err(Error::InvalidConfig(format!("feature index {j} outside dimension {dim}")));
        }
        Ok(Self {
            x,
            y,
            weights: cfg.class_weights.per_example(y)?,
            lambda: cfg.l2_lambda,
            dim,
        })
    }

    /// Class-weighted negative log-likelihood plus `lambda/2 |beta|^2`; the
    /// intercept is not penalized.
    pub fn value_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let (beta, b) = params.split_at(self.dim);
        let b = b[0];
        let mut f = 0.0;
        let mut g = vec![0.0; self.dim + 1];
        for ((row, &yi), &w) in self.x.iter().zip(self.y).zip(&self.weights) {
            let z = dot(row, beta) + b;
            // -log p = softplus(-z), -log(1-p) = softplus(z)
            f += w * if yi { softplus(-z) } else { softplus(z) };
            let r = w * (sigmoid(z) - if yi { 1.0 } else { 0.0 });
            for &(j, v) in row {
                g[j] += r * v;
            }
            g[self.dim] += r;
        }
        for j in 0..self.dim {
            f += 0.5 * self.lambda * beta[j] * beta[j];
            g[j] += self.lambda * beta[j];
        }
        (f, g)
    }
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits by L-BFGS with Armijo backtracking, so the objective never increases
/// between iterations. Deterministic for a given row order.
pub fn train_logistic(x: &[SparseRow], y: &[bool], dim: usize, cfg: &LogisticConfig) -> Result<LogisticModel> {
    if !(cfg.l2_lambda >= 0.0) || !cfg.l2_lambda.is_finite() {
        return Err(Error::InvalidConfig("l2_lambda must be finite and non-negative".into()));
    }
    let obj = Objective::new(x, y, dim, cfg)?;
    let mut params = vec![0.0; dim + 1];
    let (mut f, mut g) = obj.value_and_gradient(&params);
    let mut trace = vec![f];
    let g0 = inner(&g, &g).sqrt().max(1.0);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    for _ in 0..cfg.max_iter {
        if inner(&g, &g).sqrt() <= 1e-10 {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let a = rho * inner(s, &q);
            q.iter_mut().zip(yv).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, yv, _)) = history.back() {
            let gamma = inner(s, yv) / inner(yv, yv);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, yv, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let bcoef = rho * inner(yv, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - bcoef) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = inner(&g, &dir);
        if slope >= 0.0 {
            // not a descent direction; fall back to steepest descent
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -inner(&g, &g);
        }
        let mut step = if history.is_empty() {
            1.0 / inner(&g, &g).sqrt().max(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + step * d).collect();
            let (fc, gc) = obj.value_and_gradient(&cand);
            if fc <= f + 1e-4 * step * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else { break };
        let s: Vec<f64> = cand.iter().zip(&params).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = inner(&s, &yv);
        if sy > 1e-12 {
            if history.len() == cfg.memory.max(1) {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        let rel = (f - fc).abs() / f.abs().max(1.0);
        params = cand;
        f = fc;
        g = gc;
        trace.push(f);
        // a flat step alone is not enough on badly scaled problems
        if rel <= cfg.tolerance && inner(&g, &g).sqrt() <= 1e-4 * g0 {
            break;
        }
    }
    let intercept = params[dim];
    params.truncate(dim);
    Ok(LogisticModel {
        beta: params,
        intercept,
        objective_trace: trace,
    })
}
