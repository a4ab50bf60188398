//! Soft-margin binary SVM trained with sequential minimal optimization.
//!
//! The dual is `min ½ αᵀQα − Σα` subject to `0 ≤ α ≤ C` and `yᵀα = 0`,
//! with `Q_ij = y_i y_j K(x_i, x_j)`. Each step picks the maximal
//! violating pair and solves the two-variable subproblem analytically.

use super::kernel::{Kernel, KernelSpec};
use super::ClassifierError;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const ITERATIONS_PER_SAMPLE: usize = 100_000;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    pub c: f64,
    pub tol: f64,
    pub max_iter_per_sample: usize,
}

impl SmoParams {
    pub fn new(c: f64) -> Self {
        Self { c, tol: DEFAULT_TOLERANCE, max_iter_per_sample: ITERATIONS_PER_SAMPLE }
    }
}

/// Solver output on a precomputed kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Decision offset: `f(x) = Σ α_i y_i K(x_i, x) − rho`.
    pub rho: f64,
    /// `½ αᵀQα − Σα` at the solution.
    pub objective: f64,
    /// Gradient `Qα − e` at the solution.
    pub gradient: Vec<f64>,
    pub iterations: usize,
}

fn check_labels(y: &[f64]) -> Result<(), ClassifierError> {
    if let Some(v) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(ClassifierError::InvalidInput(format!("binary labels must be +1 or -1, got {v}")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(ClassifierError::SingleClass);
    }
    Ok(())
}

/// Runs SMO on kernel matrix `k` with labels `y ∈ {+1, −1}`.
pub fn solve_smo(k: &[Vec<f64>], y: &[f64], params: &SmoParams) -> Result<SmoSolution, ClassifierError> {
    let n = y.len();
    if k.len() != n || k.iter().any(|r| r.len() != n) {
        return Err(ClassifierError::InvalidInput("kernel matrix does not match the labels".into()));
    }
    check_labels(y)?;
    let c = params.c;
    if !(c.is_finite() && c > 0.0) {
        return Err(ClassifierError::InvalidInput(format!("C must be > 0, got {c}")));
    }
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];

    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let max_iter = params.max_iter_per_sample.saturating_mul(n.max(1));
    let mut iter = 0;

    loop {
        // i maximizes −y G over I_up, j maximizes y G over I_low
        let (mut gmax, mut gmax2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if up && -y[t] * g[t] >= gmax {
                gmax = -y[t] * g[t];
                i = t;
            }
            let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if low && y[t] * g[t] >= gmax2 {
                gmax2 = y[t] * g[t];
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax + gmax2 < params.tol {
            break;
        }
        if iter >= max_iter {
            return Err(ClassifierError::NoConvergence { iterations: iter });
        }
        iter += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            g[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    let rho = compute_rho(&alpha, &g, y, c);
    let objective = alpha.iter().zip(&g).map(|(a, gi)| a * (gi - 1.0)).sum::<f64>() / 2.0;
    Ok(SmoSolution { alpha, rho, objective, gradient: g, iterations: iter })
}

fn compute_rho(alpha: &[f64], g: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * g[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// A trained binary machine. Positive decisions mean class `+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    pub dual_coef: Vec<f64>,
    /// ω̂₀ in `f(x) = Σ α_i y_i K(x_i, x) + ω̂₀`.
    pub bias: f64,
}

impl BinaryModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors.iter().zip(&self.dual_coef).map(|(sv, a)| a * self.kernel.eval(sv, x)).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.decision(x) > 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Trains with a kernel whose gamma is already fixed.
pub fn train_with_kernel(x: &[Vec<f64>], y: &[f64], kernel: Kernel, params: &SmoParams) -> Result<(BinaryModel, SmoSolution), ClassifierError> {
    if x.len() != y.len() {
        return Err(ClassifierError::InvalidInput(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let sol = solve_smo(&kernel.gram(x), y, params)?;
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for (t, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(x[t].clone());
            dual_coef.push(a * y[t]);
        }
    }
    Ok((BinaryModel { kernel, c: params.c, support_vectors, dual_coef, bias: -sol.rho }, sol))
}

pub fn train_binary(x: &[Vec<f64>], y: &[f64], kernel: &KernelSpec, c: f64) -> Result<BinaryModel, ClassifierError> {
    kernel.validate().map_err(ClassifierError::InvalidInput)?;
    Ok(train_with_kernel(x, y, kernel.resolve(x), &SmoParams::new(c))?.0)
}
