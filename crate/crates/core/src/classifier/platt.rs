//! Sigmoid calibration of decision values, `P(y = +1 | f) = 1 / (1 + exp(A f + B))`.
//!
//! Newton's method with backtracking on the regularized likelihood with
//! smoothed targets `(N₊ + 1) / (N₊ + 2)` and `1 / (N₋ + 2)`.

use super::ClassifierError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

impl Platt {
    pub fn probability(&self, decision: f64) -> f64 {
        sigmoid_prob(self.a, self.b, decision)
    }
}

/// Numerically stable `1 / (1 + exp(A f + B))`.
pub fn sigmoid_prob(a: f64, b: f64, f: f64) -> f64 {
    let z = a * f + b;
    if z >= 0.0 {
        (-z).exp() / (1.0 + (-z).exp())
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Smoothed targets for labels `y ∈ {+1, −1}`.
pub fn smoothed_targets(y: &[f64]) -> Result<Vec<f64>, ClassifierError> {
    let pos = y.iter().filter(|&&v| v > 0.0).count() as f64;
    let neg = y.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(ClassifierError::DegenerateTargets);
    }
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    Ok(y.iter().map(|&v| if v > 0.0 { hi } else { lo }).collect())
}

/// Negative log-likelihood of `(A, B)` on the smoothed targets.
pub fn platt_objective(a: f64, b: f64, decisions: &[f64], targets: &[f64]) -> f64 {
    decisions
        .iter()
        .zip(targets)
        .map(|(&f, &t)| {
            let z = f * a + b;
            if z >= 0.0 {
                t * z + (-z).exp().ln_1p()
            } else {
                (t - 1.0) * z + z.exp().ln_1p()
            }
        })
        .sum()
}

pub fn calibrate_platt(decisions: &[f64], y: &[f64]) -> Result<Platt, ClassifierError> {
    if decisions.len() != y.len() {
        return Err(ClassifierError::InvalidInput(format!("{} decisions but {} labels", decisions.len(), y.len())));
    }
    if decisions.iter().any(|f| !f.is_finite()) {
        return Err(ClassifierError::InvalidInput("non-finite decision value".into()));
    }
    let t = smoothed_targets(y)?;
    let pos = y.iter().filter(|&&v| v > 0.0).count() as f64;
    let neg = y.len() as f64 - pos;

    const MAX_ITER: usize = 100;
    const MIN_STEP: f64 = 1e-10;
    const SIGMA: f64 = 1e-12;
    const EPS: f64 = 1e-5;

    let mut a = 0.0;
    let mut b = ((neg + 1.0) / (pos + 1.0)).ln();
    let mut fval = platt_objective(a, b, decisions, &t);

    for _ in 0..MAX_ITER {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (&f, &ti) in decisions.iter().zip(&t) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                ((-z).exp() / (1.0 + (-z).exp()), 1.0 / (1.0 + (-z).exp()))
            } else {
                (1.0 / (1.0 + z.exp()), z.exp() / (1.0 + z.exp()))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < EPS && g2.abs() < EPS {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = platt_objective(na, nb, decisions, &t);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            break;
        }
    }
    Ok(Platt { a, b })
}
