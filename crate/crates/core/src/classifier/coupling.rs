//! Class probabilities from pairwise probabilities.
//!
//! Minimizes `Σ_i Σ_{j≠i} (r_ji p_i − r_ij p_j)²` on `Σ p = 1` by solving
//! the bordered system `[[Q, e], [eᵀ, 0]] [p; b] = [0; 1]` with
//! `Q_ii = Σ_{s≠i} r_si²` and `Q_ij = −r_ji r_ij`.

use super::ClassifierError;

const SUM_TOLERANCE: f64 = 1e-9;

pub fn validate_pairwise(r: &[Vec<f64>]) -> Result<usize, ClassifierError> {
    let k = r.len();
    let bad = |msg: String| Err(ClassifierError::InvalidPairwiseMatrix(msg));
    if k < 2 {
        return bad(format!("need at least 2 classes, got {k}"));
    }
    if r.iter().any(|row| row.len() != k) {
        return bad("matrix is not square".into());
    }
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let v = r[i][j];
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("r[{i}][{j}] = {v} is outside (0, 1)"));
            }
            if (v + r[j][i] - 1.0).abs() > SUM_TOLERANCE {
                return bad(format!("r[{i}][{j}] + r[{j}][{i}] = {}", v + r[j][i]));
            }
        }
    }
    Ok(k)
}

/// Gaussian elimination with partial pivoting. `None` when singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

pub fn couple_pairwise(r: &[Vec<f64>]) -> Result<Vec<f64>, ClassifierError> {
    let k = validate_pairwise(r)?;
    if k == 2 {
        return Ok(vec![r[0][1], r[1][0]]);
    }
    let mut a = vec![vec![0.0; k + 1]; k + 1];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = if i == j { (0..k).filter(|&s| s != i).map(|s| r[s][i] * r[s][i]).sum() } else { -r[j][i] * r[i][j] };
        }
        a[i][k] = 1.0;
        a[k][i] = 1.0;
    }
    let mut rhs = vec![0.0; k + 1];
    rhs[k] = 1.0;
    let x = solve_linear(a, rhs)
        .ok_or_else(|| ClassifierError::InvalidPairwiseMatrix("coupling system is singular".into()))?;
    // the exact solution is nonnegative; clear rounding noise and renormalize
    let mut p: Vec<f64> = x[..k].iter().map(|&v| v.max(0.0)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    Ok(p)
}

/// The coupling objective, for checks and oracles.
pub fn coupling_objective(r: &[Vec<f64>], p: &[f64]) -> f64 {
    let k = p.len();
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                total += (r[j][i] * p[i] - r[i][j] * p[j]).powi(2);
            }
        }
    }
    total
}
