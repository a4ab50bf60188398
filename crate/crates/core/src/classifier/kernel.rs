//! Kernel functions.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Poly,
    Rbf,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Linear, KernelKind::Poly, KernelKind::Rbf];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Poly => "poly",
            KernelKind::Rbf => "rbf",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "poly" | "polynomial" => Ok(KernelKind::Poly),
            "rbf" => Ok(KernelKind::Rbf),
            _ => Err(format!("unknown kernel '{s}' (linear | poly | rbf)")),
        }
    }
}

/// Kernel as configured; `gamma: None` means the data-scaled default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub degree: u32,
    pub gamma: Option<f64>,
    pub coef0: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self { kind: KernelKind::Linear, degree: 3, gamma: None, coef0: 0.0 }
    }

    pub fn poly() -> Self {
        Self { kind: KernelKind::Poly, ..Self::linear() }
    }

    pub fn rbf() -> Self {
        Self { kind: KernelKind::Rbf, ..Self::linear() }
    }

    pub fn of(kind: KernelKind) -> Self {
        Self { kind, ..Self::linear() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.degree < 1 {
            return Err("kernel degree must be >= 1".into());
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(format!("kernel gamma must be > 0, got {g}"));
            }
        }
        if !self.coef0.is_finite() {
            return Err("kernel coef0 must be finite".into());
        }
        Ok(())
    }

    /// Fixes gamma, defaulting to `1 / (n_features * var(X))`.
    pub fn resolve(&self, x: &[Vec<f64>]) -> Kernel {
        Kernel { kind: self.kind, degree: self.degree, gamma: self.gamma.unwrap_or_else(|| default_gamma(x)), coef0: self.coef0 }
    }
}

/// Scale-aware gamma; 1.0 when the data has no spread.
pub fn default_gamma(x: &[Vec<f64>]) -> f64 {
    let n_features = x.first().map_or(0, Vec::len);
    let count = (x.len() * n_features) as f64;
    if count == 0.0 {
        return 1.0;
    }
    let mean = x.iter().flatten().sum::<f64>() / count;
    let var = x.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    if var > 0.0 {
        1.0 / (n_features as f64 * var)
    } else {
        1.0
    }
}

/// A kernel with every parameter fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub kind: KernelKind,
    pub degree: u32,
    pub gamma: f64,
    pub coef0: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(a, b),
            KernelKind::Poly => (self.gamma * dot(a, b) + self.coef0).powi(self.degree as i32),
            KernelKind::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-self.gamma * d2).exp()
            }
        }
    }

    pub fn gram(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = x.len();
        let mut k = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval(&x[i], &x[j]);
                k[i][j] = v;
                k[j][i] = v;
            }
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        let a = [1.0, 2.0];
        let b = [3.0, -1.0];
        assert_eq!(KernelSpec::linear().resolve(&[]).eval(&a, &b), 1.0);
        let poly = Kernel { kind: KernelKind::Poly, degree: 2, gamma: 0.5, coef0: 1.0 };
        assert_eq!(poly.eval(&a, &b), 2.25);
        let rbf = Kernel { kind: KernelKind::Rbf, degree: 3, gamma: 0.1, coef0: 0.0 };
        assert_eq!(rbf.eval(&a, &a), 1.0);
        assert!((rbf.eval(&a, &b) - (-1.3f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn default_gamma_scales_with_variance() {
        let x = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
        assert_eq!(default_gamma(&x), 0.5);
        assert_eq!(default_gamma(&[vec![3.0, 3.0]]), 1.0);
    }
}
