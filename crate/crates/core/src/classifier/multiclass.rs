//! One-versus-one ensembles with voting and coupled probabilities.

use super::coupling::couple_pairwise;
use super::kernel::{Kernel, KernelSpec};
use super::platt::{calibrate_platt, Platt};
use super::smo::{train_with_kernel, BinaryModel, SmoParams};
use super::ClassifierError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Pairwise probabilities are kept away from 0 and 1 before coupling.
const PROB_CLAMP: f64 = 1e-7;

/// Machine separating class `pos` (decision > 0) from class `neg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMachine {
    pub pos: usize,
    pub neg: usize,
    pub model: BinaryModel,
    pub platt: Option<Platt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmEnsemble {
    /// Class names, sorted; machine indices refer to this list.
    pub classes: Vec<String>,
    pub kernel: Kernel,
    pub c: f64,
    pub machines: Vec<PairMachine>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub kernel: KernelSpec,
    pub c: f64,
    pub probability: bool,
    pub seed: u64,
    pub tol: f64,
}

impl TrainOptions {
    pub fn new(kernel: KernelSpec, c: f64) -> Self {
        Self { kernel, c, probability: true, seed: 0, tol: super::smo::DEFAULT_TOLERANCE }
    }
}

/// Sorted distinct class names and the index of each label.
pub fn index_labels(labels: &[String]) -> (Vec<String>, Vec<usize>) {
    let classes: Vec<String> = labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let idx = labels.iter().map(|l| classes.binary_search(l).expect("collected")).collect();
    (classes, idx)
}

pub fn train_multiclass(x: &[Vec<f64>], labels: &[String], opts: &TrainOptions) -> Result<SvmEnsemble, ClassifierError> {
    if x.len() != labels.len() {
        return Err(ClassifierError::InvalidInput(format!("{} rows but {} labels", x.len(), labels.len())));
    }
    opts.kernel.validate().map_err(ClassifierError::InvalidInput)?;
    let (classes, y) = index_labels(labels);
    if classes.len() < 2 {
        return Err(ClassifierError::SingleClass);
    }
    let kernel = opts.kernel.resolve(x);
    let params = SmoParams { tol: opts.tol, ..SmoParams::new(opts.c) };
    let pairs: Vec<(usize, usize)> =
        (0..classes.len()).flat_map(|i| (i + 1..classes.len()).map(move |j| (i, j))).collect();

    let machines = pairs
        .par_iter()
        .enumerate()
        .map(|(m, &(pos, neg))| {
            let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = x
                .iter()
                .zip(&y)
                .filter(|(_, &c)| c == pos || c == neg)
                .map(|(xi, &c)| (xi.clone(), if c == pos { 1.0 } else { -1.0 }))
                .unzip();
            let (model, _) = train_with_kernel(&xs, &ys, kernel, &params)?;
            let platt = if opts.probability {
                let seed = opts.seed.wrapping_add(m as u64);
                Some(fit_platt(&xs, &ys, &model, kernel, &params, seed)?)
            } else {
                None
            };
            Ok(PairMachine { pos, neg, model, platt })
        })
        .collect::<Result<Vec<_>, ClassifierError>>()?;

    Ok(SvmEnsemble { classes, kernel, c: opts.c, machines })
}

/// Calibrates on held-out decisions from an internal stratified split
/// (up to 5 folds); falls back to training decisions for tiny classes.
fn fit_platt(
    x: &[Vec<f64>],
    y: &[f64],
    full: &BinaryModel,
    kernel: Kernel,
    params: &SmoParams,
    seed: u64,
) -> Result<Platt, ClassifierError> {
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] < 0.0).collect();
    let folds = 5.min(pos.len()).min(neg.len());
    if folds < 2 {
        let dec: Vec<f64> = x.iter().map(|xi| full.decision(xi)).collect();
        return calibrate_platt(&dec, y);
    }
    let assignment = stratified_assignment(&[pos, neg], folds, seed);
    let mut dec = vec![0.0; y.len()];
    for f in 0..folds {
        let (tx, ty): (Vec<Vec<f64>>, Vec<f64>) =
            (0..y.len()).filter(|&i| assignment[i] != f).map(|i| (x[i].clone(), y[i])).unzip();
        let (m, _) = train_with_kernel(&tx, &ty, kernel, params)?;
        for i in (0..y.len()).filter(|&i| assignment[i] == f) {
            dec[i] = m.decision(&x[i]);
        }
    }
    calibrate_platt(&dec, y)
}

/// Fold index per sample: each group is shuffled and dealt round-robin,
/// continuing the deal across groups.
pub(crate) fn stratified_assignment(groups: &[Vec<usize>], folds: usize, seed: u64) -> Vec<usize> {
    let n = groups.iter().map(|g| g.iter().max().map_or(0, |m| m + 1)).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; n];
    let mut next = 0;
    for g in groups {
        let mut g = g.clone();
        g.shuffle(&mut rng);
        for i in g {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Majority vote; ties go to the larger summed decision value, then the
/// lower class index.
pub fn vote(k: usize, pairs: &[(usize, usize)], decisions: &[f64]) -> usize {
    let mut votes = vec![0usize; k];
    let mut sums = vec![0.0; k];
    for (&(pos, neg), &d) in pairs.iter().zip(decisions) {
        if d > 0.0 {
            votes[pos] += 1;
        } else {
            votes[neg] += 1;
        }
        sums[pos] += d;
        sums[neg] -= d;
    }
    let mut best = 0;
    for c in 1..k {
        if votes[c] > votes[best] || (votes[c] == votes[best] && sums[c] > sums[best]) {
            best = c;
        }
    }
    best
}

impl SvmEnsemble {
    fn check(&self) -> Result<(), ClassifierError> {
        let k = self.classes.len();
        if k < 2 || self.machines.len() != k * (k - 1) / 2 {
            return Err(ClassifierError::UntrainedModel);
        }
        Ok(())
    }

    pub fn decisions(&self, x: &[f64]) -> Vec<f64> {
        self.machines.iter().map(|m| m.model.decision(x)).collect()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.machines.iter().map(|m| (m.pos, m.neg)).collect()
    }

    pub fn predict_index(&self, x: &[f64]) -> Result<usize, ClassifierError> {
        self.check()?;
        Ok(vote(self.classes.len(), &self.pairs(), &self.decisions(x)))
    }

    pub fn predict(&self, x: &[f64]) -> Result<&str, ClassifierError> {
        Ok(&self.classes[self.predict_index(x)?])
    }

    pub fn has_probability(&self) -> bool {
        self.machines.iter().all(|m| m.platt.is_some())
    }

    /// Pairwise probability matrix `r[i][j] = P(i | i or j, x)`.
    pub fn pairwise(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, ClassifierError> {
        self.check()?;
        let k = self.classes.len();
        let mut r = vec![vec![0.0; k]; k];
        for m in &self.machines {
            let platt = m.platt.ok_or(ClassifierError::UntrainedModel)?;
            let p = platt.probability(m.model.decision(x)).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            r[m.pos][m.neg] = p;
            r[m.neg][m.pos] = 1.0 - p;
        }
        Ok(r)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        couple_pairwise(&self.pairwise(x)?)
    }
}

pub fn predict_multiclass(ensemble: &SvmEnsemble, x: &[f64]) -> Result<usize, ClassifierError> {
    ensemble.predict_index(x)
}
