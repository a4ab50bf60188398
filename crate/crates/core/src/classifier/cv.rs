//! Stratified k-fold cross-validation over a (kernel, C) grid.

use super::kernel::KernelSpec;
use super::multiclass::{index_labels, stratified_assignment, train_multiclass, TrainOptions};
use super::ClassifierError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const DEFAULT_FOLDS: usize = 5;

/// `10^x` for each power.
pub fn c_grid(powers: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    powers.map(|x| 10f64.powi(x)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub kernel: KernelSpec,
    pub c: f64,
    pub fold_accuracy: Vec<f64>,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    pub cells: Vec<CvCell>,
    /// Index of the cell with the highest mean; the first one on ties.
    pub best: usize,
}

impl CvReport {
    pub fn best_cell(&self) -> &CvCell {
        &self.cells[self.best]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kernel", "C", "min", "mean", "max"])?;
        for cell in &self.cells {
            w.write_record([
                cell.kernel.kind.to_string(),
                format!("{:e}", cell.c),
                format!("{:.4}", cell.min),
                format!("{:.4}", cell.mean),
                format!("{:.4}", cell.max),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fold index per sample, stratified by class and seeded.
pub fn stratified_folds(labels: &[String], folds: usize, seed: u64) -> Result<Vec<usize>, ClassifierError> {
    if folds < 2 {
        return Err(ClassifierError::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    let (classes, y) = index_labels(labels);
    let groups: Vec<Vec<usize>> = (0..classes.len()).map(|c| (0..y.len()).filter(|&i| y[i] == c).collect()).collect();
    for (c, g) in classes.iter().zip(&groups) {
        if g.len() < folds {
            return Err(ClassifierError::TooFewSamplesPerClass { class: c.clone(), count: g.len(), folds });
        }
    }
    Ok(stratified_assignment(&groups, folds, seed))
}

pub fn cross_validate(
    x: &[Vec<f64>],
    labels: &[String],
    folds: usize,
    kernels: &[KernelSpec],
    c_values: &[f64],
    seed: u64,
) -> Result<CvReport, ClassifierError> {
    if x.len() != labels.len() {
        return Err(ClassifierError::InvalidInput(format!("{} rows but {} labels", x.len(), labels.len())));
    }
    if kernels.is_empty() || c_values.is_empty() {
        return Err(ClassifierError::InvalidInput("empty parameter grid".into()));
    }
    let assignment = stratified_folds(labels, folds, seed)?;
    if index_labels(labels).0.len() < 2 {
        return Err(ClassifierError::SingleClass);
    }

    let grid: Vec<(KernelSpec, f64)> = kernels.iter().flat_map(|&k| c_values.iter().map(move |&c| (k, c))).collect();
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..folds).map(move |f| (g, f))).collect();
    let accuracies = jobs
        .par_iter()
        .map(|&(g, f)| {
            let (kernel, c) = grid[g];
            let (tx, ty): (Vec<Vec<f64>>, Vec<String>) =
                (0..x.len()).filter(|&i| assignment[i] != f).map(|i| (x[i].clone(), labels[i].clone())).unzip();
            let opts = TrainOptions { probability: false, ..TrainOptions::new(kernel, c) };
            let model = train_multiclass(&tx, &ty, &opts)?;
            let held: Vec<usize> = (0..x.len()).filter(|&i| assignment[i] == f).collect();
            let mut hits = 0;
            for &i in &held {
                if model.predict(&x[i])? == labels[i] {
                    hits += 1;
                }
            }
            Ok(hits as f64 / held.len() as f64)
        })
        .collect::<Result<Vec<f64>, ClassifierError>>()?;

    let cells: Vec<CvCell> = grid
        .iter()
        .enumerate()
        .map(|(g, &(kernel, c))| {
            let acc = accuracies[g * folds..(g + 1) * folds].to_vec();
            let min = acc.iter().copied().fold(f64::INFINITY, f64::min);
            let max = acc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = acc.iter().sum::<f64>() / folds as f64;
            CvCell { kernel, c, fold_accuracy: acc, min, mean, max }
        })
        .collect();
    let mut best = 0;
    for (i, cell) in cells.iter().enumerate() {
        if cell.mean > cells[best].mean {
            best = i;
        }
    }
    Ok(CvReport { folds, seed, cells, best })
}
