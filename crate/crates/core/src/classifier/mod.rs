//! Support vector classification: SMO training, Platt calibration,
//! pairwise coupling, one-versus-one ensembles and cross-validation.

pub mod coupling;
pub mod cv;
pub mod kernel;
pub mod multiclass;
pub mod platt;
pub mod smo;

use thiserror::Error;

pub use coupling::couple_pairwise;
pub use cv::{c_grid, cross_validate, CvCell, CvReport};
pub use kernel::{Kernel, KernelKind, KernelSpec};
pub use multiclass::{predict_multiclass, train_multiclass, PairMachine, SvmEnsemble, TrainOptions};
pub use platt::{calibrate_platt, Platt};
pub use smo::{solve_smo, train_binary, BinaryModel, SmoParams, SmoSolution};

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("solver hit the iteration cap after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("calibration targets are degenerate: both classes are required")]
    DegenerateTargets,
    #[error("invalid pairwise probability matrix: {0}")]
    InvalidPairwiseMatrix(String),
    #[error("model is not trained for this operation")]
    UntrainedModel,
    #[error("class '{class}' has {count} samples, fewer than {folds} folds")]
    TooFewSamplesPerClass { class: String, count: usize, folds: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
