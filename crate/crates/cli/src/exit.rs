//! Exit codes.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | other failure (I/O, solver) |
//! | 2 | usage: bad flag, value or config |
//! | 3 | insufficient data |
//! | 4 | malformed input |
//! | 5 | model mismatch |

use rcbht::classifier::ClassifierError;
use rcbht::features::FeatureError;
use rcbht::monitor::MonitorError;
use rcbht::pipeline::PipelineError;
use rcbht::primitives::PrimitiveError;
use rcbht::signal::SignalError;
use thiserror::Error;

pub const FAILURE: i32 = 1;
pub const USAGE: i32 = 2;
pub const INSUFFICIENT_DATA: i32 = 3;
pub const MALFORMED: i32 = 4;
pub const MODEL_MISMATCH: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
}

fn signal(e: &SignalError) -> i32 {
    match e {
        SignalError::Io(_) => FAILURE,
        SignalError::EmptySpec | SignalError::InvalidSpec(_) => USAGE,
        _ => MALFORMED,
    }
}

fn primitive(e: &PrimitiveError) -> i32 {
    match e {
        PrimitiveError::InsufficientData(_) | PrimitiveError::DegenerateWindow(_) => INSUFFICIENT_DATA,
        PrimitiveError::InvalidThresholds(_) => MALFORMED,
        PrimitiveError::Signal(s) => signal(s),
    }
}

fn feature(e: &FeatureError) -> i32 {
    match e {
        FeatureError::AllEmpty | FeatureError::EmptyCorpus => INSUFFICIENT_DATA,
        FeatureError::Io(_) => FAILURE,
        _ => MALFORMED,
    }
}

fn classifier(e: &ClassifierError) -> i32 {
    match e {
        ClassifierError::SingleClass | ClassifierError::TooFewSamplesPerClass { .. } => INSUFFICIENT_DATA,
        ClassifierError::InvalidInput(_) | ClassifierError::InvalidPairwiseMatrix(_) => MALFORMED,
        ClassifierError::UntrainedModel => MODEL_MISMATCH,
        _ => FAILURE,
    }
}

fn pipeline(e: &PipelineError) -> i32 {
    match e {
        PipelineError::Config(_) => USAGE,
        PipelineError::Signal(s) => signal(s),
        PipelineError::Primitive(p) => primitive(p),
        PipelineError::Feature(f) => feature(f),
        PipelineError::Model(_) => MALFORMED,
        _ => FAILURE,
    }
}

fn monitor(e: &MonitorError) -> i32 {
    match e {
        MonitorError::ModelMismatch(_) => MODEL_MISMATCH,
        MonitorError::EmptyCorpus | MonitorError::EmptyTrace => INSUFFICIENT_DATA,
        MonitorError::InvalidThreshold(_) | MonitorError::InvalidRate(_) => USAGE,
        MonitorError::Pipeline(p) => pipeline(p),
        MonitorError::Feature(f) => feature(f),
        MonitorError::Classifier(c) => classifier(c),
    }
}

/// Exit code for an error raised anywhere below `main`.
pub fn code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Usage(_) => USAGE,
                CliError::InsufficientData(_) => INSUFFICIENT_DATA,
                CliError::Malformed(_) => MALFORMED,
                CliError::ModelMismatch(_) => MODEL_MISMATCH,
            };
        }
        if let Some(e) = cause.downcast_ref::<MonitorError>() {
            return monitor(e);
        }
        if let Some(e) = cause.downcast_ref::<PipelineError>() {
            return pipeline(e);
        }
        if let Some(e) = cause.downcast_ref::<FeatureError>() {
            return feature(e);
        }
        if let Some(e) = cause.downcast_ref::<ClassifierError>() {
            return classifier(e);
        }
        if let Some(e) = cause.downcast_ref::<PrimitiveError>() {
            return primitive(e);
        }
        if let Some(e) = cause.downcast_ref::<SignalError>() {
            return signal(e);
        }
    }
    FAILURE
}
