//! Wrench trials: validated 6-axis force/torque recordings with known
//! sub-task transition times.
//!
//! A [`WrenchTrial`] is the raw input to the encoding pipeline. Trials are
//! loaded from a CSV + JSON sidecar pair (see [`io`]), sliced into
//! per-state [`StateSegment`]s, or synthesized from piecewise-linear
//! profiles (see [`synth`]).

pub mod io;
pub mod synth;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub use io::{load_corpus, load_trial, parse_sample_row, read_samples, sidecar_path, write_trial, Sidecar, TrialSchema};
pub use synth::{
    generate_snap_corpus, generate_synthetic_trial, ProfileSegment, SnapCorpusParams, SynthSpec, SyntheticTrial, SNAP_STATES,
};

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("non-monotone time at sample {index}: {prev} then {next}")]
    NonMonotoneTime { index: usize, prev: f64, next: f64 },
    #[error("trial has no state transitions")]
    MissingTransitions,
    #[error("invalid transitions: {0}")]
    InvalidTransitions(String),
    #[error("state '{0}' covers no samples")]
    EmptySegment(String),
    #[error("synthetic spec has no segments")]
    EmptySpec,
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("sidecar: {0}")]
    Sidecar(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One of the six wrench axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Fx,
    Fy,
    Fz,
    Tx,
    Ty,
    Tz,
}

impl Axis {
    pub const ALL: [Axis; 6] = [Axis::Fx, Axis::Fy, Axis::Fz, Axis::Tx, Axis::Ty, Axis::Tz];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Fx => "fx",
            Axis::Fy => "fy",
            Axis::Fz => "fz",
            Axis::Tx => "tx",
            Axis::Ty => "ty",
            Axis::Tz => "tz",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown axis '{s}'"))
    }
}

/// A single time-stamped wrench reading. Forces in N, torques in N·m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrenchSample {
    pub t: f64,
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

impl WrenchSample {
    pub fn new(t: f64, values: [f64; 6]) -> Self {
        let [fx, fy, fz, tx, ty, tz] = values;
        Self { t, fx, fy, fz, tx, ty, tz }
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Fx => self.fx,
            Axis::Fy => self.fy,
            Axis::Fz => self.fz,
            Axis::Tx => self.tx,
            Axis::Ty => self.ty,
            Axis::Tz => self.tz,
        }
    }

    pub fn values(&self) -> [f64; 6] {
        [self.fx, self.fy, self.fz, self.tx, self.ty, self.tz]
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.values().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Nominal,
    Abnormal,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Nominal => "nominal",
            Outcome::Abnormal => "abnormal",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Start of a sub-task (state) within a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: String,
    pub t_start: f64,
}

impl Transition {
    pub fn new(state: impl Into<String>, t_start: f64) -> Self {
        Self { state: state.into(), t_start }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrenchTrial {
    pub samples: Vec<WrenchSample>,
    pub rate_hz: f64,
    pub transitions: Vec<Transition>,
    pub outcome: Outcome,
    pub arm_id: String,
    /// Trials of different arms recorded together share a key.
    pub key: String,
}

impl WrenchTrial {
    /// Checks every trial invariant: finite values, strictly increasing
    /// time, ordered transitions inside the recorded time range.
    pub fn validate(&self) -> Result<(), SignalError> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(SignalError::Sidecar(format!("rate_hz must be positive, got {}", self.rate_hz)));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !s.is_finite() || s.t < 0.0 {
                return Err(SignalError::MalformedRecord {
                    line: i + 2,
                    reason: "non-finite value or negative time".into(),
                });
            }
        }
        for (i, w) in self.samples.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(SignalError::NonMonotoneTime { index: i + 1, prev: w[0].t, next: w[1].t });
            }
        }
        validate_transitions(&self.transitions, &self.samples)
    }

    pub fn t_first(&self) -> Option<f64> {
        self.samples.first().map(|s| s.t)
    }

    pub fn t_last(&self) -> Option<f64> {
        self.samples.last().map(|s| s.t)
    }

    /// Index of the state active at time `t`.
    pub fn state_index_at(&self, t: f64) -> Option<usize> {
        state_index_at(&self.transitions, t)
    }
}

pub(crate) fn state_index_at(transitions: &[Transition], t: f64) -> Option<usize> {
    if transitions.is_empty() {
        return None;
    }
    // samples before the first transition belong to the first state
    Some(transitions.iter().rposition(|tr| tr.t_start <= t).unwrap_or(0))
}

fn validate_transitions(transitions: &[Transition], samples: &[WrenchSample]) -> Result<(), SignalError> {
    if transitions.is_empty() {
        return Err(SignalError::MissingTransitions);
    }
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return Err(SignalError::InvalidTransitions("trial has no samples".into()));
    };
    for tr in transitions {
        if !tr.t_start.is_finite() || tr.t_start < first.t || tr.t_start > last.t {
            return Err(SignalError::InvalidTransitions(format!(
                "'{}' at {} lies outside [{}, {}]",
                tr.state, tr.t_start, first.t, last.t
            )));
        }
    }
    if transitions.windows(2).any(|w| w[1].t_start < w[0].t_start) {
        return Err(SignalError::InvalidTransitions("transitions are not time-ordered".into()));
    }
    Ok(())
}

/// The samples of one state of a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSegment {
    pub state: String,
    pub samples: Vec<WrenchSample>,
}

impl StateSegment {
    pub fn t_start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }
}

/// Splits a trial into per-state segments spanning `[t_start, next t_start)`.
///
/// Samples recorded before the first transition are attached to the first
/// state so that the segments always partition the trial.
pub fn segment_states(trial: &WrenchTrial) -> Result<Vec<StateSegment>, SignalError> {
    if trial.transitions.is_empty() {
        return Err(SignalError::MissingTransitions);
    }
    let mut segments: Vec<StateSegment> = trial
        .transitions
        .iter()
        .map(|tr| StateSegment { state: tr.state.clone(), samples: Vec::new() })
        .collect();
    for s in &trial.samples {
        let idx = state_index_at(&trial.transitions, s.t).expect("transitions non-empty");
        segments[idx].samples.push(*s);
    }
    if let Some(empty) = segments.iter().find(|s| s.samples.is_empty()) {
        return Err(SignalError::EmptySegment(empty.state.clone()));
    }
    Ok(segments)
}
