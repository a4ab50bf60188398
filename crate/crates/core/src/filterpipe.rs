//! Between-layer reduction of label streams.
//!
//! Two rules run left to right until nothing changes:
//!
//! * R1: adjacent labels with the same symbol merge (span union, max amplitude).
//! * R2: a label is absorbed into an adjacent neighbor whose amplitude and
//!   duration are both at least `merge_ratio` times its own. The neighbor
//!   keeps its symbol and amplitude and takes the union of the spans.
//!
//! A pipe keeps its pending labels at the fixpoint after every push. Any
//! pending label can still be absorbed by a large enough future neighbor,
//! so labels only leave the pipe on [`FilterPipe::flush`] at the end of a
//! state; [`FilterPipe::pending`] is the provisional view in between.

use crate::signal::Axis;
use crate::symbols::{Layer, TaggedLabel};
use thiserror::Error;

pub const DEFAULT_MERGE_RATIO: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("label starting at {start} precedes the pending tail ending at {tail_end}")]
    OutOfOrder { start: f64, tail_end: f64 },
    #[error("pipe carries {expected} labels, got {got}")]
    LayerMismatch { expected: Layer, got: Layer },
    #[error("pipe carries axis {expected}, got {got}")]
    AxisMismatch { expected: Axis, got: Axis },
    #[error("merge ratio must be finite and > 1, got {0}")]
    InvalidRatio(f64),
}

fn absorbs(neighbor: &TaggedLabel, label: &TaggedLabel, ratio: f64) -> bool {
    neighbor.amplitude >= ratio * label.amplitude && neighbor.duration() >= ratio * label.duration()
}

fn widen(into: &mut TaggedLabel, other: &TaggedLabel) {
    into.t_start = into.t_start.min(other.t_start);
    into.t_end = into.t_end.max(other.t_end);
}

/// One R1 sweep followed by one R2 sweep. Returns whether anything merged.
pub fn merge_pass(labels: &mut Vec<TaggedLabel>, ratio: f64) -> bool {
    let before = labels.len();

    let mut i = 0;
    while i + 1 < labels.len() {
        if labels[i].symbol == labels[i + 1].symbol {
            let next = labels.remove(i + 1);
            widen(&mut labels[i], &next);
            labels[i].amplitude = labels[i].amplitude.max(next.amplitude);
        } else {
            i += 1;
        }
    }

    let mut i = 0;
    while i < labels.len() && labels.len() > 1 {
        if i > 0 && absorbs(&labels[i - 1], &labels[i], ratio) {
            let gone = labels.remove(i);
            widen(&mut labels[i - 1], &gone);
        } else if i + 1 < labels.len() && absorbs(&labels[i + 1], &labels[i], ratio) {
            let gone = labels.remove(i);
            widen(&mut labels[i], &gone);
        } else {
            i += 1;
        }
    }

    labels.len() != before
}

pub fn reduce_to_fixpoint(labels: &mut Vec<TaggedLabel>, ratio: f64) {
    while merge_pass(labels, ratio) {}
}

/// Filter stage for one (layer, axis) chain.
#[derive(Debug, Clone)]
pub struct FilterPipe {
    layer: Layer,
    axis: Axis,
    ratio: f64,
    pending: Vec<TaggedLabel>,
}

impl FilterPipe {
    pub fn new(layer: Layer, axis: Axis, ratio: f64) -> Result<Self, FilterError> {
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(FilterError::InvalidRatio(ratio));
        }
        Ok(Self { layer, axis, ratio, pending: Vec::new() })
    }

    pub fn layer(&self) -> Layer {
        self.layer
    }

    /// Accepts one label and reduces the pending labels to the fixpoint.
    pub fn push(&mut self, label: TaggedLabel) -> Result<(), FilterError> {
        if label.layer() != self.layer {
            return Err(FilterError::LayerMismatch { expected: self.layer, got: label.layer() });
        }
        if label.axis != self.axis {
            return Err(FilterError::AxisMismatch { expected: self.axis, got: label.axis });
        }
        if let Some(tail) = self.pending.last() {
            let tol = 1e-9 * tail.t_end.abs().max(1.0);
            if label.t_start < tail.t_end - tol {
                return Err(FilterError::OutOfOrder { start: label.t_start, tail_end: tail.t_end });
            }
        }
        self.pending.push(label);
        reduce_to_fixpoint(&mut self.pending, self.ratio);
        Ok(())
    }

    /// Current reduced labels, not yet final.
    pub fn pending(&self) -> &[TaggedLabel] {
        &self.pending
    }

    /// Emits every pending label; the pipe is empty afterwards.
    pub fn flush(&mut self) -> Vec<TaggedLabel> {
        reduce_to_fixpoint(&mut self.pending, self.ratio);
        std::mem::take(&mut self.pending)
    }
}

/// Filters a whole time-ordered sequence through a fresh pipe.
pub fn filter_labels(labels: &[TaggedLabel], ratio: f64) -> Result<Vec<TaggedLabel>, FilterError> {
    let Some(first) = labels.first() else {
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(FilterError::InvalidRatio(ratio));
        }
        return Ok(Vec::new());
    };
    let mut pipe = FilterPipe::new(first.layer(), first.axis, ratio)?;
    for l in labels {
        pipe.push(*l)?;
    }
    Ok(pipe.flush())
}
