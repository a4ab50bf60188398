//! Motion-composition layer: ordered pairs of primitives.

use crate::signal::Axis;
use crate::symbols::{spans_touch, McSymbol, Polarity, PrimSymbol, Symbol, TaggedLabel};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CompositionError {
    #[error("labels are not adjacent: {0}")]
    NonAdjacent(String),
    #[error("expected a {expected} label, got {got}")]
    WrongLayer { expected: &'static str, got: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionComposition {
    pub symbol: McSymbol,
    /// One part for an end-of-state singleton, two otherwise.
    pub parts: Vec<TaggedLabel>,
    pub t_start: f64,
    pub t_end: f64,
    pub amplitude: f64,
    pub axis: Axis,
}

impl MotionComposition {
    pub fn tagged(&self) -> TaggedLabel {
        TaggedLabel::new(Symbol::Mc(self.symbol), self.t_start, self.t_end, self.amplitude, self.axis)
    }
}

/// The MC decision table. First matching rule wins.
pub fn compose_symbols(a: PrimSymbol, b: PrimSymbol) -> McSymbol {
    use Polarity::*;
    let contact = (a.is_impulse() && b.is_graded())
        || (b.is_impulse() && a.is_graded())
        || matches!((a, b), (PrimSymbol::Pimp, PrimSymbol::Nimp) | (PrimSymbol::Nimp, PrimSymbol::Pimp));
    if contact {
        return McSymbol::Contact;
    }
    if a.is_graded() && b.is_graded() {
        return match (a.polarity(), b.polarity()) {
            (Positive, Positive) => McSymbol::Increase,
            (Negative, Negative) => McSymbol::Decrease,
            _ => McSymbol::Adjust,
        };
    }
    if a == PrimSymbol::Const && b == PrimSymbol::Const {
        return McSymbol::Constant;
    }
    McSymbol::Unstable
}

pub(crate) fn check_pair(a: &TaggedLabel, b: &TaggedLabel) -> Result<(), CompositionError> {
    if a.axis != b.axis {
        return Err(CompositionError::NonAdjacent(format!("axes {} and {}", a.axis, b.axis)));
    }
    if !spans_touch(a.t_end, b.t_start) {
        return Err(CompositionError::NonAdjacent(format!("span ends at {} but next starts at {}", a.t_end, b.t_start)));
    }
    Ok(())
}

fn prim(l: &TaggedLabel) -> Result<PrimSymbol, CompositionError> {
    match l.symbol {
        Symbol::Prim(p) => Ok(p),
        other => Err(CompositionError::WrongLayer { expected: "PRIM", got: other.to_string() }),
    }
}

pub fn compose(p1: &TaggedLabel, p2: &TaggedLabel) -> Result<MotionComposition, CompositionError> {
    let (a, b) = (prim(p1)?, prim(p2)?);
    check_pair(p1, p2)?;
    Ok(MotionComposition {
        symbol: compose_symbols(a, b),
        parts: vec![*p1, *p2],
        t_start: p1.t_start,
        t_end: p2.t_end,
        amplitude: p1.amplitude.max(p2.amplitude),
        axis: p1.axis,
    })
}

/// End-of-state singleton: classified as the pair of the primitive with
/// itself, spanning the primitive alone.
pub fn promote_single(p: &TaggedLabel) -> Result<MotionComposition, CompositionError> {
    let a = prim(p)?;
    Ok(MotionComposition {
        symbol: compose_symbols(a, a),
        parts: vec![*p],
        t_start: p.t_start,
        t_end: p.t_end,
        amplitude: p.amplitude,
        axis: p.axis,
    })
}

/// Buffers one label until its partner arrives. Pairs are disjoint:
/// (1,2), (3,4), ...
#[derive(Debug, Clone, Default)]
pub struct PairBuffer {
    held: Option<TaggedLabel>,
}

impl PairBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: TaggedLabel) -> Option<(TaggedLabel, TaggedLabel)> {
        match self.held.take() {
            Some(first) => Some((first, label)),
            None => {
                self.held = Some(label);
                None
            }
        }
    }

    pub fn flush(&mut self) -> Option<TaggedLabel> {
        self.held.take()
    }
}

/// Composes a filtered primitive sentence of one state.
pub fn compose_sequence(prims: &[TaggedLabel]) -> Result<Vec<MotionComposition>, CompositionError> {
    let mut buf = PairBuffer::new();
    let mut out = Vec::with_capacity(prims.len() / 2 + 1);
    for p in prims {
        if let Some((a, b)) = buf.push(*p) {
            out.push(compose(&a, &b)?);
        }
    }
    if let Some(single) = buf.flush() {
        out.push(promote_single(&single)?);
    }
    Ok(out)
}
