//! Low-level behavior layer: ordered pairs of motion compositions.

use crate::compositions::{check_pair, CompositionError, PairBuffer};
use crate::signal::Axis;
use crate::symbols::{LlbSymbol, McSymbol, Symbol, TaggedLabel};

#[derive(Debug, Clone, PartialEq)]
pub struct LowLevelBehavior {
    pub symbol: LlbSymbol,
    pub parts: Vec<TaggedLabel>,
    pub t_start: f64,
    pub t_end: f64,
    pub amplitude: f64,
    pub axis: Axis,
}

impl LowLevelBehavior {
    pub fn tagged(&self) -> TaggedLabel {
        TaggedLabel::new(Symbol::Llb(self.symbol), self.t_start, self.t_end, self.amplitude, self.axis)
    }
}

/// The LLB decision table. Two adjustments form a shift only when the
/// second one is strictly larger.
pub fn behave_symbols(a: McSymbol, a_amp: f64, b: McSymbol, b_amp: f64) -> LlbSymbol {
    use McSymbol::*;
    match (a, b) {
        (Increase, Increase) => LlbSymbol::Push,
        (Decrease, Decrease) => LlbSymbol::Pull,
        (Constant, Constant) => LlbSymbol::Fixed,
        (Contact, Contact) => LlbSymbol::Contact,
        (Adjust, Adjust) if b_amp > a_amp => LlbSymbol::Shift,
        (Adjust, Adjust) => LlbSymbol::Alignment,
        _ => LlbSymbol::Noise,
    }
}

fn mc(l: &TaggedLabel) -> Result<McSymbol, CompositionError> {
    match l.symbol {
        Symbol::Mc(m) => Ok(m),
        other => Err(CompositionError::WrongLayer { expected: "MC", got: other.to_string() }),
    }
}

pub fn behave(m1: &TaggedLabel, m2: &TaggedLabel) -> Result<LowLevelBehavior, CompositionError> {
    let (a, b) = (mc(m1)?, mc(m2)?);
    check_pair(m1, m2)?;
    Ok(LowLevelBehavior {
        symbol: behave_symbols(a, m1.amplitude, b, m2.amplitude),
        parts: vec![*m1, *m2],
        t_start: m1.t_start,
        t_end: m2.t_end,
        amplitude: m1.amplitude.max(m2.amplitude),
        axis: m1.axis,
    })
}

/// End-of-state singleton, mapped as the homogeneous pair
/// (INCREASE→PUSH, ADJUST→ALIGNMENT, UNSTABLE→NOISE, ...).
pub fn promote_single(m: &TaggedLabel) -> Result<LowLevelBehavior, CompositionError> {
    let a = mc(m)?;
    Ok(LowLevelBehavior {
        symbol: behave_symbols(a, m.amplitude, a, m.amplitude),
        parts: vec![*m],
        t_start: m.t_start,
        t_end: m.t_end,
        amplitude: m.amplitude,
        axis: m.axis,
    })
}

pub fn behave_sequence(mcs: &[TaggedLabel]) -> Result<Vec<LowLevelBehavior>, CompositionError> {
    let mut buf = PairBuffer::new();
    let mut out = Vec::with_capacity(mcs.len() / 2 + 1);
    for m in mcs {
        if let Some((a, b)) = buf.push(*m) {
            out.push(behave(&a, &b)?);
        }
    }
    if let Some(single) = buf.flush() {
        out.push(promote_single(&single)?);
    }
    Ok(out)
}
