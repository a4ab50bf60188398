//! The three label alphabets and the layer-agnostic [`TaggedLabel`].
//!
//! Alphabet order is fixed; ordinal codes are `index + 1`, with `0`
//! reserved as the pad code in feature vectors.

use crate::signal::Axis;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    #[serde(rename = "PRIM")]
    Prim,
    #[serde(rename = "MC")]
    Mc,
    #[serde(rename = "LLB")]
    Llb,
}

impl Layer {
    pub const ALL: [Layer; 3] = [Layer::Prim, Layer::Mc, Layer::Llb];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Prim => "PRIM",
            Layer::Mc => "MC",
            Layer::Llb => "LLB",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn alphabet(self) -> Vec<Symbol> {
        match self {
            Layer::Prim => PrimSymbol::ALL.iter().map(|&s| Symbol::Prim(s)).collect(),
            Layer::Mc => McSymbol::ALL.iter().map(|&s| Symbol::Mc(s)).collect(),
            Layer::Llb => LlbSymbol::ALL.iter().map(|&s| Symbol::Llb(s)).collect(),
        }
    }

    /// Symbol used to fill an empty sentence.
    pub fn neutral(self) -> Symbol {
        match self {
            Layer::Prim => Symbol::Prim(PrimSymbol::Const),
            Layer::Mc => Symbol::Mc(McSymbol::Constant),
            Layer::Llb => Symbol::Llb(LlbSymbol::Fixed),
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Layer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "PRIM" | "PRIMITIVE" | "PRIMITIVES" => Ok(Layer::Prim),
            "MC" => Ok(Layer::Mc),
            "LLB" => Ok(Layer::Llb),
            _ => Err(format!("unknown layer '{s}'")),
        }
    }
}

macro_rules! alphabet {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal, $glyph:literal;)+ }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant,)+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant,)+];

            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $text,)+ }
            }

            /// Single-character glyph used in grammar maps.
            pub fn glyph(self) -> char {
                match self { $($name::$variant => $glyph,)+ }
            }

            pub fn ordinal(self) -> u16 {
                Self::ALL.iter().position(|&s| s == self).expect("in alphabet") as u16 + 1
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::ALL.iter().copied().find(|v| v.name() == s)
                    .ok_or_else(|| format!("unknown {} symbol '{s}'", stringify!($name)))
            }
        }
    };
}

alphabet! {
    /// Gradient band of a straight-line fit.
    PrimSymbol {
        Pimp => "PIMP", '^';
        Bpos => "BPOS", 'B';
        Mpos => "MPOS", 'M';
        Spos => "SPOS", 's';
        Const => "CONST", '-';
        Sneg => "SNEG", 'n';
        Mneg => "MNEG", 'm';
        Bneg => "BNEG", 'b';
        Nimp => "NIMP", 'v';
    }
}

alphabet! {
    /// Motion composition: a classified ordered pair of primitives.
    McSymbol {
        Adjust => "ADJUST", 'a';
        Increase => "INCREASE", 'i';
        Decrease => "DECREASE", 'd';
        Constant => "CONSTANT", 'c';
        Contact => "CONTACT", 'k';
        Unstable => "UNSTABLE", 'u';
    }
}

alphabet! {
    /// Low-level behavior: a classified ordered pair of compositions.
    LlbSymbol {
        Push => "PUSH", 'P';
        Pull => "PULL", 'L';
        Fixed => "FIXED", 'F';
        Contact => "CONTACT", 'C';
        Alignment => "ALIGNMENT", 'A';
        Shift => "SHIFT", 'S';
        Noise => "NOISE", 'N';
    }
}

/// Polarity of a primitive band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl PrimSymbol {
    pub fn polarity(self) -> Polarity {
        use PrimSymbol::*;
        match self {
            Pimp | Bpos | Mpos | Spos => Polarity::Positive,
            Const => Polarity::Neutral,
            Sneg | Mneg | Bneg | Nimp => Polarity::Negative,
        }
    }

    pub fn is_impulse(self) -> bool {
        matches!(self, PrimSymbol::Pimp | PrimSymbol::Nimp)
    }

    /// Small, medium or big band of either polarity.
    pub fn is_graded(self) -> bool {
        !self.is_impulse() && self != PrimSymbol::Const
    }

    /// The same band with opposite polarity.
    pub fn negated(self) -> Self {
        use PrimSymbol::*;
        match self {
            Pimp => Nimp,
            Bpos => Bneg,
            Mpos => Mneg,
            Spos => Sneg,
            Const => Const,
            Sneg => Spos,
            Mneg => Mpos,
            Bneg => Bpos,
            Nimp => Pimp,
        }
    }
}

/// A symbol of any layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Prim(PrimSymbol),
    Mc(McSymbol),
    Llb(LlbSymbol),
}

impl Symbol {
    pub fn layer(self) -> Layer {
        match self {
            Symbol::Prim(_) => Layer::Prim,
            Symbol::Mc(_) => Layer::Mc,
            Symbol::Llb(_) => Layer::Llb,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Symbol::Prim(s) => s.name(),
            Symbol::Mc(s) => s.name(),
            Symbol::Llb(s) => s.name(),
        }
    }

    pub fn ordinal(self) -> u16 {
        match self {
            Symbol::Prim(s) => s.ordinal(),
            Symbol::Mc(s) => s.ordinal(),
            Symbol::Llb(s) => s.ordinal(),
        }
    }

    pub fn glyph(self) -> char {
        match self {
            Symbol::Prim(s) => s.glyph(),
            Symbol::Mc(s) => s.glyph(),
            Symbol::Llb(s) => s.glyph(),
        }
    }

    /// Inverse of [`Symbol::ordinal`]; `None` for the pad code or out of range.
    pub fn from_ordinal(layer: Layer, code: u16) -> Option<Symbol> {
        let idx = usize::from(code).checked_sub(1)?;
        layer.alphabet().get(idx).copied()
    }

    pub fn parse(layer: Layer, s: &str) -> Result<Symbol, String> {
        Ok(match layer {
            Layer::Prim => Symbol::Prim(s.parse()?),
            Layer::Mc => Symbol::Mc(s.parse()?),
            Layer::Llb => Symbol::Llb(s.parse()?),
        })
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A symbol of one layer with its time span, amplitude and source axis.
///
/// Serializes as a flat `(layer, axis, symbol, t_start, t_end, amplitude)`
/// record; the layer disambiguates `CONTACT`, which exists in two alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "LabelRecord", try_from = "LabelRecord")]
pub struct TaggedLabel {
    pub symbol: Symbol,
    pub t_start: f64,
    pub t_end: f64,
    pub amplitude: f64,
    pub axis: Axis,
}

impl TaggedLabel {
    pub fn new(symbol: Symbol, t_start: f64, t_end: f64, amplitude: f64, axis: Axis) -> Self {
        Self { symbol, t_start, t_end, amplitude, axis }
    }

    pub fn layer(&self) -> Layer {
        self.symbol.layer()
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

#[derive(Serialize, Deserialize)]
struct LabelRecord {
    layer: Layer,
    axis: Axis,
    symbol: String,
    t_start: f64,
    t_end: f64,
    amplitude: f64,
}

impl From<TaggedLabel> for LabelRecord {
    fn from(l: TaggedLabel) -> Self {
        LabelRecord {
            layer: l.layer(),
            axis: l.axis,
            symbol: l.symbol.name().to_string(),
            t_start: l.t_start,
            t_end: l.t_end,
            amplitude: l.amplitude,
        }
    }
}

impl TryFrom<LabelRecord> for TaggedLabel {
    type Error = String;

    fn try_from(r: LabelRecord) -> Result<Self, Self::Error> {
        Ok(TaggedLabel::new(Symbol::parse(r.layer, &r.symbol)?, r.t_start, r.t_end, r.amplitude, r.axis))
    }
}

/// Tolerance used when checking that two spans touch.
pub(crate) fn spans_touch(end: f64, start: f64) -> bool {
    (end - start).abs() <= 1e-9 * end.abs().max(start.abs()).max(1.0)
}
