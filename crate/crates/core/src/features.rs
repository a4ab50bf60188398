//! Fixed-length ordinal feature vectors from per-state grammars.
//!
//! A row concatenates, for each arm (sorted by id), each slot, each layer
//! and each axis, `width` ordinal codes. Widths are fitted on a corpus as
//! the longest sentence seen for that (arm, slot, layer). Complete
//! sentences are extended by repeating their last symbol (or the layer's
//! neutral symbol when empty); sentences still being written are padded
//! with the pad code `0`.

use crate::signal::{Axis, Outcome};
use crate::symbols::{Layer, Symbol, TaggedLabel};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

pub const PAD_CODE: u16 = 0;

/// Slot name used by the per-state regime, where every row is one state.
pub const STATE_SLOT: &str = "state";

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("every sentence is empty")]
    AllEmpty,
    #[error("inconsistent alphabet: {0}")]
    InconsistentAlphabet(String),
    #[error("inconsistent arms: {0}")]
    InconsistentArms(String),
    #[error("no trials to encode")]
    EmptyCorpus,
    #[error("row has {got} features, layout expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("malformed feature file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// One row per state of a nominal trial, labeled with the state name.
    NominalState,
    /// One row per trial, labeled with its outcome.
    Abnormality,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::NominalState => "nominal-state",
            Regime::Abnormality => "abnormality",
        })
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nominal-state" | "nominal" | "state" => Ok(Regime::NominalState),
            "abnormality" | "abnormal" | "outcome" => Ok(Regime::Abnormality),
            _ => Err(format!("unknown regime '{s}' (nominal-state | abnormality)")),
        }
    }
}

/// The symbols one axis produced at one layer during one state.
#[derive(Debug, Clone, PartialEq)]
pub struct GrammarSentence {
    pub axis: Axis,
    pub layer: Layer,
    pub symbols: Vec<Symbol>,
}

/// Labels of one state, indexed `[layer][axis]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateGrammar {
    pub state: String,
    pub t_start: f64,
    pub t_end: f64,
    /// False for a provisional snapshot of a state still in progress.
    pub complete: bool,
    pub sentences: [[Vec<TaggedLabel>; 6]; 3],
}

impl StateGrammar {
    pub fn empty(state: &str, t_start: f64, complete: bool) -> Self {
        Self { state: state.into(), t_start, t_end: t_start, complete, sentences: Default::default() }
    }

    pub fn sentence(&self, layer: Layer, axis: Axis) -> &[TaggedLabel] {
        &self.sentences[layer.index()][axis.index()]
    }

    pub fn symbols(&self, layer: Layer, axis: Axis) -> Vec<Symbol> {
        self.sentence(layer, axis).iter().map(|l| l.symbol).collect()
    }

    pub fn grammar_sentence(&self, layer: Layer, axis: Axis) -> GrammarSentence {
        GrammarSentence { axis, layer, symbols: self.symbols(layer, axis) }
    }
}

/// All state grammars of one arm of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialGrammar {
    pub key: String,
    pub arm_id: String,
    pub outcome: Outcome,
    pub complete: bool,
    pub states: Vec<StateGrammar>,
}

impl TrialGrammar {
    /// Labels of every state with the given name, concatenated.
    fn slot_labels(&self, slot: &str, layer: Layer, axis: Axis) -> Vec<Symbol> {
        self.states.iter().filter(|s| s.state == slot).flat_map(|s| s.symbols(layer, axis)).collect()
    }

    /// A slot is final when the trial is final or a later state has begun.
    fn slot_complete(&self, slot: &str) -> bool {
        if self.complete {
            return true;
        }
        match self.states.iter().rposition(|s| s.state == slot) {
            Some(i) => self.states[i].complete,
            None => false,
        }
    }
}

/// Extends `symbols` to `width` by repeating the last one, or fills with
/// `neutral` when empty. Longer input is truncated.
pub fn extend_sentence(symbols: &[Symbol], neutral: Symbol, width: usize) -> Vec<Symbol> {
    let fill = symbols.last().copied().unwrap_or(neutral);
    let mut out: Vec<Symbol> = symbols.iter().copied().take(width).collect();
    out.resize(width, fill);
    out
}

/// Brings the sentences of one layer and state to the longest length
/// across axes.
pub fn resample_sentences(sentences: &[GrammarSentence]) -> Result<Vec<GrammarSentence>, FeatureError> {
    let len = sentences.iter().map(|s| s.symbols.len()).max().unwrap_or(0);
    if len == 0 {
        return Err(FeatureError::AllEmpty);
    }
    sentences
        .iter()
        .map(|s| {
            check_layer(&s.symbols, s.layer)?;
            Ok(GrammarSentence { axis: s.axis, layer: s.layer, symbols: extend_sentence(&s.symbols, s.layer.neutral(), len) })
        })
        .collect()
}

fn check_layer(symbols: &[Symbol], layer: Layer) -> Result<(), FeatureError> {
    match symbols.iter().find(|s| s.layer() != layer) {
        Some(s) => Err(FeatureError::InconsistentAlphabet(format!("{} symbol {s} in a {layer} sentence", s.layer()))),
        None => Ok(()),
    }
}

/// Encodes one sentence. Complete sentences are extended, partial ones
/// are padded with [`PAD_CODE`].
pub fn encode_sentence(symbols: &[Symbol], layer: Layer, width: usize, complete: bool) -> Result<Vec<u16>, FeatureError> {
    check_layer(symbols, layer)?;
    if complete {
        Ok(extend_sentence(symbols, layer.neutral(), width).iter().map(|s| s.ordinal()).collect())
    } else {
        let mut codes: Vec<u16> = symbols.iter().take(width).map(|s| s.ordinal()).collect();
        codes.resize(width, PAD_CODE);
        Ok(codes)
    }
}

/// Column layout of a feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub regime: Regime,
    pub arms: Vec<String>,
    pub slots: Vec<String>,
    /// Sentence width per `(arm, slot, layer)`, arm-major.
    pub widths: Vec<usize>,
}

/// One column's coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub arm: String,
    pub slot: String,
    pub layer: Layer,
    pub axis: Axis,
    pub pos: usize,
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}:{}", self.arm, self.slot, self.layer, self.axis, self.pos)
    }
}

/// A decoded sentence; `None` marks pad codes.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSentence {
    pub arm: String,
    pub slot: String,
    pub layer: Layer,
    pub axis: Axis,
    pub symbols: Vec<Option<Symbol>>,
}

impl FeatureLayout {
    fn width_index(&self, arm: usize, slot: usize, layer: Layer) -> usize {
        (arm * self.slots.len() + slot) * 3 + layer.index()
    }

    pub fn width(&self, arm: usize, slot: usize, layer: Layer) -> usize {
        self.widths[self.width_index(arm, slot, layer)]
    }

    pub fn len(&self) -> usize {
        self.widths.iter().sum::<usize>() * 6
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn columns(&self) -> Vec<Column> {
        let mut cols = Vec::with_capacity(self.len());
        for (a, arm) in self.arms.iter().enumerate() {
            for (s, slot) in self.slots.iter().enumerate() {
                for layer in Layer::ALL {
                    for axis in Axis::ALL {
                        for pos in 0..self.width(a, s, layer) {
                            cols.push(Column { arm: arm.clone(), slot: slot.clone(), layer, axis, pos });
                        }
                    }
                }
            }
        }
        cols
    }

    /// Fits widths on a corpus of complete grammars.
    pub fn fit(grammars: &[TrialGrammar], regime: Regime) -> Result<Self, FeatureError> {
        let groups = group_trials(grammars)?;
        if groups.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        let arms: Vec<String> = groups[0].iter().map(|t| t.arm_id.clone()).collect();
        let mut slots: Vec<String> = Vec::new();
        match regime {
            Regime::NominalState => slots.push(STATE_SLOT.into()),
            Regime::Abnormality => {
                for t in grammars {
                    for s in &t.states {
                        if !slots.contains(&s.state) {
                            slots.push(s.state.clone());
                        }
                    }
                }
            }
        }
        let mut layout = FeatureLayout { regime, arms, slots, widths: Vec::new() };
        layout.widths = vec![1; layout.arms.len() * layout.slots.len() * 3];

        for group in &groups {
            for (a, trial) in group.iter().enumerate() {
                for layer in Layer::ALL {
                    for axis in Axis::ALL {
                        match regime {
                            Regime::NominalState => {
                                if trial.outcome != Outcome::Nominal {
                                    continue;
                                }
                                for st in &trial.states {
                                    let i = layout.width_index(a, 0, layer);
                                    layout.widths[i] = layout.widths[i].max(st.sentence(layer, axis).len());
                                }
                            }
                            Regime::Abnormality => {
                                for s in 0..layout.slots.len() {
                                    let n = trial.slot_labels(&layout.slots[s], layer, axis).len();
                                    let i = layout.width_index(a, s, layer);
                                    layout.widths[i] = layout.widths[i].max(n);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(layout)
    }

    fn check_arms<'a, T>(&self, arms: &[&'a T], id: impl Fn(&T) -> &str) -> Result<(), FeatureError> {
        let got: Vec<&str> = arms.iter().map(|t| id(t)).collect();
        if got.len() != self.arms.len() || got.iter().zip(&self.arms).any(|(g, a)| g != a) {
            return Err(FeatureError::InconsistentArms(format!("layout arms {:?}, got {:?}", self.arms, got)));
        }
        Ok(())
    }

    /// Row for one state in the per-state regime; `arms` sorted by arm id
    /// and paired with it.
    pub fn encode_state(&self, arms: &[(&str, &StateGrammar)]) -> Result<Vec<u16>, FeatureError> {
        let names: Vec<&(&str, &StateGrammar)> = arms.iter().collect();
        self.check_arms(&names, |(id, _)| id)?;
        let mut row = Vec::with_capacity(self.len());
        for (a, (_, st)) in arms.iter().enumerate() {
            for layer in Layer::ALL {
                let width = self.width(a, 0, layer);
                for axis in Axis::ALL {
                    row.extend(encode_sentence(&st.symbols(layer, axis), layer, width, st.complete)?);
                }
            }
        }
        Ok(row)
    }

    /// Row for one trial in the abnormality regime; `arms` sorted by arm id.
    pub fn encode_trial(&self, arms: &[&TrialGrammar]) -> Result<Vec<u16>, FeatureError> {
        self.check_arms(arms, |t| &t.arm_id)?;
        let mut row = Vec::with_capacity(self.len());
        for (a, trial) in arms.iter().enumerate() {
            for (s, slot) in self.slots.iter().enumerate() {
                let complete = trial.slot_complete(slot);
                for layer in Layer::ALL {
                    let width = self.width(a, s, layer);
                    for axis in Axis::ALL {
                        row.extend(encode_sentence(&trial.slot_labels(slot, layer, axis), layer, width, complete)?);
                    }
                }
            }
        }
        Ok(row)
    }

    pub fn decode(&self, row: &[u16]) -> Result<Vec<DecodedSentence>, FeatureError> {
        if row.len() != self.len() {
            return Err(FeatureError::LengthMismatch { expected: self.len(), got: row.len() });
        }
        let mut out = Vec::new();
        let mut at = 0;
        for (a, arm) in self.arms.iter().enumerate() {
            for (s, slot) in self.slots.iter().enumerate() {
                for layer in Layer::ALL {
                    let width = self.width(a, s, layer);
                    for axis in Axis::ALL {
                        let mut symbols = Vec::with_capacity(width);
                        for &code in &row[at..at + width] {
                            symbols.push(if code == PAD_CODE {
                                None
                            } else {
                                Some(Symbol::from_ordinal(layer, code).ok_or_else(|| {
                                    FeatureError::InconsistentAlphabet(format!("code {code} outside the {layer} alphabet"))
                                })?)
                            });
                        }
                        at += width;
                        out.push(DecodedSentence { arm: arm.clone(), slot: slot.clone(), layer, axis, symbols });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Checks that every code is the pad code or a member of its column's alphabet.
    pub fn validate_row(&self, row: &[u16]) -> Result<(), FeatureError> {
        self.decode(row).map(|_| ())
    }
}

/// Groups arm grammars by trial key in first-seen order; arms within a
/// group are sorted by id and every group must carry the same arms.
pub fn group_trials(grammars: &[TrialGrammar]) -> Result<Vec<Vec<&TrialGrammar>>, FeatureError> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_key: BTreeMap<&str, Vec<&TrialGrammar>> = BTreeMap::new();
    for t in grammars {
        let entry = by_key.entry(&t.key).or_default();
        if entry.is_empty() {
            order.push(&t.key);
        }
        if entry.iter().any(|o| o.arm_id == t.arm_id) {
            return Err(FeatureError::InconsistentArms(format!("trial '{}' has arm '{}' twice", t.key, t.arm_id)));
        }
        entry.push(t);
    }
    let mut groups = Vec::with_capacity(order.len());
    let mut arm_set: Option<BTreeSet<&str>> = None;
    for key in order {
        let mut group = by_key.remove(key).expect("key recorded");
        group.sort_by(|a, b| a.arm_id.cmp(&b.arm_id));
        let arms: BTreeSet<&str> = group.iter().map(|t| t.arm_id.as_str()).collect();
        match &arm_set {
            None => arm_set = Some(arms),
            Some(expected) if *expected != arms => {
                return Err(FeatureError::InconsistentArms(format!(
                    "trial '{key}' has arms {arms:?}, expected {expected:?}"
                )))
            }
            Some(_) => {}
        }
        if group.iter().any(|t| t.outcome != group[0].outcome) {
            return Err(FeatureError::InconsistentArms(format!("arms of trial '{key}' disagree on the outcome")));
        }
        groups.push(group);
    }
    Ok(groups)
}

/// Ordinal feature rows with one class label each.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub layout: FeatureLayout,
    pub rows: Vec<Vec<u16>>,
    pub labels: Vec<String>,
    /// Trial key of each row.
    pub keys: Vec<String>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.layout.len()
    }

    /// Distinct labels, sorted.
    pub fn classes(&self) -> Vec<String> {
        self.labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.iter().map(|&c| f64::from(c)).collect()).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), FeatureError> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = vec!["key".into()];
        header.extend(self.layout.columns().iter().map(|c| c.to_string()));
        header.push("label".into());
        w.write_record(&header)?;
        for ((row, label), key) in self.rows.iter().zip(&self.labels).zip(&self.keys) {
            let mut rec: Vec<String> = Vec::with_capacity(row.len() + 2);
            rec.push(key.clone());
            rec.extend(row.iter().map(|c| c.to_string()));
            rec.push(label.clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, regime: Regime) -> Result<Self, FeatureError> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let n = header.len();
        if n < 2 || &header[0] != "key" || &header[n - 1] != "label" {
            return Err(FeatureError::Malformed("header must start with 'key' and end with 'label'".into()));
        }
        let columns: Vec<Column> = header.iter().skip(1).take(n - 2).map(parse_column).collect::<Result<_, _>>()?;
        let layout = layout_from_columns(&columns, regime)?;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut keys = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != n {
                return Err(FeatureError::Malformed(format!("row {} has {} fields, header has {n}", i + 1, rec.len())));
            }
            let row: Vec<u16> = rec
                .iter()
                .skip(1)
                .take(n - 2)
                .map(|v| v.trim().parse::<u16>().map_err(|e| FeatureError::Malformed(format!("row {}: '{v}': {e}", i + 1))))
                .collect::<Result<_, _>>()?;
            layout.validate_row(&row)?;
            keys.push(rec[0].to_string());
            labels.push(rec[n - 1].to_string());
            rows.push(row);
        }
        Ok(FeatureMatrix { layout, rows, labels, keys })
    }
}

fn parse_column(text: &str) -> Result<Column, FeatureError> {
    let bad = || FeatureError::Malformed(format!("bad column name '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 5 {
        return Err(bad());
    }
    Ok(Column {
        arm: parts[0].into(),
        slot: parts[1].into(),
        layer: parts[2].parse().map_err(|_| bad())?,
        axis: parts[3].parse().map_err(|_| bad())?,
        pos: parts[4].parse().map_err(|_| bad())?,
    })
}

fn layout_from_columns(columns: &[Column], regime: Regime) -> Result<FeatureLayout, FeatureError> {
    let mut arms: Vec<String> = Vec::new();
    let mut slots: Vec<String> = Vec::new();
    for c in columns {
        if !arms.contains(&c.arm) {
            arms.push(c.arm.clone());
        }
        if !slots.contains(&c.slot) {
            slots.push(c.slot.clone());
        }
    }
    let mut layout = FeatureLayout { regime, arms, slots, widths: Vec::new() };
    layout.widths = vec![0; layout.arms.len() * layout.slots.len() * 3];
    for c in columns {
        if c.axis == Axis::Fx {
            let a = layout.arms.iter().position(|x| *x == c.arm).expect("seen");
            let s = layout.slots.iter().position(|x| *x == c.slot).expect("seen");
            let i = layout.width_index(a, s, c.layer);
            layout.widths[i] = layout.widths[i].max(c.pos + 1);
        }
    }
    if layout.columns() != columns {
        return Err(FeatureError::Malformed("columns are not in canonical arm/slot/layer/axis/position order".into()));
    }
    Ok(layout)
}

/// Builds the feature matrix of a corpus of complete grammars.
pub fn build_features(grammars: &[TrialGrammar], regime: Regime) -> Result<FeatureMatrix, FeatureError> {
    let layout = FeatureLayout::fit(grammars, regime)?;
    build_with_layout(grammars, layout)
}

/// Encodes a corpus against an existing layout (for example a trained model's).
pub fn build_with_layout(grammars: &[TrialGrammar], layout: FeatureLayout) -> Result<FeatureMatrix, FeatureError> {
    let groups = group_trials(grammars)?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut keys = Vec::new();
    for group in &groups {
        match layout.regime {
            Regime::NominalState => {
                if group[0].outcome != Outcome::Nominal {
                    continue;
                }
                let n = group[0].states.len();
                for t in group.iter() {
                    let same = t.states.len() == n
                        && t.states.iter().zip(&group[0].states).all(|(a, b)| a.state == b.state);
                    if !same {
                        return Err(FeatureError::InconsistentArms(format!(
                            "arms of trial '{}' have different state sequences",
                            t.key
                        )));
                    }
                }
                for i in 0..n {
                    let arms: Vec<(&str, &StateGrammar)> = group.iter().map(|t| (t.arm_id.as_str(), &t.states[i])).collect();
                    rows.push(layout.encode_state(&arms)?);
                    labels.push(group[0].states[i].state.clone());
                    keys.push(group[0].key.clone());
                }
            }
            Regime::Abnormality => {
                rows.push(layout.encode_trial(group)?);
                labels.push(group[0].outcome.name().to_string());
                keys.push(group[0].key.clone());
            }
        }
    }
    Ok(FeatureMatrix { layout, rows, labels, keys })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{LlbSymbol, McSymbol, PrimSymbol};

    fn llb(symbols: &[LlbSymbol]) -> Vec<Symbol> {
        symbols.iter().map(|&s| Symbol::Llb(s)).collect()
    }

    #[test]
    fn resample_pads_with_last_symbol() {
        use LlbSymbol::*;
        let mut sentences: Vec<GrammarSentence> =
            Axis::ALL.iter().map(|&axis| GrammarSentence { axis, layer: Layer::Llb, symbols: llb(&[Push, Fixed, Fixed, Pull, Noise]) }).collect();
        sentences[0].symbols = llb(&[Push, Shift]);
        sentences[3].symbols.clear();
        let out = resample_sentences(&sentences).unwrap();
        assert!(out.iter().all(|s| s.symbols.len() == 5));
        assert_eq!(out[0].symbols, llb(&[Push, Shift, Shift, Shift, Shift]));
        assert_eq!(out[3].symbols, llb(&[Fixed; 5]));
        assert_eq!(out[1].symbols, sentences[1].symbols);
    }

    #[test]
    fn resample_rejects_all_empty_and_mixed_layers() {
        let empty: Vec<GrammarSentence> =
            Axis::ALL.iter().map(|&axis| GrammarSentence { axis, layer: Layer::Mc, symbols: vec![] }).collect();
        assert!(matches!(resample_sentences(&empty), Err(FeatureError::AllEmpty)));
        let mut mixed = empty.clone();
        mixed[0].symbols = vec![Symbol::Prim(PrimSymbol::Const)];
        assert!(matches!(resample_sentences(&mixed), Err(FeatureError::InconsistentAlphabet(_))));
    }

    #[test]
    fn partial_sentences_use_the_pad_code() {
        let s = vec![Symbol::Mc(McSymbol::Increase)];
        assert_eq!(encode_sentence(&s, Layer::Mc, 3, false).unwrap(), vec![2, 0, 0]);
        assert_eq!(encode_sentence(&s, Layer::Mc, 3, true).unwrap(), vec![2, 2, 2]);
        assert_eq!(encode_sentence(&[], Layer::Mc, 2, true).unwrap(), vec![4, 4]);
        assert_eq!(encode_sentence(&[], Layer::Mc, 2, false).unwrap(), vec![0, 0]);
        let long = vec![Symbol::Mc(McSymbol::Adjust); 5];
        assert_eq!(encode_sentence(&long, Layer::Mc, 2, true).unwrap(), vec![1, 1]);
    }

    #[test]
    fn column_names_round_trip() {
        let c = Column { arm: "right".into(), slot: "approach".into(), layer: Layer::Mc, axis: Axis::Ty, pos: 3 };
        assert_eq!(c.to_string(), "right:approach:MC:ty:3");
        assert_eq!(parse_column(&c.to_string()).unwrap(), c);
    }
}
